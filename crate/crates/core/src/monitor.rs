//! Per-sample scoring against a trained model: BMU distance, phase label and
//! threshold alarms, with per-batch phase trajectories.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::pipeline::HulsModel;
use crate::som::GridPos;

pub const DEFAULT_QUANTILE: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule", content = "value")]
pub enum AlarmRule {
    Fixed(f64),
    TrainQuantile(f64),
    TrainMeanPlus3Sigma,
}

impl Default for AlarmRule {
    fn default() -> Self {
        AlarmRule::TrainQuantile(DEFAULT_QUANTILE)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlarmPolicy {
    pub rule: AlarmRule,
    /// `None` until resolved against training scores (fixed rules resolve immediately).
    pub threshold: Option<f64>,
}

impl AlarmPolicy {
    pub fn new(rule: AlarmRule) -> Self {
        let threshold = match rule {
            AlarmRule::Fixed(t) => Some(t),
            _ => None,
        };
        AlarmPolicy { rule, threshold }
    }

    /// Resolves the threshold from the model's scores on raw training data.
    pub fn resolve(self, model: &HulsModel, training: &Dataset) -> Result<AlarmPolicy> {
        let threshold = resolve_threshold(model, training, self.rule)?;
        Ok(AlarmPolicy {
            rule: self.rule,
            threshold: Some(threshold),
        })
    }
}

impl Default for AlarmPolicy {
    fn default() -> Self {
        AlarmPolicy::new(AlarmRule::default())
    }
}

pub fn resolve_threshold(model: &HulsModel, training: &Dataset, rule: AlarmRule) -> Result<f64> {
    if let AlarmRule::Fixed(t) = rule {
        return Ok(t);
    }
    let scores = model.som.bmu_distances(&model.normalize(training)?)?;
    threshold_from_scores(&scores, rule)
}

/// Applies a rule to a set of training scores.
pub fn threshold_from_scores(scores: &[f64], rule: AlarmRule) -> Result<f64> {
    match rule {
        AlarmRule::Fixed(t) => Ok(t),
        _ if scores.is_empty() => Err(Error::EmptyDataset),
        AlarmRule::TrainQuantile(q) => {
            if !(0.0..=1.0).contains(&q) {
                return Err(Error::InvalidConfig(format!("quantile {q} outside [0, 1]")));
            }
            let mut sorted = scores.to_vec();
            sorted.sort_by(f64::total_cmp);
            Ok(quantile_sorted(&sorted, q))
        }
        AlarmRule::TrainMeanPlus3Sigma => {
            let n = scores.len() as f64;
            // shifted sum keeps a constant score set exact
            let s0 = scores[0];
            let mean = s0 + scores.iter().map(|s| s - s0).sum::<f64>() / n;
            let var = scores.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n;
            Ok(mean + 3.0 * var.sqrt())
        }
    }
}

/// Linear interpolation between order statistics at position `(n - 1) * q`.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = (sorted.len() - 1) as f64 * q;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub index: usize,
    pub batch: String,
    pub bmu: GridPos,
    pub score: f64,
    pub phase: u32,
    pub alarm: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonitoringTrace {
    pub threshold: f64,
    pub records: Vec<TraceRecord>,
}

/// Scores raw-unit samples. Each sample is handled independently.
pub fn score_stream(model: &HulsModel, data: &Dataset, policy: &AlarmPolicy) -> Result<MonitoringTrace> {
    let threshold = policy.threshold.ok_or(Error::UnresolvedPolicy)?;
    let normalized = model.normalize(data)?;
    let records = normalized
        .samples()
        .enumerate()
        .map(|(i, x)| {
            let bmu = model.som.find_bmu(x)?;
            Ok(TraceRecord {
                index: i,
                batch: data.batch_id(i).to_string(),
                bmu: bmu.pos,
                score: bmu.distance,
                phase: model.clusters.assign(bmu.pos)?,
                alarm: bmu.distance > threshold,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MonitoringTrace { threshold, records })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PhaseRun {
    pub batch: String,
    pub phase: u32,
    /// Index of the first sample of the run within the trace.
    pub start: usize,
    pub duration: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchSummary {
    pub batch: String,
    pub samples: usize,
    pub alarms: usize,
    pub max_score: f64,
    /// Lengths of consecutive alarm runs: samples until the score falls back
    /// under the threshold.
    pub recovery_times: Vec<usize>,
}

impl BatchSummary {
    pub fn alarm_rate(&self) -> f64 {
        self.alarms as f64 / self.samples as f64
    }
}

impl MonitoringTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn phases(&self) -> Vec<u32> {
        self.records.iter().map(|r| r.phase).collect()
    }

    /// Replaces phase labels with a centered majority vote over `window`
    /// samples within each batch; ties keep the original label.
    pub fn smoothed(&self, window: usize) -> MonitoringTrace {
        let mut out = self.clone();
        let half = window / 2;
        for (start, end) in self.batch_ranges() {
            for i in start..end {
                let lo = i.saturating_sub(half).max(start);
                let hi = (i + half + 1).min(end);
                let mut counts: Vec<(u32, usize)> = Vec::new();
                for r in &self.records[lo..hi] {
                    match counts.iter_mut().find(|(p, _)| *p == r.phase) {
                        Some(c) => c.1 += 1,
                        None => counts.push((r.phase, 1)),
                    }
                }
                let own = self.records[i].phase;
                let own_count = counts.iter().find(|(p, _)| *p == own).unwrap().1;
                let best = counts.iter().max_by_key(|(_, n)| *n).unwrap();
                if best.1 > own_count {
                    out.records[i].phase = best.0;
                }
            }
        }
        out
    }

    fn batch_ranges(&self) -> Vec<(usize, usize)> {
        let mut ranges: Vec<(usize, usize)> = Vec::new();
        for (i, r) in self.records.iter().enumerate() {
            match ranges.last_mut() {
                Some(last) if self.records[last.0].batch == r.batch => last.1 = i + 1,
                _ => ranges.push((i, i + 1)),
            }
        }
        ranges
    }

    /// Run-length encoding of phase labels, restarted at every batch boundary.
    pub fn phase_trajectory(&self) -> Vec<PhaseRun> {
        let mut runs: Vec<PhaseRun> = Vec::new();
        for (i, r) in self.records.iter().enumerate() {
            match runs.last_mut() {
                Some(run) if run.batch == r.batch && run.phase == r.phase => run.duration += 1,
                _ => runs.push(PhaseRun {
                    batch: r.batch.clone(),
                    phase: r.phase,
                    start: i,
                    duration: 1,
                }),
            }
        }
        runs
    }

    pub fn batch_summaries(&self) -> Vec<BatchSummary> {
        self.batch_ranges()
            .into_iter()
            .map(|(start, end)| {
                let recs = &self.records[start..end];
                let mut recovery_times = Vec::new();
                let mut run = 0;
                for r in recs {
                    if r.alarm {
                        run += 1;
                    } else if run > 0 {
                        recovery_times.push(run);
                        run = 0;
                    }
                }
                if run > 0 {
                    recovery_times.push(run);
                }
                BatchSummary {
                    batch: recs[0].batch.clone(),
                    samples: recs.len(),
                    alarms: recs.iter().filter(|r| r.alarm).count(),
                    max_score: recs.iter().map(|r| r.score).fold(0.0, f64::max),
                    recovery_times,
                }
            })
            .collect()
    }

    /// `index,batch,e,c,alarm`
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "index,batch,e,c,alarm")?;
        for r in &self.records {
            writeln!(w, "{},{},{},{},{}", r.index, r.batch, r.score, r.phase, u8::from(r.alarm))?;
        }
        Ok(())
    }

    /// `batch,samples,alarms,alarm_rate,max_e,longest_alarm_run`
    pub fn write_summary_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "batch,samples,alarms,alarm_rate,max_e,longest_alarm_run")?;
        for s in self.batch_summaries() {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                s.batch,
                s.samples,
                s.alarms,
                s.alarm_rate(),
                s.max_score,
                s.recovery_times.iter().max().copied().unwrap_or(0)
            )?;
        }
        Ok(())
    }

    /// `batch,phase,start,duration`
    pub fn write_phases_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "batch,phase,start,duration")?;
        for p in self.phase_trajectory() {
            writeln!(w, "{},{},{},{}", p.batch, p.phase, p.start, p.duration)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace(batches: &[&str], phases: &[u32], alarms: &[bool]) -> MonitoringTrace {
        MonitoringTrace {
            threshold: 1.0,
            records: phases
                .iter()
                .enumerate()
                .map(|(i, &p)| TraceRecord {
                    index: i,
                    batch: batches[i].to_string(),
                    bmu: GridPos::new(0, 0),
                    score: if alarms[i] { 2.0 } else { 0.5 },
                    phase: p,
                    alarm: alarms[i],
                })
                .collect(),
        }
    }

    #[test]
    fn thresholds_by_rule() {
        assert_eq!(threshold_from_scores(&[], AlarmRule::Fixed(0.5)).unwrap(), 0.5);
        assert_eq!(threshold_from_scores(&[0.3; 10], AlarmRule::TrainMeanPlus3Sigma).unwrap(), 0.3);
        let scores: Vec<f64> = (0..100).map(f64::from).collect();
        let q = threshold_from_scores(&scores, AlarmRule::TrainQuantile(0.99)).unwrap();
        assert!((q - 98.01).abs() < 1e-9);
        assert!(threshold_from_scores(&[], AlarmRule::TrainQuantile(0.99)).is_err());
        assert!(threshold_from_scores(&[1.0], AlarmRule::TrainQuantile(1.5)).is_err());
    }

    #[test]
    fn policy_resolution_state() {
        assert_eq!(AlarmPolicy::new(AlarmRule::Fixed(0.5)).threshold, Some(0.5));
        assert_eq!(AlarmPolicy::default().threshold, None);
        assert_eq!(AlarmPolicy::default().rule, AlarmRule::TrainQuantile(0.99));
    }

    #[test]
    fn run_length_encoding() {
        let t = trace(&["A"; 10], &[4; 10], &[false; 10]);
        let runs = t.phase_trajectory();
        assert_eq!(runs.len(), 1);
        assert_eq!(runs[0].duration, 10);

        let t = trace(&["A"; 6], &[1, 1, 2, 2, 2, 1], &[false; 6]);
        let runs: Vec<(u32, usize)> = t.phase_trajectory().iter().map(|r| (r.phase, r.duration)).collect();
        assert_eq!(runs, vec![(1, 2), (2, 3), (1, 1)]);
    }

    #[test]
    fn runs_restart_at_batch_boundaries() {
        let t = trace(&["A", "A", "B", "B"], &[1, 1, 1, 1], &[false; 4]);
        let runs = t.phase_trajectory();
        assert_eq!(runs.len(), 2);
        assert_eq!((runs[1].batch.as_str(), runs[1].start, runs[1].duration), ("B", 2, 2));
    }

    #[test]
    fn majority_filter() {
        let t = trace(&["A"; 7], &[1, 1, 2, 1, 1, 3, 3], &[false; 7]);
        assert_eq!(t.smoothed(5).phases(), vec![1, 1, 1, 1, 1, 3, 3]);
    }

    #[test]
    fn summaries_count_alarm_runs() {
        let t = trace(
            &["A", "A", "A", "A", "A", "B", "B"],
            &[1; 7],
            &[true, true, false, true, false, false, true],
        );
        let s = t.batch_summaries();
        assert_eq!(s[0].alarms, 3);
        assert_eq!(s[0].recovery_times, vec![2, 1]);
        assert_eq!(s[1].recovery_times, vec![1]);
        assert!((s[1].alarm_rate() - 0.5).abs() < 1e-15);

        let mut out = Vec::new();
        t.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().next().unwrap(), "index,batch,e,c,alarm");
        assert_eq!(text.lines().nth(1).unwrap(), "0,A,2,1,1");
    }
}
