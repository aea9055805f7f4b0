//! Synthetic two-tank batch process.
//!
//! Tank B02 supplies liquid through valve Z and flow meter F into reaction
//! tank B01 (level L); pump P01 (speed D) returns it to B02, whose outlet
//! pressure P tracks its level. Every batch runs five phases, each with its
//! own (Z, D) actuator combination:
//!
//! | id | phase          | Z   | D   |
//! |----|----------------|-----|-----|
//! | 1  | valve opening  | 0.5 | 0   |
//! | 2  | fill           | 1   | 0   |
//! | 3  | settle / react | 0   | 0   |
//! | 4  | pump start     | 0   | 0.5 |
//! | 5  | transfer       | 0   | 1   |
//!
//! Phases 1 and 4 are brief transitions, so the data is dominated by the
//! stationary and slowly drifting phases.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

pub const SIGNALS: [&str; 5] = ["P", "F", "L", "D", "Z"];
pub const BATCH_LEN_RANGE: (usize, usize) = (200, 220);
pub const TRANSITION_PHASES: [u8; 2] = [1, 4];
pub const FILL_PHASE: u8 = 2;
pub const SETTLE_PHASE: u8 = 3;

const FILL_RATE: f64 = 0.03;
const DRAIN_RATE: f64 = 0.0112;
const FLOW_LAG: f64 = 1.5;
const PRESSURE_LAG: f64 = 2.0;
const START_LEVEL: f64 = 0.1;
const MIN_LEVEL: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Fault {
    None,
    /// Reduced venting of B02: weaker feed flow and sluggish pressure decay while filling.
    E1Vent,
    /// Reduced flow cross-section: much weaker feed flow and a longer fill.
    E2CrossSection,
    /// Shifted level gauge: constant offset on L.
    E3LevelGauge,
}

impl Fault {
    pub fn tag(self) -> &'static str {
        match self {
            Fault::None => "none",
            Fault::E1Vent => "E1",
            Fault::E2CrossSection => "E2",
            Fault::E3LevelGauge => "E3",
        }
    }

    pub fn parse(s: &str) -> Result<Fault> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" => Ok(Fault::None),
            "e1" | "e1_vent" => Ok(Fault::E1Vent),
            "e2" | "e2_cross_section" => Ok(Fault::E2CrossSection),
            "e3" | "e3_level_gauge" => Ok(Fault::E3LevelGauge),
            other => Err(Error::InvalidConfig(format!("unknown fault `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpec {
    pub name: String,
    pub valve: f64,
    pub pump: f64,
    pub nominal: usize,
    /// Per-batch duration varies uniformly within `nominal ± jitter`.
    pub jitter: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultSeverity {
    /// Feed-flow gain while filling under E1.
    pub vent_flow_gain: f64,
    /// Pressure lag multiplier while filling under E1.
    pub vent_pressure_lag: f64,
    /// Feed-flow gain while filling under E2.
    pub cross_section_flow_gain: f64,
    /// Fill prolongation factor under E2 (taken out of the settle phase).
    pub cross_section_fill_stretch: f64,
    /// Offset added to the L reading under E3.
    pub level_shift: f64,
}

impl Default for FaultSeverity {
    fn default() -> Self {
        FaultSeverity {
            vent_flow_gain: 0.55,
            vent_pressure_lag: 4.0,
            cross_section_flow_gain: 0.5,
            cross_section_fill_stretch: 1.4,
            level_shift: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessConfig {
    pub phases: Vec<PhaseSpec>,
    /// Gaussian noise standard deviation per signal, in `SIGNALS` order.
    pub noise: [f64; 5],
    pub seed: u64,
    pub fault: Fault,
    pub severity: FaultSeverity,
}

impl ProcessConfig {
    pub fn new(seed: u64) -> Self {
        let phase = |name: &str, valve, pump, nominal, jitter| PhaseSpec {
            name: name.to_string(),
            valve,
            pump,
            nominal,
            jitter,
        };
        ProcessConfig {
            phases: vec![
                phase("valve_opening", 0.5, 0.0, 8, 1),
                phase("fill", 1.0, 0.0, 55, 3),
                phase("settle", 0.0, 0.0, 75, 5),
                phase("pump_start", 0.0, 0.5, 8, 1),
                phase("transfer", 0.0, 1.0, 64, 3),
            ],
            // actuator readbacks are exact commanded values
            noise: [0.01, 0.01, 0.01, 0.0, 0.0],
            seed,
            fault: Fault::None,
            severity: FaultSeverity::default(),
        }
    }

    pub fn with_fault(mut self, fault: Fault) -> Self {
        self.fault = fault;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.phases.len() != 5 {
            return Err(Error::InvalidConfig("exactly five phases are required".into()));
        }
        if self.phases.iter().any(|p| p.nominal == 0 || p.jitter >= p.nominal) {
            return Err(Error::InvalidConfig("phase durations must be positive".into()));
        }
        let total: usize = self.phases.iter().map(|p| p.nominal).sum();
        if !(BATCH_LEN_RANGE.0..=BATCH_LEN_RANGE.1).contains(&total) {
            return Err(Error::InvalidConfig(format!(
                "nominal batch length {total} outside {}..={}",
                BATCH_LEN_RANGE.0, BATCH_LEN_RANGE.1
            )));
        }
        if self.noise.iter().any(|&n| !(n >= 0.0) || !n.is_finite()) {
            return Err(Error::InvalidConfig("noise must be >= 0".into()));
        }
        Ok(())
    }

    /// Share of nominal samples spent in the transition phases.
    pub fn transition_share(&self) -> f64 {
        let total: usize = self.phases.iter().map(|p| p.nominal).sum();
        let trans: usize = TRANSITION_PHASES
            .iter()
            .map(|&id| self.phases[id as usize - 1].nominal)
            .sum();
        trans as f64 / total as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchRecord {
    /// `(P, F, L, D, Z)` per tick.
    pub samples: Vec<[f64; 5]>,
    /// Ground-truth phase id (1..=5) per tick.
    pub phases: Vec<u8>,
    /// Ticks on which the configured fault acts.
    pub perturbed: Vec<bool>,
    pub fault: Fault,
}

impl BatchRecord {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

pub fn generate_batch(config: &ProcessConfig) -> Result<BatchRecord> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let sev = &config.severity;

    let mut durations: Vec<usize> = config
        .phases
        .iter()
        .map(|p| {
            let j = p.jitter as i64;
            (p.nominal as i64 + rng.gen_range(-j..=j)) as usize
        })
        .collect();
    // keep the batch length inside the admissible window by trimming the settle phase
    let total: usize = durations.iter().sum();
    let s = SETTLE_PHASE as usize - 1;
    if total > BATCH_LEN_RANGE.1 {
        durations[s] -= total - BATCH_LEN_RANGE.1;
    } else if total < BATCH_LEN_RANGE.0 {
        durations[s] += BATCH_LEN_RANGE.0 - total;
    }
    if config.fault == Fault::E2CrossSection {
        let f = FILL_PHASE as usize - 1;
        let extra = ((durations[f] as f64) * (sev.cross_section_fill_stretch - 1.0)).round() as usize;
        let extra = extra.min(durations[s] - 1);
        durations[f] += extra;
        durations[s] -= extra;
    }

    let noise: Vec<Normal<f64>> = config
        .noise
        .iter()
        .map(|&sd| Normal::new(0.0, sd).expect("validated noise"))
        .collect();

    let mut level = START_LEVEL;
    let mut pressure = 1.0 - START_LEVEL;
    let mut flow = 0.0;
    let flow_alpha = 1.0 - (-1.0 / FLOW_LAG).exp();

    let n: usize = durations.iter().sum();
    let mut record = BatchRecord {
        samples: Vec::with_capacity(n),
        phases: Vec::with_capacity(n),
        perturbed: Vec::with_capacity(n),
        fault: config.fault,
    };
    for (idx, (spec, &dur)) in config.phases.iter().zip(&durations).enumerate() {
        let phase_id = idx as u8 + 1;
        let filling = phase_id == FILL_PHASE;
        for _ in 0..dur {
            let (gain, p_lag) = match config.fault {
                Fault::E1Vent if filling => (sev.vent_flow_gain, PRESSURE_LAG * sev.vent_pressure_lag),
                Fault::E2CrossSection if filling => (sev.cross_section_flow_gain, PRESSURE_LAG),
                _ => (1.0, PRESSURE_LAG),
            };
            let target_flow = gain * spec.valve * pressure;
            flow += (target_flow - flow) * flow_alpha;
            level += FILL_RATE * flow - DRAIN_RATE * spec.pump;
            level = level.clamp(MIN_LEVEL, 1.0);
            pressure += ((1.0 - level) - pressure) * (1.0 - (-1.0 / p_lag).exp());

            let clean = [pressure, flow, level, spec.pump, spec.valve];
            let mut sample = [0.0; 5];
            for (k, (s, c)) in sample.iter_mut().zip(clean).enumerate() {
                *s = (c + noise[k].sample(&mut rng)).clamp(0.0, 1.0);
            }
            if config.fault == Fault::E3LevelGauge {
                sample[2] += sev.level_shift;
            }
            record.samples.push(sample);
            record.phases.push(phase_id);
            record.perturbed.push(match config.fault {
                Fault::None => false,
                Fault::E3LevelGauge => true,
                Fault::E1Vent | Fault::E2CrossSection => filling,
            });
        }
    }
    Ok(record)
}

/// Ground truth for one sample. `fault` is the active fault tag on that
/// tick, or `"none"`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TruthRow {
    pub index: usize,
    pub batch: String,
    pub phase: u8,
    pub fault: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Campaign {
    pub train: Dataset,
    pub validate: Dataset,
    pub train_truth: Vec<TruthRow>,
    pub validate_truth: Vec<TruthRow>,
    /// Fault of each validation batch, in order.
    pub validate_faults: Vec<(String, Fault)>,
}

/// Seed of the `ordinal`-th batch of a campaign.
pub fn batch_seed(campaign_seed: u64, ordinal: usize) -> u64 {
    let mut z = campaign_seed ^ (ordinal as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Training batches `T1..`, clean validation batches `N1..`, then one faulty
/// batch `E1`/`E2`/`E3` per requested fault.
pub fn generate_campaign(
    n_train: usize,
    n_validate: usize,
    faults: &[Fault],
    base: &ProcessConfig,
) -> Result<Campaign> {
    if n_train == 0 || n_validate == 0 {
        return Err(Error::InvalidConfig("batch counts must be >= 1".into()));
    }
    let mut ordinal = 0;
    let mut make = |id: String, fault: Fault| -> Result<(String, BatchRecord)> {
        let cfg = ProcessConfig {
            seed: batch_seed(base.seed, ordinal),
            fault,
            ..base.clone()
        };
        ordinal += 1;
        Ok((id, generate_batch(&cfg)?))
    };

    let train: Vec<_> = (1..=n_train)
        .map(|i| make(format!("T{i}"), Fault::None))
        .collect::<Result<_>>()?;
    let mut validate: Vec<_> = (1..=n_validate)
        .map(|i| make(format!("N{i}"), Fault::None))
        .collect::<Result<_>>()?;
    for &f in faults.iter().filter(|&&f| f != Fault::None) {
        validate.push(make(f.tag().to_string(), f)?);
    }

    let (train, train_truth) = assemble(&train)?;
    let validate_faults = validate.iter().map(|(id, b)| (id.clone(), b.fault)).collect();
    let (validate, validate_truth) = assemble(&validate)?;
    Ok(Campaign {
        train,
        validate,
        train_truth,
        validate_truth,
        validate_faults,
    })
}

fn assemble(batches: &[(String, BatchRecord)]) -> Result<(Dataset, Vec<TruthRow>)> {
    let mut values = Vec::new();
    let mut ids = Vec::new();
    let mut truth = Vec::new();
    for (id, b) in batches {
        for ((s, &phase), &perturbed) in b.samples.iter().zip(&b.phases).zip(&b.perturbed) {
            truth.push(TruthRow {
                index: ids.len(),
                batch: id.clone(),
                phase,
                fault: if perturbed { b.fault.tag() } else { "none" }.to_string(),
            });
            values.extend_from_slice(s);
            ids.push(id.clone());
        }
    }
    let names = SIGNALS.iter().map(|s| s.to_string()).collect();
    Ok((Dataset::from_flat(names, values, ids)?, truth))
}

pub fn write_truth_csv<W: Write>(rows: &[TruthRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "index,batch,phase,fault")?;
    for r in rows {
        writeln!(w, "{},{},{},{}", r.index, r.batch, r.phase, r.fault)?;
    }
    Ok(())
}

pub fn save_truth_csv(rows: &[TruthRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    write_truth_csv(rows, &mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}
