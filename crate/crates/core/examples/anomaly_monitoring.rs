// Monitors validation batches with a trained hybrid model: clean batches stay
// mostly below the 0.99-quantile threshold while the three fault batches raise
// alarms.
//
//     cargo run --release --example anomaly_monitoring

use huls::batchsim::{generate_campaign, Fault, ProcessConfig};
use huls::monitor::{score_stream, AlarmPolicy, BatchSummary};
use huls::{HulsModel, Mode, PipelineConfig};

pub fn run_example(side: usize, epochs: usize, seed: u64) -> huls::Result<Vec<BatchSummary>> {
    let faults = [Fault::E1Vent, Fault::E2CrossSection, Fault::E3LevelGauge];
    let campaign = generate_campaign(4, 3, &faults, &ProcessConfig::new(seed))?;
    let mut config = PipelineConfig::reference(seed);
    config.som.rows = side;
    config.som.cols = side;
    config.som.epochs = epochs;
    let model = HulsModel::fit(&campaign.train, &config, Mode::Huls)?;

    let policy = AlarmPolicy::default().resolve(&model, &campaign.train)?;
    let trace = score_stream(&model, &campaign.validate, &policy)?;
    println!("threshold {:.4} ({:?})", trace.threshold, policy.rule);
    let summaries = trace.batch_summaries();
    for s in &summaries {
        let longest = s.recovery_times.iter().max().copied().unwrap_or(0);
        println!(
            "{:3}: {:4} samples, alarm rate {:6.2}%, max score {:.3}, longest alarm run {longest}",
            s.batch,
            s.samples,
            100.0 * s.alarm_rate(),
            s.max_score
        );
    }
    let perturbed: Vec<bool> = campaign.validate_truth.iter().map(|t| t.fault != "none").collect();
    let hits = trace.records.iter().zip(&perturbed).filter(|(r, &p)| p && r.alarm).count();
    let total = perturbed.iter().filter(|&&p| p).count();
    println!("perturbed samples above threshold: {hits}/{total}");
    Ok(summaries)
}

fn main() -> huls::Result<()> {
    run_example(33, 300, 1).map(|_| ())
}
