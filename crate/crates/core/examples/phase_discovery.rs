// Trains the hybrid pipeline and a plain map on the same batches and compares
// the phases found by the watershed segmentation with the simulator's ground
// truth.
//
//     cargo run --release --example phase_discovery            # 33x33, K=300
//     cargo run --release --example phase_discovery -- full    # 67x67, K=1000

use std::collections::BTreeMap;

use huls::batchsim::{generate_campaign, ProcessConfig, TRANSITION_PHASES};
use huls::monitor::{score_stream, AlarmPolicy, AlarmRule};
use huls::{HulsModel, Mode, PipelineConfig};

pub struct PhaseReport {
    pub huls_clusters: u32,
    pub plain_clusters: u32,
    pub huls_purity: f64,
}

pub fn run_example(side: usize, epochs: usize, seed: u64) -> huls::Result<PhaseReport> {
    let campaign = generate_campaign(4, 1, &[], &ProcessConfig::new(seed))?;
    let mut config = PipelineConfig::reference(seed);
    config.som.rows = side;
    config.som.cols = side;
    config.som.epochs = epochs;

    let mut report = PhaseReport { huls_clusters: 0, plain_clusters: 0, huls_purity: 0.0 };
    for mode in [Mode::Huls, Mode::PlainSom] {
        let model = HulsModel::fit(&campaign.train, &config, mode)?;
        let policy = AlarmPolicy { rule: AlarmRule::Fixed(f64::INFINITY), threshold: Some(f64::INFINITY) };
        let trace = score_stream(&model, &campaign.train, &policy)?;

        // majority true phase per cluster, over stationary samples only
        let mut table: BTreeMap<u32, BTreeMap<u8, usize>> = BTreeMap::new();
        for (r, t) in trace.records.iter().zip(&campaign.train_truth) {
            if !TRANSITION_PHASES.contains(&t.phase) {
                *table.entry(r.phase).or_default().entry(t.phase).or_default() += 1;
            }
        }
        let total: usize = table.values().flat_map(|m| m.values()).sum();
        let majority: usize = table.values().map(|m| m.values().max().unwrap()).sum();
        let purity = majority as f64 / total as f64;

        println!("{mode}: {} clusters on a {side}x{side} map trained on {} samples, purity {purity:.3}",
            model.num_clusters(), model.som_training_samples);
        for (c, phases) in &table {
            println!("  cluster {c:2}: true phases {phases:?}");
        }
        let first = trace.phase_trajectory();
        let runs: Vec<String> = first
            .iter()
            .filter(|r| r.batch == "T1")
            .map(|r| format!("{}x{}", r.phase, r.duration))
            .collect();
        println!("  T1 trajectory: {}", runs.join(" "));

        match mode {
            Mode::Huls => {
                report.huls_clusters = model.num_clusters();
                report.huls_purity = purity;
            }
            Mode::PlainSom => report.plain_clusters = model.num_clusters(),
        }
    }
    Ok(report)
}

fn main() -> huls::Result<()> {
    let full = std::env::args().any(|a| a == "full");
    let (side, epochs) = if full { (67, 1000) } else { (33, 300) };
    run_example(side, epochs, 1).map(|_| ())
}
