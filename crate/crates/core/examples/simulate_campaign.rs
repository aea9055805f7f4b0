// Generates a training and validation campaign from the two-tank batch
// simulator and writes the CSV files the `huls` binary consumes.
//
//     cargo run --example simulate_campaign -- [out_dir] [seed]

use std::path::Path;

use huls::batchsim::{generate_campaign, save_truth_csv, Campaign, Fault, ProcessConfig, SIGNALS};

pub fn run_example(out_dir: &Path, seed: u64, n_train: usize) -> huls::Result<Campaign> {
    let base = ProcessConfig::new(seed);
    let faults = [Fault::E1Vent, Fault::E2CrossSection, Fault::E3LevelGauge];
    let campaign = generate_campaign(n_train, 2, &faults, &base)?;

    std::fs::create_dir_all(out_dir).map_err(|e| huls::Error::io(out_dir, e))?;
    campaign.train.write_csv(out_dir.join("train.csv"), "batch")?;
    campaign.validate.write_csv(out_dir.join("validate.csv"), "batch")?;
    save_truth_csv(&campaign.train_truth, out_dir.join("train_truth.csv"))?;
    save_truth_csv(&campaign.validate_truth, out_dir.join("validate_truth.csv"))?;

    println!("signals: {}", SIGNALS.join(", "));
    println!("nominal transition share: {:.1}%", 100.0 * base.transition_share());
    for (set, truth) in [("train", &campaign.train_truth), ("validate", &campaign.validate_truth)] {
        let data = if set == "train" { &campaign.train } else { &campaign.validate };
        for span in data.batches() {
            let mut per_phase = [0usize; 6];
            for t in &truth[span.range()] {
                per_phase[t.phase as usize] += 1;
            }
            let perturbed = truth[span.range()].iter().filter(|t| t.fault != "none").count();
            println!(
                "{set:8} {:3} {:4} samples  phases {:?}  perturbed {perturbed}",
                span.id,
                span.len,
                &per_phase[1..]
            );
        }
    }
    println!("wrote {}", out_dir.display());
    Ok(campaign)
}

fn main() -> huls::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let out = args
        .get(1)
        .map(Into::into)
        .unwrap_or_else(|| std::env::temp_dir().join("huls-campaign"));
    let seed = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1);
    run_example(&out, seed, 4).map(|_| ())
}
