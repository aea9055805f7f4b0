// Saves a hybrid and a plain model with provenance, reloads them, and prints
// the comparison table on held-out batches.
//
//     cargo run --release --example model_persistence -- [dir]

use std::path::Path;

use huls::batchsim::{generate_campaign, ProcessConfig};
use huls::pipeline::ModelDocument;
use huls::{compare_models, ComparisonReport, HulsModel, Mode, PipelineConfig};

pub fn run_example(dir: &Path, side: usize, epochs: usize) -> huls::Result<ComparisonReport> {
    let campaign = generate_campaign(4, 2, &[], &ProcessConfig::new(4))?;
    let mut config = PipelineConfig::reference(4);
    config.som.rows = side;
    config.som.cols = side;
    config.som.epochs = epochs;
    std::fs::create_dir_all(dir).map_err(|e| huls::Error::io(dir, e))?;

    let mut loaded = Vec::new();
    for (name, mode) in [("huls", Mode::Huls), ("plain", Mode::PlainSom)] {
        let model = HulsModel::fit(&campaign.train, &config, mode)?;
        let path = dir.join(format!("{name}.json"));
        let provenance = serde_json::json!({ "example": "model_persistence", "config": &config, "mode": name });
        model.save(&path, Some(provenance))?;
        let doc = ModelDocument::load(&path)?;
        assert_eq!(doc.model, model, "reload must be exact");
        println!("{name}: {} v{} at {}", doc.format, doc.version, path.display());
        loaded.push((name, doc.model));
    }

    let refs: Vec<(&str, &HulsModel)> = loaded.iter().map(|(n, m)| (*n, m)).collect();
    let report = compare_models(&refs, &campaign.validate)?;
    report
        .write_csv(std::io::stdout().lock())
        .map_err(|e| huls::Error::io(dir, e))?;
    Ok(report)
}

fn main() -> huls::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(Into::into)
        .unwrap_or_else(|| std::env::temp_dir().join("huls-models"));
    run_example(&dir, 20, 100).map(|_| ())
}
