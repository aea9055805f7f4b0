//! Command-line front end. `huls <simulate|train|score|compare|export>`.
//!
//! Every command is a pure function of its flags: repeated runs with the same
//! flags write byte-identical files. `HULS_SEED` and `HULS_OUT_DIR` override
//! the seed and output directory when the flags are not given.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::batchsim::{self, Fault, ProcessConfig};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::itm::CreationRule;
use crate::monitor::{self, AlarmPolicy, AlarmRule};
use crate::pipeline::{self, HulsModel, Mode, PipelineConfig};
use crate::som::SomConfig;

#[derive(Debug, Parser)]
#[command(name = "huls", version, about = "Phase discovery and anomaly scoring for batch-process data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic training/validation campaign.
    Simulate(SimulateArgs),
    /// Train a model and print its training metrics as one JSON line.
    Train(TrainArgs),
    /// Score data against a model: trace, per-batch summary and phase runs.
    Score(ScoreArgs),
    /// Compare models on the same data (CSV: model,E_Q,E_T,num_clusters).
    Compare(CompareArgs),
    /// Write the U-matrix and cluster map grids of a model.
    Export(ExportArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long, env = "HULS_OUT_DIR", default_value = ".")]
    pub out_dir: PathBuf,
    /// Number of training batches (T1..).
    #[arg(long, default_value_t = 4)]
    pub train: usize,
    /// Number of clean validation batches (N1..).
    #[arg(long, default_value_t = 2)]
    pub validate: usize,
    /// Faulty batches appended to the validation set, e.g. `e1,e2,e3`.
    #[arg(long, value_delimiter = ',')]
    pub faults: Vec<String>,
    #[arg(long, env = "HULS_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Noise standard deviation on P, F and L; actuators stay exact.
    #[arg(long, default_value_t = 0.01)]
    pub noise: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeArg {
    Huls,
    Plain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleArg {
    Thales,
    PairSpacing,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TrainArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "batch")]
    pub batch_column: String,
    /// Output model document.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeArg::Huls)]
    pub mode: ModeArg,
    /// Map rows; also the column count unless `--cols` is given.
    #[arg(long, default_value_t = 67)]
    pub map: usize,
    #[arg(long)]
    pub cols: Option<usize>,
    #[arg(long, default_value_t = 1000)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.02)]
    pub alpha: f64,
    #[arg(long, default_value_t = 2.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0.01)]
    pub beta: f64,
    #[arg(long, value_enum, default_value_t = RuleArg::Thales)]
    pub itm_rule: RuleArg,
    #[arg(long, default_value_t = 10.0)]
    pub phi: f64,
    #[arg(long, env = "HULS_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Present samples in a seeded random order each epoch.
    #[arg(long)]
    pub shuffle: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScoreArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "batch")]
    pub batch_column: String,
    /// Raw training data; required by the data-driven policies.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// `quantile:Q`, `mean3sigma` or `fixed:T`.
    #[arg(long, default_value = "quantile:0.99")]
    pub policy: String,
    /// Majority-vote window for phase labels; 0 keeps raw labels.
    #[arg(long, default_value_t = 0)]
    pub smooth: usize,
    #[arg(long, env = "HULS_OUT_DIR", default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CompareArgs {
    /// Model documents; each row is named after the file stem.
    #[arg(long = "model", required = true)]
    pub models: Vec<PathBuf>,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "batch")]
    pub batch_column: String,
    /// Report path; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExportFormat {
    Csv,
    Pgm,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ExportArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, value_enum, default_value_t = ExportFormat::Csv)]
    pub format: ExportFormat,
    #[arg(long, env = "HULS_OUT_DIR", default_value = ".")]
    pub out_dir: PathBuf,
}

/// Parses `std::env::args`, runs the command and returns the exit status.
pub fn main() -> i32 {
    run_from(std::env::args_os())
}

pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

pub fn run(command: &Command) -> Result<()> {
    match command {
        Command::Simulate(a) => simulate(a),
        Command::Train(a) => {
            let line = train(a)?;
            println!("{line}");
            Ok(())
        }
        Command::Score(a) => score(a),
        Command::Compare(a) => compare(a),
        Command::Export(a) => export(a),
    }
}

pub fn simulate(a: &SimulateArgs) -> Result<()> {
    let faults = a
        .faults
        .iter()
        .filter(|f| !f.trim().is_empty())
        .map(|f| Fault::parse(f))
        .collect::<Result<Vec<_>>>()?;
    let mut base = ProcessConfig::new(a.seed);
    base.noise = [a.noise, a.noise, a.noise, 0.0, 0.0];
    let campaign = batchsim::generate_campaign(a.train, a.validate, &faults, &base)?;

    create_dir(&a.out_dir)?;
    campaign.train.write_csv(a.out_dir.join("train.csv"), "batch")?;
    campaign.validate.write_csv(a.out_dir.join("validate.csv"), "batch")?;
    batchsim::save_truth_csv(&campaign.train_truth, a.out_dir.join("train_truth.csv"))?;
    batchsim::save_truth_csv(&campaign.validate_truth, a.out_dir.join("validate_truth.csv"))?;
    write_json(
        &a.out_dir.join("simulate.json"),
        &serde_json::json!({ "command": "simulate", "args": a, "process": base }),
    )
}

fn pipeline_config(a: &TrainArgs) -> PipelineConfig {
    PipelineConfig {
        som: SomConfig {
            rows: a.map,
            cols: a.cols.unwrap_or(a.map),
            epochs: a.epochs,
            alpha0: a.alpha,
            sigma0: a.sigma,
            seed: a.seed,
            shuffle: a.shuffle,
        },
        beta: a.beta,
        itm_rule: match a.itm_rule {
            RuleArg::Thales => CreationRule::Thales,
            RuleArg::PairSpacing => CreationRule::PairSpacing,
        },
        phi: a.phi,
    }
}

/// Trains, saves the model and returns the one-line JSON metric summary.
pub fn train(a: &TrainArgs) -> Result<String> {
    let cfg = pipeline_config(a);
    cfg.som.validate()?;
    if !(cfg.phi >= 0.0) {
        return Err(Error::InvalidConfig("phi must be >= 0".into()));
    }
    let mode = match a.mode {
        ModeArg::Huls => Mode::Huls,
        ModeArg::Plain => Mode::PlainSom,
    };
    let data = Dataset::load_csv(&a.input, &a.batch_column)?;
    let model = HulsModel::fit(&data, &cfg, mode)?;
    let provenance = serde_json::json!({ "command": "train", "args": a, "config": cfg });
    model.save(&a.model, Some(provenance))?;

    #[derive(Serialize)]
    struct Summary {
        mode: String,
        #[serde(rename = "E_Q")]
        quantization_error: f64,
        #[serde(rename = "E_T")]
        topographic_error: f64,
        clusters: u32,
        som_training_samples: usize,
    }
    let summary = Summary {
        mode: model.mode.to_string(),
        quantization_error: model.quantization_error(&data)?,
        topographic_error: model.topographic_error(&data)?,
        clusters: model.num_clusters(),
        som_training_samples: model.som_training_samples,
    };
    Ok(serde_json::to_string(&summary)?)
}

/// `quantile:Q`, `mean3sigma` or `fixed:T`.
pub fn parse_policy(s: &str) -> Result<AlarmRule> {
    let s = s.trim().to_ascii_lowercase();
    let (kind, value) = match s.split_once(':') {
        Some((k, v)) => (k, Some(v)),
        None => (s.as_str(), None),
    };
    let number = |v: Option<&str>| -> Result<f64> {
        v.and_then(|v| v.parse::<f64>().ok())
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::InvalidConfig(format!("policy `{s}` needs a numeric value")))
    };
    match kind {
        "quantile" => Ok(AlarmRule::TrainQuantile(match value {
            Some(_) => number(value)?,
            None => monitor::DEFAULT_QUANTILE,
        })),
        "mean3sigma" | "mean_plus_3sigma" => Ok(AlarmRule::TrainMeanPlus3Sigma),
        "fixed" => {
            let t = number(value)?;
            if t <= 0.0 {
                return Err(Error::InvalidConfig("fixed threshold must be > 0".into()));
            }
            Ok(AlarmRule::Fixed(t))
        }
        _ => Err(Error::InvalidConfig(format!("unknown policy `{s}`"))),
    }
}

pub fn score(a: &ScoreArgs) -> Result<()> {
    let model = HulsModel::load(&a.model)?;
    let data = Dataset::load_csv(&a.input, &a.batch_column)?;
    let rule = parse_policy(&a.policy)?;
    let policy = match (rule, &a.reference) {
        (AlarmRule::Fixed(_), _) => AlarmPolicy::new(rule),
        (_, Some(path)) => AlarmPolicy::new(rule).resolve(&model, &Dataset::load_csv(path, &a.batch_column)?)?,
        (_, None) => {
            return Err(Error::InvalidConfig(format!(
                "policy `{}` needs --reference training data",
                a.policy
            )))
        }
    };
    let mut trace = monitor::score_stream(&model, &data, &policy)?;
    if a.smooth > 1 {
        trace = trace.smoothed(a.smooth);
    }

    create_dir(&a.out_dir)?;
    write_with(&a.out_dir.join("trace.csv"), |w| trace.write_csv(w))?;
    write_with(&a.out_dir.join("summary.csv"), |w| trace.write_summary_csv(w))?;
    write_with(&a.out_dir.join("phases.csv"), |w| trace.write_phases_csv(w))?;
    write_json(
        &a.out_dir.join("score.json"),
        &serde_json::json!({ "command": "score", "args": a, "policy": policy }),
    )
}

pub fn compare(a: &CompareArgs) -> Result<()> {
    let models = a
        .models
        .iter()
        .map(|p| {
            let name = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| p.display().to_string());
            Ok((name, HulsModel::load(p)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let data = Dataset::load_csv(&a.input, &a.batch_column)?;
    let refs: Vec<(&str, &HulsModel)> = models.iter().map(|(n, m)| (n.as_str(), m)).collect();
    let report = pipeline::compare_models(&refs, &data)?;
    match &a.out {
        Some(path) => write_with(path, |w| report.write_csv(w)),
        None => report
            .write_csv(std::io::stdout().lock())
            .map_err(|e| Error::io("<stdout>", e)),
    }
}

pub fn export(a: &ExportArgs) -> Result<()> {
    let model = HulsModel::load(&a.model)?;
    create_dir(&a.out_dir)?;
    match a.format {
        ExportFormat::Csv => write_with(&a.out_dir.join("umatrix.csv"), |w| model.umatrix.write_csv(w))?,
        ExportFormat::Pgm => write_with(&a.out_dir.join("umatrix.pgm"), |w| model.umatrix.write_pgm(w))?,
    }
    write_with(&a.out_dir.join("clusters.csv"), |w| model.clusters.write_csv(w))
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_with(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
