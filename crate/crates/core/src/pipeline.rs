//! The hybrid pipeline: ITM resampling, SOM training on the node weights,
//! U-matrix and watershed segmentation. `Mode::PlainSom` skips the ITM stage
//! and serves as the baseline.

use std::fmt;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, NormalizationMethod, NormalizationParams};
use crate::error::{Error, Result};
use crate::itm::{CreationRule, ItmGraph};
use crate::som::{SomConfig, SomModel, TrainingStats};
use crate::umatrix::{watershed, ClusterMap, UMatrix};

pub const MODEL_FORMAT: &str = "huls-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    PlainSom,
    Huls,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::PlainSom => "plain_som",
            Mode::Huls => "huls",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub som: SomConfig,
    /// ITM node-creation radius, in normalized units.
    pub beta: f64,
    #[serde(default)]
    pub itm_rule: CreationRule,
    /// Watershed margin on the 0..=255 height scale.
    pub phi: f64,
}

impl PipelineConfig {
    /// 67x67 map, 1000 epochs, alpha0 0.02, sigma0 2, beta 0.01, phi 10.
    pub fn reference(seed: u64) -> Self {
        PipelineConfig {
            som: SomConfig::reference(seed),
            beta: 0.01,
            itm_rule: CreationRule::Thales,
            phi: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HulsModel {
    pub mode: Mode,
    pub feature_names: Vec<String>,
    pub normalization: NormalizationParams,
    pub itm: Option<ItmGraph>,
    pub som: SomModel,
    pub umatrix: UMatrix,
    pub clusters: ClusterMap,
    /// Number of samples the SOM was trained on.
    pub som_training_samples: usize,
}

/// Trains the hybrid pipeline on already-normalized data.
pub fn train_huls(
    data: &Dataset,
    normalization: NormalizationParams,
    config: &PipelineConfig,
) -> Result<HulsModel> {
    let itm = ItmGraph::train_with_rule(data, config.beta, config.itm_rule)?;
    let resampled = itm.resampled_set(data.feature_names())?;
    let (som, _) = train_som(&resampled, &config.som)?;
    finish(Mode::Huls, data, normalization, Some(itm), som, resampled.len(), config.phi)
}

/// Same pipeline without the ITM stage.
pub fn train_plain(
    data: &Dataset,
    normalization: NormalizationParams,
    config: &PipelineConfig,
) -> Result<HulsModel> {
    let (som, _) = train_som(data, &config.som)?;
    finish(Mode::PlainSom, data, normalization, None, som, data.len(), config.phi)
}

/// Random init within the training set's bounds, then sequential training.
pub fn train_som(data: &Dataset, config: &SomConfig) -> Result<(SomModel, TrainingStats)> {
    let mut som = SomModel::init_random(config, &data.bounds())?;
    let stats = som.train(data)?;
    Ok((som, stats))
}

fn finish(
    mode: Mode,
    data: &Dataset,
    normalization: NormalizationParams,
    itm: Option<ItmGraph>,
    som: SomModel,
    som_training_samples: usize,
    phi: f64,
) -> Result<HulsModel> {
    if normalization.dim() != data.dim() {
        return Err(Error::DimensionMismatch {
            expected: data.dim(),
            found: normalization.dim(),
        });
    }
    let umatrix = UMatrix::compute(&som);
    let clusters = watershed(&umatrix, &som, phi)?;
    Ok(HulsModel {
        mode,
        feature_names: data.feature_names().to_vec(),
        normalization,
        itm,
        som,
        umatrix,
        clusters,
        som_training_samples,
    })
}

impl HulsModel {
    /// Fits min-max normalization on raw training data and trains in `mode`.
    pub fn fit(raw: &Dataset, config: &PipelineConfig, mode: Mode) -> Result<HulsModel> {
        let params = NormalizationParams::fit(raw, NormalizationMethod::MinMax)?;
        let data = params.apply(raw)?;
        match mode {
            Mode::Huls => train_huls(&data, params, config),
            Mode::PlainSom => train_plain(&data, params, config),
        }
    }

    pub fn num_clusters(&self) -> u32 {
        self.clusters.num_clusters
    }

    /// Normalizes raw data with the stored parameters after checking feature names.
    pub fn normalize(&self, raw: &Dataset) -> Result<Dataset> {
        if raw.feature_names() != self.feature_names.as_slice() {
            return Err(Error::FeatureMismatch {
                expected: self.feature_names.clone(),
                found: raw.feature_names().to_vec(),
            });
        }
        self.normalization.apply(raw)
    }

    /// Quantization error on raw-unit data.
    pub fn quantization_error(&self, raw: &Dataset) -> Result<f64> {
        self.som.quantization_error(&self.normalize(raw)?)
    }

    /// Topographic error on raw-unit data.
    pub fn topographic_error(&self, raw: &Dataset) -> Result<f64> {
        self.som.topographic_error(&self.normalize(raw)?)
    }

    pub fn save(&self, path: impl AsRef<Path>, provenance: Option<serde_json::Value>) -> Result<()> {
        let path = path.as_ref();
        let doc = ModelDocument {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            provenance,
            model: self.clone(),
        };
        let mut text = serde_json::to_string_pretty(&doc)?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<HulsModel> {
        Ok(ModelDocument::load(path)?.model)
    }
}

/// Versioned on-disk form of a [`HulsModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub format: String,
    pub version: u32,
    /// Free-form record of how the model was produced (flags, seed).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<serde_json::Value>,
    pub model: HulsModel,
}

impl ModelDocument {
    pub fn load(path: impl AsRef<Path>) -> Result<ModelDocument> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<ModelDocument> {
        #[derive(Deserialize)]
        struct Header {
            format: String,
            version: u32,
        }
        let header: Header = serde_json::from_str(text)?;
        if header.format != MODEL_FORMAT || header.version != MODEL_VERSION {
            return Err(Error::UnsupportedDocument {
                format: header.format,
                version: header.version,
            });
        }
        Ok(serde_json::from_str(text)?)
    }
}

/// One row of a model comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub model: String,
    pub quantization_error: f64,
    pub topographic_error: f64,
    pub num_clusters: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonReport {
    pub const CSV_HEADER: &'static str = "model,E_Q,E_T,num_clusters";

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{}",
                r.model, r.quantization_error, r.topographic_error, r.num_clusters
            )?;
        }
        Ok(())
    }
}

/// Evaluates labeled models on the same raw-unit data.
pub fn compare_models(models: &[(&str, &HulsModel)], eval: &Dataset) -> Result<ComparisonReport> {
    let rows = models
        .iter()
        .map(|&(name, m)| {
            Ok(ComparisonRow {
                model: name.to_string(),
                quantization_error: m.quantization_error(eval)?,
                topographic_error: m.topographic_error(eval)?,
                num_clusters: m.num_clusters(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ComparisonReport { rows })
}
