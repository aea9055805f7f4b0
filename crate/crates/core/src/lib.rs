//! Phase discovery and anomaly detection for multivariate batch-process time
//! series.
//!
//! Raw training data is normalized, resampled by an instantaneous
//! topological map ([`itm`]) to even out long stationary phases against brief
//! transitions, and the resampled node set trains a self-organizing map
//! ([`som`]). The map's U-matrix is segmented by watershed ([`umatrix`]) into
//! process phases. [`monitor`] scores new samples against the map and
//! [`batchsim`] generates synthetic two-tank batch campaigns with injectable
//! faults.
//!
//! ```no_run
//! use huls::{batchsim, HulsModel, Mode, PipelineConfig};
//!
//! let campaign = batchsim::generate_campaign(4, 2, &[], &batchsim::ProcessConfig::new(7))?;
//! let model = HulsModel::fit(&campaign.train, &PipelineConfig::reference(7), Mode::Huls)?;
//! println!("{} phases", model.num_clusters());
//! # Ok::<(), huls::Error>(())
//! ```

pub mod batchsim;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod itm;
pub mod monitor;
pub mod pipeline;
pub mod som;
pub mod umatrix;

pub use dataset::{BatchSpan, Dataset, NormalizationMethod, NormalizationParams};
pub use error::{Error, Result};
pub use itm::{CreationRule, ItmGraph};
pub use monitor::{AlarmPolicy, AlarmRule, MonitoringTrace};
pub use pipeline::{compare_models, ComparisonReport, HulsModel, Mode, PipelineConfig};
pub use som::{BmuResult, GridPos, SomConfig, SomModel};
pub use umatrix::{ClusterMap, UMatrix};
