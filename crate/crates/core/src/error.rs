use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("row {row}, column `{column}`: cannot parse `{value}` as a finite number")]
    Parse {
        row: usize,
        column: String,
        value: String,
    },

    #[error("row {row}: expected {expected} cells, found {found}")]
    InconsistentWidth {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("dataset has no feature columns")]
    NoFeatures,

    #[error("column `{0}` not found in header")]
    MissingColumn(String),

    #[error("batch `{0}` is split into non-contiguous runs")]
    NonContiguousBatch(String),

    #[error("constant feature(s) cannot be min-max normalized: {}", .0.join(", "))]
    ConstantFeature(Vec<String>),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("feature mismatch: model expects [{}], data has [{}]", expected.join(", "), found.join(", "))]
    FeatureMismatch {
        expected: Vec<String>,
        found: Vec<String>,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("operation needs at least two neurons")]
    SingleNeuron,

    #[error("grid position ({row}, {col}) outside {rows}x{cols} lattice")]
    OutOfBounds {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },

    #[error("epoch {k} outside 0..{epochs}")]
    EpochOutOfRange { k: usize, epochs: usize },

    #[error("ITM needs at least two distinct samples")]
    TooFewDistinctSamples,

    #[error("ITM graph is empty")]
    EmptyGraph,

    #[error("alarm policy has no resolved threshold")]
    UnresolvedPolicy,

    #[error("unsupported model document `{format}` version {version}")]
    UnsupportedDocument { format: String, version: u32 },

    #[error("unknown format `{0}`")]
    UnknownFormat(String),
}

impl Error {
    /// Wraps an I/O failure together with the path it concerns.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
