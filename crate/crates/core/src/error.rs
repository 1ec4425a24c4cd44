use std::path::PathBuf;

/// Errors raised by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("table has no data rows")]
    EmptyTable,
    #[error("schema names column `{0}` which is not in the header")]
    UnknownColumn(String),
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("target column `{column}` has {levels} categorical levels; only binary categorical targets are supported")]
    TargetLevels { column: String, levels: usize },
    #[error("{rows} row(s) contain missing values; pass drop-missing to discard them")]
    MissingValues { rows: usize },
    #[error("column `{column}` declared numeric but row {row} holds `{value}`")]
    NotNumeric {
        column: String,
        row: usize,
        value: String,
    },
    #[error("column `{0}` is constant; cannot standardize")]
    ConstantColumn(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("duplicate id {0} in prediction table")]
    DuplicateId(usize),
    #[error("no stored prediction for row id {0}")]
    UnknownId(usize),
    #[error("prediction {value} for id {id} is not a probability in [0,1]")]
    ProbabilityOutOfRange { id: usize, value: f64 },
    #[error("singular system: {0}")]
    Singular(String),
    #[error("degenerate spec: {0}")]
    DegenerateSpec(String),
    #[error("covariance matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("invalid split: {0}")]
    InvalidSplit(String),
    #[error("replicate {replicate}, k={k:?}: {source}")]
    Experiment {
        replicate: usize,
        k: Option<usize>,
        #[source]
        source: Box<Error>,
    },
}

/// Coarse classification used to map errors onto process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Usage,
    Data,
    Numerical,
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        use Error::*;
        match self {
            InvalidParameter(_) | InvalidSplit(_) => ErrorCategory::Usage,
            Singular(_) | DegenerateSpec(_) | NotPositiveDefinite | ConstantColumn(_) => {
                ErrorCategory::Numerical
            }
            Experiment { source, .. } => source.category(),
            _ => ErrorCategory::Data,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
