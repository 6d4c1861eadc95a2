use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised anywhere in the preprocessing / modeling / evaluation stack.
///
/// Variants fall in two families: configuration problems (bad schema, bad
/// pipeline, bad hyperparameters) and data problems (unparseable cells,
/// single-class partitions, too few rows for a neighbor search).
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("invalid schema: {0}")]
    Schema(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("column `{column}`, row {row}: cannot parse `{token}` as a number")]
    NonNumeric {
        column: String,
        row: usize,
        token: String,
    },

    #[error("data error: {0}")]
    Data(String),

    #[error("dataset contains a single class")]
    SingleClass,

    #[error("not enough rows: {0}")]
    InsufficientRows(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("repeat {repeat}, fold {fold}: {source}")]
    Fold {
        repeat: usize,
        fold: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// True for errors caused by configuration rather than the data itself.
    pub fn is_config(&self) -> bool {
        match self {
            Error::Schema(_) | Error::Config(_) | Error::Unsupported(_) | Error::Json(_) => true,
            Error::Fold { source, .. } => source.is_config(),
            _ => false,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        if self.is_config() {
            2
        } else {
            3
        }
    }

    pub(crate) fn at_fold(self, repeat: usize, fold: usize) -> Error {
        Error::Fold {
            repeat,
            fold,
            source: Box::new(self),
        }
    }
}
