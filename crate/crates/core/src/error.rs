use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid network configuration: {0}")]
    InvalidConfig(String),

    #[error("parameter shape mismatch: expected {expected} values, got {actual}")]
    ShapeMismatch { expected: usize, actual: usize },

    #[error("empty batch: {0}")]
    EmptyBatch(String),

    #[error("non-finite loss")]
    NonFiniteLoss,

    #[error("non-finite gradient entry at index {0}")]
    NonFiniteGradient(usize),

    #[error("training diverged at epoch {epoch}: non-finite loss")]
    Diverged { epoch: usize },

    #[error("invalid training configuration: {0}")]
    InvalidTraining(String),

    #[error("invalid sequence: {0}")]
    InvalidSequence(String),

    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    #[error("non-finite field value at ({0}, {1}, {2})")]
    NonFiniteField(f64, f64, f64),

    #[error("empty mesh")]
    EmptyMesh,

    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid model file: {0}")]
    Artifact(String),

    #[error(
        "time {days} days maps to normalized time {normalized:.4}, outside the fitted range \
         (pass --allow-extrapolation to evaluate up to |t| <= {limit})"
    )]
    Extrapolation {
        days: f64,
        normalized: f64,
        limit: f64,
    },

    #[error("patient mismatch: model is {model:?}, manifest is {manifest:?}")]
    PatientMismatch { model: String, manifest: String },
}

impl Error {
    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
