use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed audio file {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("unsupported audio format in {path}: {reason}")]
    UnsupportedFormat { path: PathBuf, reason: String },

    #[error("{0} contains no audio samples")]
    EmptyAudio(PathBuf),

    #[error("no audio files matching the naming scheme under {0}")]
    EmptyDataset(PathBuf),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("mel filter {index} is degenerate: band edges collapse onto the same FFT bin")]
    DegenerateFilter { index: usize },

    #[error("power iteration did not converge after {iterations} iterations (last estimate {estimate})")]
    NoConvergence { iterations: usize, estimate: f64 },

    #[error("recurrent matrix draw was degenerate after {attempts} attempts")]
    DegenerateReservoir { attempts: usize },

    #[error("ridge system is singular or ill-conditioned; use ridge_lambda > 0")]
    IllConditioned,

    #[error("target is constant, NRMSE normalization is undefined")]
    ConstantTarget,

    #[error("cannot stratify: {0}")]
    Stratification(String),

    #[error("no usable training data: {0}")]
    NoUsableData(String),

    #[error("corrupt or incompatible model container: {0}")]
    Container(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
