use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate zone id `{0}`")]
    DuplicateZone(String),

    #[error("zone `{zone}`: {reason}")]
    InvalidGeometry { zone: String, reason: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("design matrix is rank deficient: column `{0}` is linearly dependent on the preceding columns")]
    RankDeficient(String),

    #[error("column `{0}` is constant")]
    ConstantColumn(String),

    #[error("value at index {index} is not strictly positive after the offset ({value})")]
    NonPositive { index: usize, value: f64 },

    /// The profiled likelihood peaked at an edge of the admissible interval.
    /// `trace` holds the coarse (parameter, log-likelihood) scan.
    #[error("no interior maximum of the concentrated likelihood for {parameter} in ({lower:.6}, {upper:.6})")]
    NoInteriorMaximum {
        parameter: &'static str,
        lower: f64,
        upper: f64,
        trace: Vec<(f64, f64)>,
    },

    #[error("symmetric eigensolver did not converge")]
    EigenNonConvergence,

    #[error("weight matrix is not symmetric or similar to a symmetric matrix")]
    NonSymmetricWeights,

    #[error("local design matrix is singular at zone `{zone}`; use a larger bandwidth")]
    SingularLocalDesign { zone: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("configuration: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.to_string(),
        }
    }
}
