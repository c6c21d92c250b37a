use std::path::PathBuf;

use thiserror::Error;

use crate::model::Laplace;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A basis function, denominator or resolvent was evaluated at (or
    /// numerically on top of) a singularity.
    #[error("singular evaluation at s = {s}, theta = {theta}")]
    SingularEvaluation { s: Laplace, theta: f64 },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid dataset: {0}")]
    InvalidData(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("rank-deficient least-squares system: {0}")]
    RankDeficient(String),

    #[error("eigensolver failure at theta = {theta}: {reason}")]
    Eigen { theta: f64, reason: String },

    #[error("quadratic program failed: {0}")]
    Qp(String),

    #[error("i/o error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot parse {path}: {reason}")]
    Parse { path: PathBuf, reason: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, reason: impl ToString) -> Self {
        Error::Parse {
            path: path.into(),
            reason: reason.to_string(),
        }
    }
}
