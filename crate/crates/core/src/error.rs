use thiserror::Error;

use crate::spectral::Representation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("momentum-space dimension must be a positive even integer, got {0}")]
    InvalidDimension(usize),

    #[error("expected a state in the {expected:?} representation, got {found:?}")]
    RepresentationMismatch {
        expected: Representation,
        found: Representation,
    },

    #[error("states live on different grids ({left} vs {right} points)")]
    DimensionMismatch { left: usize, right: usize },

    #[error("state has zero norm and cannot be renormalized")]
    ZeroNorm,

    #[error("non-finite amplitudes after {0}")]
    NonFinite(&'static str),

    #[error("power-law fit window has {found} points, need at least {required}")]
    FitWindowTooSmall { found: usize, required: usize },

    #[error("the C3 prediction for even m needs a prefactor eta")]
    MissingPrefactor,

    #[error("dense oracle is limited to N <= {limit}, got {found}")]
    OracleTooLarge { found: usize, limit: usize },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
