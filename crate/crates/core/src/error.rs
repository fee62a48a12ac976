use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("pulse center {position} lies within {margin} of the grid edge [{lo}, {hi})")]
    PulseOutsideMargin {
        position: f64,
        margin: f64,
        lo: f64,
        hi: f64,
    },

    #[error("sample position {position} is not on the temporal grid")]
    OffGrid { position: f64 },

    #[error("non-finite field after SSFM step {step}")]
    NonFiniteField { step: usize },

    #[error("non-finite adjoint at SSFM step {step}")]
    NonFiniteAdjoint { step: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("unknown {kind} `{name}` (available: {available})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        available: String,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn ensure_len(context: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            actual,
        })
    }
}
