use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("parameters outside the admissible window: {0}")]
    OutOfRange(String),

    #[error("negative state component w0 = {0}")]
    NegativeState(f64),

    #[error("integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: String },

    #[error("divergent integral: {0}")]
    Integrability(String),

    #[error("trajectory has a removable singularity; the check needs a singular one")]
    RemovableClass,

    #[error("non-positive field value {value} at node {node} (r = {radius})")]
    NonPositiveField { node: usize, radius: f64, value: f64 },

    #[error("value overflows f64: {0}")]
    Overflow(String),

    #[error("insufficient data: {0}")]
    Insufficient(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Numerical breakdowns, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Integration { .. }
                | Error::Integrability(_)
                | Error::NonPositiveField { .. }
                | Error::RemovableClass
                | Error::NegativeState(_)
                | Error::Overflow(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
