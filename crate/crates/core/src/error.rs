use thiserror::Error;

/// Errors raised by the model, detector and solver layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{function}: argument {arg} is outside the domain")]
    Domain { function: &'static str, arg: f64 },

    #[error("{function}: result overflows at argument {arg}")]
    Overflow { function: &'static str, arg: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("length mismatch: realization has {expected} IRS units, configuration has {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("degenerate noise model (rho = 1): the warden's threshold optimisation is ill-posed")]
    DegenerateModel,

    #[error("substream {index}: {source}")]
    Substream { index: u64, source: Box<Error> },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
