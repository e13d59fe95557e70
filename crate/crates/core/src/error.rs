use thiserror::Error;

/// Errors raised by model construction and analysis.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("improper transfer function: numerator degree {num} exceeds denominator degree {den}")]
    ImproperTransferFunction { num: usize, den: usize },

    #[error("denominator leading coefficient is zero or denominator is empty")]
    InvalidDenominator,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("domain mismatch: cannot combine continuous and discrete models (or differing sample times)")]
    DomainMismatch,

    #[error("operation requires a {expected} model")]
    WrongDomain { expected: &'static str },

    #[error("frequency grid must be positive and strictly increasing")]
    InvalidGrid,

    #[error("sample time must be positive")]
    InvalidSampleTime,

    #[error("tustin map is singular: a pole sits at s = 2/Ts")]
    TustinSingular,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("base closed loop is not Hurwitz (base loop unstable)")]
    BaseLoopUnstable,

    #[error("input signal too short: need at least {needed} samples, got {got}")]
    SignalTooShort { needed: usize, got: usize },

    #[error("insufficient sampling: need at least {needed} samples per period, got {got}")]
    InsufficientSampling { needed: f64, got: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
