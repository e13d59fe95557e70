use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        Self::Config(msg.into())
    }

    /// 2 for bad input, 3 for numeric failures, 1 for anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Numeric(_) => 3,
            Self::Io(_) => 1,
        }
    }
}

impl From<resetq::Error> for CliError {
    fn from(e: resetq::Error) -> Self {
        use resetq::Error as E;
        match e {
            E::ImproperTransferFunction { .. }
            | E::InvalidDenominator
            | E::InvalidGrid
            | E::InvalidSampleTime
            | E::TustinSingular
            | E::InvalidParameter { .. }
            | E::SignalTooShort { .. }
            | E::InsufficientSampling { .. } => Self::Config(e.to_string()),
            _ => Self::Numeric(e.to_string()),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::Io(std::io::Error::other(e))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::Io(std::io::Error::other(e))
    }
}
