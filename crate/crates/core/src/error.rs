use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("measure has no atoms")]
    EmptyMeasure,

    #[error("measure has {atoms} atoms, at least {required} required")]
    TooFewAtoms { atoms: usize, required: usize },

    #[error("function has {got} values but the measure has {expected} atoms")]
    Misaligned { expected: usize, got: usize },

    #[error("non-finite function value at atom {index}")]
    NonFiniteValue { index: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("{location}: {message}")]
    Schema { location: String, message: String },

    #[error("no admissible samples: {0}")]
    NoSamples(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn schema(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            location: location.into(),
            message: message.into(),
        }
    }
}
