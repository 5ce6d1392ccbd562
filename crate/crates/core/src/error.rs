use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Config text could not be parsed, or named an unknown key.
    #[error("config error: {0}")]
    Config(String),

    /// A parameter violates its validity range.
    #[error("invalid parameter `{field}`: must be {bound} (got {value})")]
    Validation {
        field: &'static str,
        bound: &'static str,
        value: String,
    },

    /// An argument is outside the domain of the function it was passed to.
    #[error("domain error: {0}")]
    Domain(String),

    /// Inputs for which the quantity is undefined (e.g. no clicks at all).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serialize(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Short machine-readable tag for the error class.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::Validation { .. } => "validation",
            Error::Domain(_) => "domain",
            Error::Degenerate(_) => "degenerate",
            Error::Io(_) => "io",
            Error::Serialize(_) => "serialize",
        }
    }
}

/// Checks that `p` is a probability.
pub(crate) fn check_probability(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must lie in [0, 1], got {p}")))
    }
}
