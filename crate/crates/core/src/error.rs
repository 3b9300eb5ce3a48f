use thiserror::Error;

/// Errors raised across the crate.
///
/// Variants split into "the caller handed us something invalid" and "the
/// numerics broke". The CLI maps the first group to exit code 2 and
/// [`Error::Numerical`] to exit code 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("line {line}: {reason}")]
    MalformedRow { line: u64, reason: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("objective is unbounded below on [0, {w_max}]")]
    UnboundedBelow { w_max: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures caused by user input rather than by the numerics.
    pub fn is_user_error(&self) -> bool {
        !matches!(self, Error::Numerical(_) | Error::UnboundedBelow { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_probability(name: &'static str, p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::param(name, format!("{p} is not in (0, 1)")))
    }
}
