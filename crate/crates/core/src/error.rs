use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied parameter is outside its valid range.
    #[error("invalid parameter `{field}`: {reason}")]
    Parameter { field: &'static str, reason: String },

    /// The input is well-formed but the operation is undefined on it.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("{what} is not supported: {reason}")]
    Unsupported { what: &'static str, reason: String },

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("numeric failure: {message} (residual {residual:e})")]
    Numeric { message: String, residual: f64 },

    #[error("random graph sampling failed after {attempts} attempts: {reason}")]
    Sampling { attempts: u32, reason: String },

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            field,
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad input (as opposed to resource or numeric limits).
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Parameter { .. }
                | Error::Domain(_)
                | Error::Unsupported { .. }
                | Error::Parse { .. }
                | Error::Validation(_)
        )
    }
}

pub(crate) fn check_epsilon(eps: f64) -> Result<()> {
    if eps.is_finite() && eps > 0.0 && eps <= 1.0 {
        Ok(())
    } else {
        Err(Error::param("epsilon", format!("{eps} is not in (0, 1]")))
    }
}
