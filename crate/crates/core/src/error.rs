use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("singular point at theta = {at}: {what}")]
    Singular { at: f64, what: String },
    #[error("regime error: {0}")]
    Regime(String),
    #[error("solver error: {0}")]
    Solver(String),
    #[error("inconsistency: {0}")]
    Inconsistency(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Short machine-readable tag, stable across releases.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Singular { .. } => "singular",
            Error::Regime(_) => "regime",
            Error::Solver(_) => "solver",
            Error::Inconsistency(_) => "inconsistency",
            Error::Unsupported(_) => "unsupported",
            Error::Parse(_) => "parse",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
