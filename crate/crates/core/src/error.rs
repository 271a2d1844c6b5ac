use thiserror::Error;

/// Errors raised by the algebra, representation and metric layers.
#[derive(Debug, Error)]
pub enum QhmError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("capability error: {0}")]
    Capability(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("numerical error: {message} (after {iterations} iterations)")]
    Numerical { message: String, iterations: usize },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl QhmError {
    /// Short machine-readable tag, used in CLI error objects.
    pub fn kind(&self) -> &'static str {
        match self {
            QhmError::Domain(_) => "domain",
            QhmError::Config(_) => "config",
            QhmError::Capability(_) => "capability",
            QhmError::Precondition(_) => "precondition",
            QhmError::Numerical { .. } => "numerical",
            QhmError::Json(_) => "json",
            QhmError::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, QhmError>;
