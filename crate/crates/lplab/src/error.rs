use thiserror::Error;

/// Every failure the lab can report.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("input outside the domain: {0}")]
    InputDomain(String),

    #[error("iteration did not converge: {what} (residual {residual:e})")]
    Convergence { what: String, residual: f64 },

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("invalid model: {0}")]
    Model(String),

    #[error("linear process does not exist: {0}")]
    Nonexistence(String),

    #[error("regularity condition fails: {0}")]
    Regularity(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("estimation failed: {0}")]
    Estimation(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl LabError {
    pub fn domain(msg: impl Into<String>) -> Self {
        LabError::InputDomain(msg.into())
    }

    pub fn model(msg: impl Into<String>) -> Self {
        LabError::Model(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        LabError::Numeric(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        LabError::Config(msg.into())
    }

    /// True for errors caused by the user's configuration rather than the numerics.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            LabError::Config(_)
                | LabError::Model(_)
                | LabError::InputDomain(_)
                | LabError::Nonexistence(_)
                | LabError::Regularity(_)
                | LabError::Format(_)
                | LabError::Io(_)
        )
    }

    /// Process exit code: 2 for configuration problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        if self.is_config_error() {
            2
        } else {
            3
        }
    }
}

impl From<std::io::Error> for LabError {
    fn from(e: std::io::Error) -> Self {
        LabError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for LabError {
    fn from(e: serde_json::Error) -> Self {
        LabError::Format(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
