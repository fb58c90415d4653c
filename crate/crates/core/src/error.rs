use thiserror::Error;

#[derive(Debug, Error)]
pub enum TcaError {
    /// One or more invariant violations, each as a human-readable message.
    #[error("validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("insufficient data: {0}")]
    Insufficient(String),
    #[error("no sign change of {what} in [{lo}, {hi}]")]
    NoRoot { what: String, lo: f64, hi: f64 },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl TcaError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        TcaError::Validation(vec![msg.into()])
    }
}

pub type Result<T> = std::result::Result<T, TcaError>;
