use thiserror::Error;

/// Crate-wide error type. The CLI maps variants onto process exit codes:
/// schema problems exit 2, window exhaustion exits 3, internal invariant
/// violations exit 4, failed checks exit 1.
#[derive(Debug, Error)]
pub enum EngineError {
    #[error("{0} is not prime")]
    NotPrime(u64),

    #[error("schema: {0}")]
    Schema(String),

    #[error("inhomogeneous polynomial at index {index}: {detail}")]
    Inhomogeneous { index: usize, detail: String },

    #[error("boundary is not a cycle: {0}")]
    NotACycle(String),

    #[error("parity mismatch: {0}")]
    ParityMismatch(String),

    #[error("window too small: {0}")]
    WindowTooSmall(String),

    #[error("map is not weakly closed: {0}")]
    NotWeaklyClosed(String),

    #[error("preimage mismatch: {0}")]
    PreimageMismatch(String),

    #[error("cache: {0}")]
    Cache(String),

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl EngineError {
    /// Exit code the CLI reports for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            EngineError::NotPrime(_)
            | EngineError::Schema(_)
            | EngineError::Inhomogeneous { .. } => 2,
            EngineError::WindowTooSmall(_) => 3,
            EngineError::Cache(_) => 2,
            // a precondition the input fails to satisfy, not a bug
            EngineError::NotWeaklyClosed(_) => 1,
            _ => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, EngineError>;
