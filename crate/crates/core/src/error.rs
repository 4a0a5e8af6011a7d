use thiserror::Error;

/// Errors raised by the library. Each variant maps onto one CLI exit-code
/// class (see [`ShearletError::exit_code`]).
#[derive(Debug, Error)]
pub enum ShearletError {
    #[error("constraint violated: {0}")]
    Constraint(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: String, got: String },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("insufficient points: need at least {need}, got {got}")]
    InsufficientPoints { need: usize, got: usize },

    #[error("no convergence after {iterations} iterations (last residual {last_residual:.3e})")]
    NoConvergence {
        iterations: usize,
        last_residual: f64,
        history: Vec<f64>,
    },

    #[error("resolution too coarse: {0}")]
    Resolution(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

impl ShearletError {
    /// 2 = precondition, 3 = convergence, 4 = I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            ShearletError::NoConvergence { .. } => 3,
            ShearletError::Io(_) => 4,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, ShearletError>;
