use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("zero wave vector has no transverse polarization frame")]
    ZeroWaveVector,

    #[error("mode {mode} violates the band limit on axis {axis}: {reason}")]
    Nyquist { mode: usize, axis: usize, reason: String },

    #[error("dimension {dim} exceeds the configured budget {budget}")]
    DimensionBudget { dim: usize, budget: usize },

    #[error("solver did not converge after {iterations} iterations (residual {residual:.3e}, interval [{lower:.6e}, {upper:.6e}])")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        lower: f64,
        upper: f64,
    },

    #[error("solver breakdown: {0}")]
    Breakdown(String),

    #[error("configuration invalid:\n{}", .0.join("\n"))]
    Config(Vec<String>),
}

impl Error {
    pub(crate) fn param(name: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.to_string(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
