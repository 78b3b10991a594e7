use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum MoqaError {
    #[error("matrix is not symmetric: entry ({row}, {col}) = {upper} but ({col}, {row}) = {lower}")]
    SymmetryViolation {
        row: usize,
        col: usize,
        upper: f64,
        lower: f64,
    },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("eigenvalue iteration did not converge after {iterations} iterations (residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("resource budget exceeded: {what} requires {required:e}, budget is {budget:e}")]
    ResourceBudget {
        what: &'static str,
        required: f64,
        budget: f64,
    },

    #[error("non-finite coefficient produced by allocation {allocation:?}")]
    NumericRange { allocation: Vec<u32> },

    #[error("n = {n} exceeds the brute-force cap of {cap}")]
    BruteForceCap { n: usize, cap: usize },

    #[error("landscape takes negative value {value:e} at bitstring {index}; apply a positivity shift first")]
    NegativeLandscape { index: u64, value: f64 },

    #[error("spectral gap ratio {ratio} does not define a threshold (must be > 0)")]
    UndefinedThreshold { ratio: f64 },

    #[error("objectives are not an exact +/- field pair: {0}")]
    NotSymmetricPair(String),

    #[error("no feasible assignment found after {attempts} constraint resamples")]
    Infeasible { attempts: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl MoqaError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        MoqaError::InvalidInput(msg.into())
    }

    /// True for errors that signal a refused computation rather than bad input.
    pub fn is_resource_refusal(&self) -> bool {
        matches!(
            self,
            MoqaError::ResourceBudget { .. } | MoqaError::BruteForceCap { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, MoqaError>;
