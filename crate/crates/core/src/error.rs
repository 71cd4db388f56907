use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found} ({context})")]
    DimensionMismatch { expected: usize, found: usize, context: &'static str },

    #[error("Kraus set is empty")]
    EmptyKrausSet,

    #[error("map is not completely positive: Choi eigenvalue {min_eigenvalue:e}")]
    NotCompletelyPositive { min_eigenvalue: f64 },

    #[error("column block is not an isometry (residual {residual:e})")]
    NotIsometry { residual: f64 },

    #[error("cannot share a common pre-rotation between the two blocks (residual {residual:e})")]
    DecompositionFailure { residual: f64 },

    #[error("both branches of node '{label}' have vanishing probability")]
    NumericalDeadEnd { label: String },

    #[error("invalid Lindblad generator: {0}")]
    InvalidGenerator(String),

    #[error("generator did not relax after {iterations} doublings (last change {last_delta:e}, smallest {best_delta:e})")]
    NotRelaxing { iterations: usize, last_delta: f64, best_delta: f64 },

    #[error("channel failed CPTP validation: {0}")]
    NotCptp(String),

    #[error("truncation n_c = {n_c} too small (need at least {required})")]
    TruncationTooSmall { n_c: usize, required: usize },

    #[error("{what} failed internal consistency check (residual {residual:e})")]
    Internal { what: &'static str, residual: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
