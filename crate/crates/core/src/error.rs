use thiserror::Error;

/// Errors raised by the solver toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("conditioning undefined: state frequency below tolerance at states {0:?}")]
    ConditioningUndefined(Vec<usize>),

    #[error("policy recovery undefined: no state with positive frequency in observations {0:?}")]
    RecoveryUndefined(Vec<usize>),

    #[error("singular linear system in {0}")]
    Singular(&'static str),

    #[error("Bézout number {count} exceeds the path budget {budget}")]
    BudgetExceeded { count: u128, budget: u128 },

    #[error("system is not square: {equations} equations in {variables} variables")]
    NotSquare { equations: usize, variables: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("no positive feasible critical point found ({0})")]
    NoFeasibleSolution(String),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
