use thiserror::Error;

pub type Result<T> = std::result::Result<T, OrkaError>;

#[derive(Debug, Error)]
pub enum OrkaError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("data contains non-finite entries")]
    NonFinite,

    #[error("hyperbolic kernel form overflowed for n={n}, mu={mu} (n*phi = {n_phi:.3})")]
    KernelOverflow { n: usize, mu: f64, n_phi: f64 },

    #[error("shift difference {lag:?} between columns {j} and {k} lies outside the stored radius {radius}")]
    LagOutOfBand {
        j: usize,
        k: usize,
        lag: [i64; 2],
        radius: i64,
    },

    #[error("graph partition would hold {nodes} nodes, exceeding the budget of {budget}")]
    NodeBudgetExceeded { nodes: u128, budget: u64 },

    #[error(
        "brute force would enumerate {candidates} shift vectors, exceeding the budget of {budget}"
    )]
    EnumerationBudgetExceeded { candidates: u128, budget: u64 },

    #[error("truncation bounds are undefined for K={k} >= N-1 (N={n})")]
    BoundsUndefined { n: usize, k: usize },

    #[error("malformed matrix file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl OrkaError {
    pub(crate) fn shape(expected: impl ToString, found: impl ToString) -> Self {
        OrkaError::DimensionMismatch {
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}
