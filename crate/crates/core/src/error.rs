use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("relation is not a partial order: {0}")]
    NotPartialOrder(String),

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("window mismatch: {left} vs {right}")]
    WindowMismatch { left: usize, right: usize },

    #[error("nodes {0} and {1} are not related")]
    Unrelated(usize, usize),

    #[error("functoriality fails for {lower} <= {middle} <= {upper} at basis element {basis}")]
    NotFunctorial {
        lower: usize,
        middle: usize,
        upper: usize,
        basis: usize,
    },

    #[error("cochain does not belong to the expected system")]
    SystemMismatch,

    #[error("arity mismatch: expected {expected}, found {found}")]
    Arity { expected: usize, found: usize },

    #[error("cochain is not coherent; first failure at tuple {0:?}")]
    Incoherent(Vec<usize>),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("infeasible parameters at stage {stage}: {reason}")]
    Infeasible { stage: String, reason: String },

    #[error("resource cap exceeded: {0}")]
    Cap(String),
}
