use thiserror::Error;

/// Engine errors. Most indicate a malformed system description; the budget
/// variants indicate an instance too large for exhaustive search.
#[derive(Clone, PartialEq, Eq, Debug, Error)]
pub enum EmcsError {
    #[error("invalid atom `{0}`: atoms are non-empty tokens over [a-zA-Z0-9_]")]
    InvalidAtom(String),
    #[error("invalid knowledge base: {report}")]
    InvalidKb { report: String },
    #[error("bridge literal index {index} out of range for {kind} (count {count})")]
    IndexOutOfRange {
        kind: &'static str,
        index: usize,
        count: usize,
    },
    #[error("shape mismatch: expected {expected} {kind}, got {got}")]
    ShapeMismatch {
        kind: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("search budget exceeded: more than {limit} candidates")]
    BudgetExceeded { limit: u64 },
    #[error("requested size {size} exceeds observation sequence length {len}")]
    SizeExceedsObservations { size: usize, len: usize },
}
