use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("grade overflow: grade {grade} exceeds ambient dimension {dim}")]
    GradeOverflow { grade: usize, dim: usize },

    #[error("invalid multi-index: {0}")]
    InvalidMultiIndex(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("precision guard violated: {0}")]
    PrecisionGuard(String),

    #[error("work budget exceeded: {needed} units requested, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },

    #[error("basis is rank deficient")]
    RankDeficient,

    #[error("coefficient is not affine in the parameter")]
    NotAffine,

    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("linear program is unbounded")]
    Unbounded,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
