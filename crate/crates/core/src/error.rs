use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A parameter record violates its invariants.
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    /// An iterative routine failed to meet its tolerance.
    #[error("numerical error in {routine}: {detail}")]
    Numerical { routine: &'static str, detail: String },

    /// A complex-arithmetic evaluation of a real quantity left an imaginary part.
    #[error("branch inconsistency: imaginary residue {residue:e} exceeds {tolerance:e} ({context})")]
    Branch {
        residue: f64,
        tolerance: f64,
        context: String,
    },

    /// Two independent evaluation routes disagree.
    #[error("consistency error: {what} differs by {difference:e} (tolerance {tolerance:e})")]
    Consistency {
        what: &'static str,
        difference: f64,
        tolerance: f64,
    },

    /// No feasible point could be found by a fitting routine.
    #[error("infeasible fit: {0}")]
    Infeasible(String),

    #[error("invalid argument: {0}")]
    Argument(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn numerical(routine: &'static str, detail: impl Into<String>) -> Self {
        Error::Numerical {
            routine,
            detail: detail.into(),
        }
    }
}
