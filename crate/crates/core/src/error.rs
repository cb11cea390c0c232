use thiserror::Error;

use crate::game::SituationError;
use crate::induction::NotAcyclic;
use crate::oracle::OracleError;

/// Failure of one of the constructive solvers.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolveError {
    #[error("unsupported input: {0}")]
    Unsupported(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// A construction produced something that contradicts its own invariants.
    #[error("internal invariant violated: {0}")]
    Internal(String),
    #[error(transparent)]
    Situation(#[from] SituationError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    NotAcyclic(#[from] NotAcyclic),
}
