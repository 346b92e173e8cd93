use alloc::boxed::Box;

use crate::nlp::PrimalDualPoint;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A pivot fell below the singularity threshold during factorization.
    #[error("singular matrix: pivot {pivot} has magnitude {magnitude:e}")]
    SingularMatrix { pivot: usize, magnitude: f64 },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    /// Fully-converged solve failed; carries the best iterate seen.
    #[error("solver did not converge after {iterations} iterations (best residual {residual:e})")]
    SolveFailed {
        iterations: usize,
        residual: f64,
        best: Box<PrimalDualPoint>,
    },

    /// A solver error raised at a given linear solve of an SSPC step
    /// (0 = predictor, 1.. = corrector index).
    #[error("step failed at solve {iteration}: {source}")]
    StepFailed { iteration: usize, source: Box<Error> },

    #[error("non-finite value produced by {what}")]
    NonFiniteEvaluation { what: &'static str },

    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("attitude singularity: |cos(pitch)| = {cos_pitch:e}")]
    GimbalLock { cos_pitch: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
}

impl Error {
    pub(crate) fn dims(what: &'static str, expected: usize, found: usize) -> Self {
        Error::DimensionMismatch {
            what,
            expected,
            found,
        }
    }

    /// Strips [`Error::StepFailed`] wrappers.
    pub fn root_cause(&self) -> &Error {
        match self {
            Error::StepFailed { source, .. } => source.root_cause(),
            other => other,
        }
    }
}
