use thiserror::Error;

/// Errors produced anywhere in the estimation pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Input violated a documented precondition.
    #[error("validation error: {0}")]
    Validation(String),

    /// An iterative routine did not converge.
    #[error("numerical failure in {routine} after {iterations} iterations")]
    NoConvergence {
        routine: &'static str,
        iterations: usize,
    },

    /// The neighborhood does not determine a sphere (e.g. collinear points for a circle fit).
    #[error("degenerate neighborhood: condition number {condition:e} exceeds threshold")]
    DegenerateNeighborhood { condition: f64 },

    /// A point projects onto the sphere center, so its spherical projection is undefined.
    #[error("point projects onto the sphere center")]
    ProjectionSingular,

    /// Every kernel weight vanished.
    #[error("no effective neighbors: all kernel weights are zero")]
    NoEffectiveNeighbors,
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    /// True for errors that stem from numerical breakdown rather than bad input.
    pub fn is_numerical(&self) -> bool {
        !matches!(self, Error::Validation(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
