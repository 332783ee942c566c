//! Linear programs, a reference simplex solver and supporting utilities.

mod model;
mod mps;
mod rowgen;
mod simplex;

pub use model::{
    check_feasibility, dual_objective, Constraint, FeasibilityReport, LinearProgram, LpSolution,
    LpStatus, Relation, RowId, SolveOptions, VarId, Variable,
};
pub use mps::write_mps;
pub use rowgen::RowGeneration;
pub use simplex::RevisedSimplex;

#[derive(Debug, thiserror::Error)]
pub enum LpError {
    #[error("'{0}' has invalid bounds [{1}, {2}]")]
    InvalidBounds(String, f64, f64),
    #[error("'{0}' has a non-finite coefficient")]
    NonFinite(String),
    #[error("constraint '{0}' references unknown variable {1}")]
    UnknownVariable(String, usize),
    #[error("expected {0} values, got {1}")]
    Dimension(usize, usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Anything that can solve a [`LinearProgram`]. Implementations must be pure:
/// the same program and options always give the same solution.
pub trait LpSolver: Sync {
    fn solve(&self, lp: &LinearProgram, opts: &SolveOptions) -> Result<LpSolution, LpError>;
}
