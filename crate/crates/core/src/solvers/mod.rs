//! Convex subproblem solvers for the two halves of the alternate minimization.

mod displacement;
mod phase;

pub use displacement::{solve_u, DisplacementSolver};
pub use phase::{kkt_report, solve_z, solve_z_unpenalized, KktReport, PhaseSolver};

/// Defaults for both solvers: residual ∞-norm tolerance and Newton iteration cap.
pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_NEWTON: usize = 50;

#[derive(Debug, Clone, Default)]
pub struct SolveStats {
    pub iterations: usize,
    pub final_residual: f64,
    /// Number of nodes pinned at the irreversibility bound (phase solves only).
    pub active_set_size: usize,
    pub converged: bool,
    /// Objective value after each accepted iterate, starting with the initial point.
    pub objective_log: Vec<f64>,
}

/// Relative tolerance for objective comparisons in line searches (floating round-off only).
pub(crate) fn roundoff_allowance(value: f64) -> f64 {
    64.0 * f64::EPSILON * value.abs()
}
