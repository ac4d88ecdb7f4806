//! Trajectory optimization: variable transforms, constraint transcription at
//! time stamps, and the augmented Lagrangian solve.

pub mod alm;
mod feasibility;
mod guess;
pub mod lbfgs;
mod problem;
pub mod transform;

pub use alm::{alm_solve, AlmConfig, AlmError, AlmResult, AlmState, ConstrainedProblem, ConstraintVisitor};
pub use feasibility::{check_feasibility, FeasibilityReport, FeasibilityTolerances};
pub use guess::{initial_guess, pieces_for_length, GuessError};
pub use lbfgs::{lbfgs_minimize, LbfgsConfig, LbfgsResult, LbfgsStatus};
pub use problem::{Decoded, Layout, Parameters, TrajectoryProblem, CLASS_NAMES};
pub use transform::{hitch_from_free, hitch_to_free, lc2, lc2_inv};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Constraint stamps per tractor piece.
    pub stamps: usize,
    /// Trailer pieces per tractor piece.
    pub trailer_piece_ratio: usize,
    /// Weight of the total duration in the cost.
    pub rho_t: f64,
    /// Jerk weights of `x` and `y` over the slackened arc length.
    pub w_p: [f64; 2],
    /// Jerk weight of the slackened arc length over time.
    pub w_s: f64,
    /// Jerk weight of each trailer yaw over time.
    pub w_theta: f64,
    /// Limits are tightened by this fraction inside the optimizer so that
    /// the trajectory between stamps stays within the true limits.
    pub bound_margin: f64,
    /// Extra obstacle clearance required at stamps (m).
    pub clearance_margin: f64,
    /// Extra inset of body corners from target edges (m).
    pub region_margin: f64,
    pub memory: usize,
    pub grad_tol: f64,
    pub rel_tol: f64,
    pub max_inner: usize,
    pub rho_init: f64,
    pub rho_growth: f64,
    pub violation_tol: f64,
    pub max_outer: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            stamps: 12,
            trailer_piece_ratio: 2,
            rho_t: 10.0,
            w_p: [1.0, 1.0],
            w_s: 1.0,
            w_theta: 1.0,
            bound_margin: 0.02,
            clearance_margin: 0.03,
            region_margin: 0.01,
            memory: 8,
            grad_tol: 1e-6,
            rel_tol: 1e-7,
            max_inner: 200,
            rho_init: 1.0,
            rho_growth: 3.0,
            violation_tol: 1e-3,
            max_outer: 50,
        }
    }
}

impl SolverConfig {
    pub fn alm(&self) -> AlmConfig {
        AlmConfig {
            rho_init: self.rho_init,
            rho_growth: self.rho_growth,
            violation_tol: self.violation_tol,
            max_outer: self.max_outer,
            inner: LbfgsConfig {
                memory: self.memory,
                grad_tol: self.grad_tol,
                rel_tol: self.rel_tol,
                max_iterations: self.max_inner,
                ..LbfgsConfig::default()
            },
            ..AlmConfig::default()
        }
    }
}
