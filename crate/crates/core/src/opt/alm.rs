//! Powell-Hestenes-Rockafellar augmented Lagrangian around L-BFGS.
//!
//! A problem reports its constraints through a [`ConstraintVisitor`] while
//! it evaluates the cost. The visitor returns, for each constraint value,
//! the derivative of the penalty it adds, so the problem can chain that
//! weight into its own gradient without materializing a Jacobian.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::lbfgs::{lbfgs_minimize, LbfgsConfig, LbfgsError, LbfgsStatus};

/// Receives constraint values in a fixed order and returns `dPenalty/dvalue`.
pub trait ConstraintVisitor {
    /// `value = 0` is required.
    fn equality(&mut self, class: usize, value: f64) -> f64;
    /// `value <= 0` is required.
    fn inequality(&mut self, class: usize, value: f64) -> f64;
}

pub trait ConstrainedProblem {
    fn dim(&self) -> usize;
    /// Names of the constraint classes used in visitor calls.
    fn class_names(&self) -> Vec<&'static str>;
    /// Returns the cost. Writes `d(cost + penalties)/dx` into `grad`, where
    /// the penalty derivatives are whatever the visitor returns.
    fn evaluate(&self, x: &[f64], visitor: &mut dyn ConstraintVisitor, grad: &mut [f64]) -> f64;
}

/// Width of the cubic blend at the kink of the squared hinge.
pub const HINGE_SMOOTHING: f64 = 1e-4;

/// Squared hinge `max(0, z)^2` blended cubically near zero so that it is
/// twice continuously differentiable. Returns value and derivative.
pub fn smooth_hinge(z: f64) -> (f64, f64) {
    let eps = HINGE_SMOOTHING;
    if z <= 0.0 {
        (0.0, 0.0)
    } else if z <= eps {
        (z * z * z / (3.0 * eps), z * z / eps)
    } else {
        (z * z - eps * z + eps * eps / 3.0, 2.0 * z - eps)
    }
}

/// Records values without penalizing them.
#[derive(Debug, Default, Clone)]
pub struct RecordingVisitor {
    pub equalities: Vec<(usize, f64)>,
    pub inequalities: Vec<(usize, f64)>,
}

impl ConstraintVisitor for RecordingVisitor {
    fn equality(&mut self, class: usize, value: f64) -> f64 {
        self.equalities.push((class, value));
        0.0
    }

    fn inequality(&mut self, class: usize, value: f64) -> f64 {
        self.inequalities.push((class, value));
        0.0
    }
}

impl RecordingVisitor {
    /// Largest violation per class: `|h|` for equalities, `max(g, 0)` otherwise.
    pub fn class_violations(&self, n_classes: usize) -> Vec<f64> {
        let mut out = vec![0.0; n_classes];
        for &(c, v) in &self.equalities {
            out[c] = f64::max(out[c], v.abs());
        }
        for &(c, v) in &self.inequalities {
            out[c] = f64::max(out[c], v.max(0.0));
        }
        out
    }

    pub fn max_violation(&self) -> f64 {
        let eq = self.equalities.iter().map(|(_, v)| v.abs());
        let ineq = self.inequalities.iter().map(|(_, v)| v.max(0.0));
        eq.chain(ineq).fold(0.0, f64::max)
    }
}

/// Multipliers and penalty weight.
#[derive(Debug, Clone, PartialEq)]
pub struct AlmState {
    pub lambda: Vec<f64>,
    pub mu: Vec<f64>,
    pub rho: f64,
}

/// Adds `(rho/2) (h + lambda/rho)^2` per equality and
/// `(rho/2) phi(g + mu/rho)` per inequality, where `phi` is [`smooth_hinge`].
pub struct PenaltyVisitor<'a> {
    state: &'a AlmState,
    eq: usize,
    ineq: usize,
    pub penalty: f64,
}

impl<'a> PenaltyVisitor<'a> {
    pub fn new(state: &'a AlmState) -> Self {
        Self { state, eq: 0, ineq: 0, penalty: 0.0 }
    }
}

impl ConstraintVisitor for PenaltyVisitor<'_> {
    fn equality(&mut self, _class: usize, value: f64) -> f64 {
        let rho = self.state.rho;
        let lambda = self.state.lambda.get(self.eq).copied().unwrap_or(0.0);
        self.eq += 1;
        let z = value + lambda / rho;
        self.penalty += 0.5 * rho * z * z - 0.5 * lambda * lambda / rho;
        rho * z
    }

    fn inequality(&mut self, _class: usize, value: f64) -> f64 {
        let rho = self.state.rho;
        let mu = self.state.mu.get(self.ineq).copied().unwrap_or(0.0);
        self.ineq += 1;
        let (phi, dphi) = smooth_hinge(value + mu / rho);
        self.penalty += 0.5 * rho * phi - 0.5 * mu * mu / rho;
        0.5 * rho * dphi
    }
}

/// Augmented Lagrangian value and gradient at `x` for the given state.
pub fn augmented_lagrangian<P: ConstrainedProblem + ?Sized>(problem: &P, state: &AlmState, x: &[f64], grad: &mut [f64]) -> f64 {
    let mut visitor = PenaltyVisitor::new(state);
    let cost = problem.evaluate(x, &mut visitor, grad);
    cost + visitor.penalty
}

#[derive(Debug, Clone)]
pub struct AlmConfig {
    pub rho_init: f64,
    pub rho_growth: f64,
    pub rho_max: f64,
    /// Required shrink factor of the violation between outer iterations;
    /// otherwise the penalty weight grows.
    pub shrink: f64,
    pub violation_tol: f64,
    pub max_outer: usize,
    pub inner: LbfgsConfig,
}

impl Default for AlmConfig {
    fn default() -> Self {
        Self {
            rho_init: 1.0,
            rho_growth: 3.0,
            rho_max: 1e8,
            shrink: 0.5,
            violation_tol: 1e-3,
            max_outer: 50,
            inner: LbfgsConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OuterRecord {
    pub iteration: usize,
    pub cost: f64,
    pub violation: f64,
    pub class_violations: Vec<f64>,
    pub rho: f64,
    pub inner_iterations: usize,
    pub inner_status: String,
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone)]
pub struct AlmResult {
    pub x: Vec<f64>,
    pub cost: f64,
    pub violation: f64,
    pub state: AlmState,
    pub history: Vec<OuterRecord>,
}

#[derive(Debug, Error)]
pub enum AlmError {
    #[error("no feasible point after {iterations} outer iterations (violation {violation})")]
    MaxOuterIterations { iterations: usize, violation: f64, result: Box<AlmResult> },
    #[error("inner solve failed: {0}")]
    InnerSolveFailure(#[from] LbfgsError),
}

fn record<P: ConstrainedProblem + ?Sized>(problem: &P, x: &[f64]) -> (f64, RecordingVisitor) {
    let mut rec = RecordingVisitor::default();
    let mut scratch = vec![0.0; problem.dim()];
    let cost = problem.evaluate(x, &mut rec, &mut scratch);
    (cost, rec)
}

pub fn alm_solve<P: ConstrainedProblem + ?Sized>(problem: &P, x0: &[f64], cfg: &AlmConfig) -> Result<AlmResult, AlmError> {
    let clock = Instant::now();
    let n_classes = problem.class_names().len();
    let (_, rec0) = record(problem, x0);
    let mut state = AlmState {
        lambda: vec![0.0; rec0.equalities.len()],
        mu: vec![0.0; rec0.inequalities.len()],
        rho: cfg.rho_init,
    };
    let mut x = x0.to_vec();
    let mut prev_violation = f64::INFINITY;
    let mut history = Vec::new();
    let mut last = (0.0, f64::INFINITY);

    for outer in 0..cfg.max_outer {
        let inner = lbfgs_minimize(|x, g| augmented_lagrangian(problem, &state, x, g), &x, &cfg.inner)?;
        x = inner.x;
        let (cost, rec) = record(problem, &x);
        let violation = rec.max_violation();
        last = (cost, violation);
        history.push(OuterRecord {
            iteration: outer,
            cost,
            violation,
            class_violations: rec.class_violations(n_classes),
            rho: state.rho,
            inner_iterations: inner.iterations,
            inner_status: format!("{:?}", inner.status),
            elapsed_ms: clock.elapsed().as_secs_f64() * 1e3,
        });
        if violation < cfg.violation_tol && inner.status != LbfgsStatus::LineSearchFailed {
            return Ok(AlmResult { x, cost, violation, state, history });
        }
        for (l, (_, h)) in state.lambda.iter_mut().zip(&rec.equalities) {
            *l += state.rho * h;
        }
        for (m, (_, g)) in state.mu.iter_mut().zip(&rec.inequalities) {
            *m = (*m + state.rho * g).max(0.0);
        }
        if violation > cfg.shrink * prev_violation {
            state.rho = (state.rho * cfg.rho_growth).min(cfg.rho_max);
        }
        prev_violation = violation;
    }
    let result = AlmResult { x, cost: last.0, violation: last.1, state, history };
    Err(AlmError::MaxOuterIterations { iterations: cfg.max_outer, violation: last.1, result: Box::new(result) })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// min x^2 s.t. 1 - x <= 0
    struct Bound;

    impl ConstrainedProblem for Bound {
        fn dim(&self) -> usize {
            1
        }
        fn class_names(&self) -> Vec<&'static str> {
            vec!["bound"]
        }
        fn evaluate(&self, x: &[f64], v: &mut dyn ConstraintVisitor, g: &mut [f64]) -> f64 {
            let w = v.inequality(0, 1.0 - x[0]);
            g[0] = 2.0 * x[0] - w;
            x[0] * x[0]
        }
    }

    /// min |x|^2 s.t. x1 + x2 = 1
    struct Line;

    impl ConstrainedProblem for Line {
        fn dim(&self) -> usize {
            2
        }
        fn class_names(&self) -> Vec<&'static str> {
            vec!["line"]
        }
        fn evaluate(&self, x: &[f64], v: &mut dyn ConstraintVisitor, g: &mut [f64]) -> f64 {
            let w = v.equality(0, x[0] + x[1] - 1.0);
            g[0] = 2.0 * x[0] + w;
            g[1] = 2.0 * x[1] + w;
            x[0] * x[0] + x[1] * x[1]
        }
    }

    fn tight() -> AlmConfig {
        AlmConfig { violation_tol: 1e-7, ..Default::default() }
    }

    #[test]
    fn inequality_textbook_case() {
        let r = alm_solve(&Bound, &[3.0], &tight()).unwrap();
        assert!((r.x[0] - 1.0).abs() < 1e-6, "{:?}", r.x);
        assert!(r.state.mu[0] >= 0.0);
        assert!((r.state.mu[0] - 2.0).abs() < 1e-3);
    }

    #[test]
    fn equality_textbook_case() {
        let r = alm_solve(&Line, &[0.0, 0.0], &tight()).unwrap();
        assert!((r.x[0] - 0.5).abs() < 1e-6 && (r.x[1] - 0.5).abs() < 1e-6);
        assert!((r.state.lambda[0] + 1.0).abs() < 1e-3);
    }

    #[test]
    fn rho_never_decreases() {
        let r = alm_solve(&Bound, &[-4.0], &tight()).unwrap();
        assert!(r.history.windows(2).all(|w| w[1].rho >= w[0].rho));
    }

    #[test]
    fn hinge_is_c2() {
        let eps = HINGE_SMOOTHING;
        let (v, d) = smooth_hinge(eps);
        let above = (eps * eps - eps * eps + eps * eps / 3.0, 2.0 * eps - eps);
        assert!((v - above.0).abs() < 1e-20 && (d - above.1).abs() < 1e-16);
        assert_eq!(smooth_hinge(-1.0), (0.0, 0.0));
        let h = 1e-9;
        for z in [0.3 * eps, 2.0 * eps, 0.5] {
            let fd = (smooth_hinge(z + h).0 - smooth_hinge(z - h).0) / (2.0 * h);
            assert!((fd - smooth_hinge(z).1).abs() < 1e-6);
        }
    }

    #[test]
    fn alm_gradient_matches_finite_differences() {
        let state = AlmState { lambda: vec![0.3], mu: vec![], rho: 5.0 };
        let mut g = [0.0; 2];
        let x = [0.2, -0.4];
        augmented_lagrangian(&Line, &state, &x, &mut g);
        let h = 1e-6;
        for i in 0..2 {
            let mut xp = x;
            xp[i] += h;
            let mut xm = x;
            xm[i] -= h;
            let mut s = [0.0; 2];
            let fd = (augmented_lagrangian(&Line, &state, &xp, &mut s) - augmented_lagrangian(&Line, &state, &xm, &mut s))
                / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-6);
        }
    }
}
