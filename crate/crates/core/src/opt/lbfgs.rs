//! Limited-memory BFGS with a weak Wolfe line search.

use std::collections::VecDeque;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LbfgsStatus {
    /// Gradient norm below tolerance.
    Converged,
    /// Relative objective decrease over the recent window fell below tolerance.
    Stalled,
    MaxIterations,
    /// No step satisfying the Wolfe conditions was found; the best iterate is returned.
    LineSearchFailed,
}

#[derive(Debug, Error, PartialEq)]
pub enum LbfgsError {
    #[error("objective is not finite at the initial point ({0})")]
    NonFiniteObjective(f64),
}

#[derive(Debug, Clone)]
pub struct LbfgsConfig {
    pub memory: usize,
    /// Stop when `|g|_inf <= grad_tol * max(1, |x|_inf)`.
    pub grad_tol: f64,
    /// Stop when the objective decreased by less than `rel_tol` (relative)
    /// over the last `past` iterations.
    pub rel_tol: f64,
    pub past: usize,
    pub max_iterations: usize,
    /// Sufficient decrease constant.
    pub c1: f64,
    /// Curvature constant.
    pub c2: f64,
    pub max_line_search: usize,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        Self {
            memory: 8,
            grad_tol: 1e-8,
            rel_tol: 1e-10,
            past: 4,
            max_iterations: 1000,
            c1: 1e-4,
            c2: 0.9,
            max_line_search: 60,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LbfgsResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub status: LbfgsStatus,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Minimizes `f`, which writes the gradient into its second argument and
/// returns the objective value.
pub fn lbfgs_minimize<F>(mut f: F, x0: &[f64], cfg: &LbfgsConfig) -> Result<LbfgsResult, LbfgsError>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut g = vec![0.0; n];
    let mut fx = f(&x, &mut g);
    let mut evaluations = 1;
    if !fx.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Err(LbfgsError::NonFiniteObjective(fx));
    }
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(cfg.memory);
    let mut past_f: VecDeque<f64> = VecDeque::with_capacity(cfg.past + 1);
    past_f.push_back(fx);
    let mut d = vec![0.0; n];
    let mut alpha = vec![0.0; cfg.memory];
    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];

    for iter in 0..cfg.max_iterations {
        if inf_norm(&g) <= cfg.grad_tol * inf_norm(&x).max(1.0) {
            return Ok(LbfgsResult { x, f: fx, iterations: iter, evaluations, status: LbfgsStatus::Converged });
        }
        // two-loop recursion
        for (di, gi) in d.iter_mut().zip(&g) {
            *di = -gi;
        }
        for (k, (s, y, rho)) in history.iter().enumerate().rev() {
            alpha[k] = rho * dot(s, &d);
            for (di, yi) in d.iter_mut().zip(y) {
                *di -= alpha[k] * yi;
            }
        }
        if let Some((s, y, _)) = history.back() {
            let gamma = dot(s, y) / dot(y, y);
            d.iter_mut().for_each(|v| *v *= gamma);
        }
        for (k, (s, y, rho)) in history.iter().enumerate() {
            let beta = rho * dot(y, &d);
            for (di, si) in d.iter_mut().zip(s) {
                *di += (alpha[k] - beta) * si;
            }
        }
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            // not a descent direction: restart from steepest descent
            history.clear();
            for (di, gi) in d.iter_mut().zip(&g) {
                *di = -gi;
            }
            slope = -dot(&g, &g);
        }

        // Lewis-Overton bisection / expansion for the weak Wolfe conditions
        let mut step = if history.is_empty() { (1.0 / inf_norm(&d)).min(1.0) } else { 1.0 };
        let (mut lo, mut hi) = (0.0, f64::INFINITY);
        let mut accepted = false;
        let mut f_new = fx;
        for _ in 0..cfg.max_line_search {
            for i in 0..n {
                x_new[i] = x[i] + step * d[i];
            }
            f_new = f(&x_new, &mut g_new);
            evaluations += 1;
            if !f_new.is_finite() || f_new > fx + cfg.c1 * step * slope {
                hi = step;
            } else if dot(&g_new, &d) < cfg.c2 * slope {
                lo = step;
            } else {
                accepted = true;
                break;
            }
            step = if hi.is_finite() { 0.5 * (lo + hi) } else { 2.0 * lo };
            if hi.is_finite() && (hi - lo) <= 1e-16 * hi {
                break;
            }
        }
        if !accepted {
            // keep a sufficient-decrease point if the bracket found one
            if lo > 0.0 {
                for i in 0..n {
                    x_new[i] = x[i] + lo * d[i];
                }
                f_new = f(&x_new, &mut g_new);
                evaluations += 1;
            }
            if !(lo > 0.0 && f_new < fx) {
                return Ok(LbfgsResult {
                    x,
                    f: fx,
                    iterations: iter,
                    evaluations,
                    status: LbfgsStatus::LineSearchFailed,
                });
            }
        }

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        // cautious update keeps the inverse Hessian estimate positive definite
        if sy > 1e-12 * dot(&s, &s).max(f64::MIN_POSITIVE) * inf_norm(&g).max(1e-12) {
            if history.len() == cfg.memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
        std::mem::swap(&mut x, &mut x_new);
        std::mem::swap(&mut g, &mut g_new);
        fx = f_new;

        past_f.push_back(fx);
        if past_f.len() > cfg.past {
            let old = past_f.pop_front().unwrap();
            if (old - fx).abs() <= cfg.rel_tol * fx.abs().max(1.0) {
                return Ok(LbfgsResult { x, f: fx, iterations: iter + 1, evaluations, status: LbfgsStatus::Stalled });
            }
        }
    }
    Ok(LbfgsResult { x, f: fx, iterations: cfg.max_iterations, evaluations, status: LbfgsStatus::MaxIterations })
}
