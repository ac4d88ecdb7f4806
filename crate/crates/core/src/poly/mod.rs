//! Piecewise-quintic splines parameterized by waypoints, piece lengths and
//! boundary states.
//!
//! A spline with `M` pieces has `6M` coefficients per dimension. Fixing the
//! value and first derivative at both ends, a zero second derivative at both
//! ends, the value at each of the `M - 1` interior knots and continuity up to
//! the fourth derivative across them yields a square banded system, so the
//! coefficients are a smooth function of `(waypoints, lengths, boundary)`.
//! [`Minco`] solves that system and pulls gradients back through it.

mod banded;
mod trajectory;

pub use banded::{BandedMatrix, Factorization};
pub use trajectory::{composed_state, FlatTrajectory, JerkEnergy, Kinematics, SplineRecord};

use thiserror::Error;

use crate::model::ModelError;

pub const COEFFS: usize = 6;
/// Highest derivative order returned by [`QuinticSpline::eval`].
pub const MAX_ORDER: usize = 4;

#[derive(Debug, Error)]
pub enum PolyError {
    #[error("spline system is singular (piece lengths {0:?})")]
    SingularSystem(Vec<f64>),
    #[error("query {query} outside spline domain [0, {end}]")]
    OutOfDomain { query: f64, end: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// `d^order/dtau^order` of the natural basis `[1, tau, ..., tau^5]`.
#[inline]
pub fn basis(tau: f64, order: usize) -> [f64; COEFFS] {
    let t2 = tau * tau;
    let t3 = t2 * tau;
    let t4 = t3 * tau;
    match order {
        0 => [1.0, tau, t2, t3, t4, t4 * tau],
        1 => [0.0, 1.0, 2.0 * tau, 3.0 * t2, 4.0 * t3, 5.0 * t4],
        2 => [0.0, 0.0, 2.0, 6.0 * tau, 12.0 * t2, 20.0 * t3],
        3 => [0.0, 0.0, 0.0, 6.0, 24.0 * tau, 60.0 * t2],
        4 => [0.0, 0.0, 0.0, 0.0, 24.0, 120.0 * tau],
        5 => [0.0, 0.0, 0.0, 0.0, 0.0, 120.0],
        _ => [0.0; COEFFS],
    }
}

#[inline]
fn dot6(a: &[f64; COEFFS], c: impl Iterator<Item = f64>) -> f64 {
    a.iter().zip(c).map(|(x, y)| x * y).sum()
}

/// Value and first derivative of one spline end (the second derivative is
/// pinned to zero).
#[derive(Debug, Clone, PartialEq)]
pub struct Boundary {
    pub value: Vec<f64>,
    pub derivative: Vec<f64>,
}

impl Boundary {
    pub fn new(value: Vec<f64>, derivative: Vec<f64>) -> Self {
        Self { value, derivative }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { value: vec![0.0; dim], derivative: vec![0.0; dim] }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuinticSpline {
    dim: usize,
    lengths: Vec<f64>,
    knots: Vec<f64>,
    /// Row-major `6M x dim`; row `6j + k` holds the `tau^k` coefficient of piece `j`.
    coeffs: Vec<f64>,
}

impl QuinticSpline {
    pub fn from_coefficients(dim: usize, lengths: Vec<f64>, coeffs: Vec<f64>) -> Result<Self, PolyError> {
        if coeffs.len() != COEFFS * lengths.len() * dim {
            return Err(PolyError::Dimension(format!(
                "{} coefficients for {} pieces of dimension {dim}",
                coeffs.len(),
                lengths.len()
            )));
        }
        let mut knots = Vec::with_capacity(lengths.len() + 1);
        knots.push(0.0);
        let mut acc = 0.0;
        for l in &lengths {
            acc += l;
            knots.push(acc);
        }
        Ok(Self { dim, lengths, knots, coeffs })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn pieces(&self) -> usize {
        self.lengths.len()
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn total_length(&self) -> f64 {
        *self.knots.last().unwrap_or(&0.0)
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    #[inline]
    pub fn coeff(&self, piece: usize, k: usize, d: usize) -> f64 {
        self.coeffs[(COEFFS * piece + k) * self.dim + d]
    }

    /// Piece containing `s` (left-closed; the final knot belongs to the
    /// last piece) and the local coordinate within it.
    pub fn locate(&self, s: f64) -> Result<(usize, f64), PolyError> {
        let end = self.total_length();
        if !(s >= 0.0 && s <= end) {
            return Err(PolyError::OutOfDomain { query: s, end });
        }
        let m = self.pieces();
        let j = self.knots[1..m].partition_point(|k| *k <= s);
        Ok((j, s - self.knots[j]))
    }

    /// Derivative `order` of dimension `d` of piece `j` at local `tau`; `tau`
    /// may leave `[0, length_j]` (polynomial extrapolation).
    #[inline]
    pub fn piece_derivative(&self, j: usize, tau: f64, order: usize, d: usize) -> f64 {
        let b = basis(tau, order);
        dot6(&b, (0..COEFFS).map(|k| self.coeff(j, k, d)))
    }

    /// Values and derivatives `0..=max_order` per dimension at `s`; higher
    /// orders are left at zero.
    pub fn eval(&self, s: f64, max_order: usize) -> Result<Vec<[f64; MAX_ORDER + 1]>, PolyError> {
        let (j, tau) = self.locate(s)?;
        let mut out = vec![[0.0; MAX_ORDER + 1]; self.dim];
        for order in 0..=max_order.min(MAX_ORDER) {
            let b = basis(tau, order);
            for (d, o) in out.iter_mut().enumerate() {
                o[order] = dot6(&b, (0..COEFFS).map(|k| self.coeff(j, k, d)));
            }
        }
        Ok(out)
    }

    /// Weighted integral of squared third derivatives over the whole domain,
    /// with its gradient with respect to the coefficients (same layout as
    /// [`Self::coefficients`]) and to the piece lengths.
    pub fn jerk_energy(&self, weights: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
        let mut grad_c = vec![0.0; self.coeffs.len()];
        let mut grad_t = vec![0.0; self.pieces()];
        let mut cost = 0.0;
        for (j, &t) in self.lengths.iter().enumerate() {
            let (t2, t3) = (t * t, t * t * t);
            let (t4, t5) = (t3 * t, t3 * t2);
            for (d, &w) in weights.iter().enumerate().take(self.dim) {
                let c3 = self.coeff(j, 3, d);
                let c4 = self.coeff(j, 4, d);
                let c5 = self.coeff(j, 5, d);
                cost += w
                    * (36.0 * c3 * c3 * t
                        + 144.0 * c3 * c4 * t2
                        + 192.0 * c4 * c4 * t3
                        + 240.0 * c3 * c5 * t3
                        + 720.0 * c4 * c5 * t4
                        + 720.0 * c5 * c5 * t5);
                let row = |k: usize| (COEFFS * j + k) * self.dim + d;
                grad_c[row(3)] += w * (72.0 * c3 * t + 144.0 * c4 * t2 + 240.0 * c5 * t3);
                grad_c[row(4)] += w * (144.0 * c3 * t2 + 384.0 * c4 * t3 + 720.0 * c5 * t4);
                grad_c[row(5)] += w * (240.0 * c3 * t3 + 720.0 * c4 * t4 + 1440.0 * c5 * t5);
                grad_t[j] += w
                    * (36.0 * c3 * c3
                        + 288.0 * c3 * c4 * t
                        + 576.0 * c4 * c4 * t2
                        + 720.0 * c3 * c5 * t2
                        + 2880.0 * c4 * c5 * t3
                        + 3600.0 * c5 * c5 * t4);
            }
        }
        (cost, grad_c, grad_t)
    }
}

/// Gradients with respect to the reduced spline parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct MincoGradient {
    /// Row-major `(M - 1) x dim`.
    pub waypoints: Vec<f64>,
    /// Total derivative per piece length.
    pub lengths: Vec<f64>,
    pub start: Boundary,
    pub end: Boundary,
}

/// Factorized spline system for fixed piece lengths.
#[derive(Debug, Clone)]
pub struct Minco {
    dim: usize,
    lengths: Vec<f64>,
    factor: Factorization,
}

impl Minco {
    /// Assembles and factorizes the `6M x 6M` system for the given lengths.
    pub fn new(dim: usize, lengths: &[f64]) -> Result<Self, PolyError> {
        let m = lengths.len();
        if m == 0 || lengths.iter().any(|l| !(*l > 0.0) || !l.is_finite()) {
            return Err(PolyError::SingularSystem(lengths.to_vec()));
        }
        let factor = Factorization::new(Self::assemble(lengths))
            .ok_or_else(|| PolyError::SingularSystem(lengths.to_vec()))?;
        Ok(Self { dim, lengths: lengths.to_vec(), factor })
    }

    /// Row layout: start value/derivative/second derivative, then for each
    /// interior knot third and fourth derivative continuity, the waypoint,
    /// value/first/second derivative continuity; finally the end rows. This
    /// keeps every diagonal entry nonzero with six bands either side.
    pub fn assemble(lengths: &[f64]) -> BandedMatrix {
        let m = lengths.len();
        let n = COEFFS * m;
        let mut a = BandedMatrix::zeros(n, 6, 6);
        let put = |a: &mut BandedMatrix, row: usize, piece: usize, vals: [f64; COEFFS], sign: f64| {
            for (k, v) in vals.iter().enumerate() {
                if *v != 0.0 {
                    a.set(row, COEFFS * piece + k, sign * v);
                }
            }
        };
        for order in 0..3 {
            put(&mut a, order, 0, basis(0.0, order), 1.0);
        }
        for (i, &t) in lengths.iter().enumerate().take(m - 1) {
            let r = COEFFS * i + 3;
            for (off, order) in [(0, 3), (1, 4)] {
                put(&mut a, r + off, i, basis(t, order), 1.0);
                put(&mut a, r + off, i + 1, basis(0.0, order), -1.0);
            }
            put(&mut a, r + 2, i, basis(t, 0), 1.0);
            for (off, order) in [(3, 0), (4, 1), (5, 2)] {
                put(&mut a, r + off, i, basis(t, order), 1.0);
                put(&mut a, r + off, i + 1, basis(0.0, order), -1.0);
            }
        }
        let t = lengths[m - 1];
        for order in 0..3 {
            put(&mut a, n - 3 + order, m - 1, basis(t, order), 1.0);
        }
        a
    }

    /// Derivative order that row `r` evaluates on the piece ending at a
    /// knot, with that piece's index (rows not touching a piece end give `None`).
    fn row_end_order(&self, r: usize) -> Option<(usize, usize)> {
        let m = self.lengths.len();
        let n = COEFFS * m;
        if r < 3 {
            return None;
        }
        if r >= n - 3 {
            return Some((m - 1, r - (n - 3)));
        }
        let piece = (r - 3) / COEFFS;
        let order = [3, 4, 0, 0, 1, 2][(r - 3) % COEFFS];
        Some((piece, order))
    }

    fn rhs(&self, start: &Boundary, waypoints: &[f64], end: &Boundary) -> Result<Vec<f64>, PolyError> {
        let (m, dim) = (self.lengths.len(), self.dim);
        if waypoints.len() != (m - 1) * dim
            || start.value.len() != dim
            || start.derivative.len() != dim
            || end.value.len() != dim
            || end.derivative.len() != dim
        {
            return Err(PolyError::Dimension(format!(
                "{m} pieces of dimension {dim} need {} waypoint values, got {}",
                (m - 1) * dim,
                waypoints.len()
            )));
        }
        let n = COEFFS * m;
        let mut b = vec![0.0; n * dim];
        for d in 0..dim {
            b[d] = start.value[d];
            b[dim + d] = start.derivative[d];
            for i in 0..m - 1 {
                b[(COEFFS * i + 5) * dim + d] = waypoints[i * dim + d];
            }
            b[(n - 3) * dim + d] = end.value[d];
            b[(n - 2) * dim + d] = end.derivative[d];
        }
        Ok(b)
    }

    pub fn solve(&self, start: &Boundary, waypoints: &[f64], end: &Boundary) -> Result<QuinticSpline, PolyError> {
        let mut b = self.rhs(start, waypoints, end)?;
        self.factor.solve(&mut b, self.dim);
        QuinticSpline::from_coefficients(self.dim, self.lengths.clone(), b)
    }

    pub fn is_banded(&self) -> bool {
        self.factor.is_banded()
    }

    /// Pulls `grad_coeffs` (partial derivatives with respect to the
    /// coefficients of `spline`) and `grad_lengths` (partials with respect to
    /// piece lengths at fixed coefficients) back to waypoints, lengths and
    /// boundary values through the implicit map `A(T) c = b`.
    pub fn propagate_grad(
        &self,
        spline: &QuinticSpline,
        grad_coeffs: &[f64],
        grad_lengths: &[f64],
    ) -> Result<MincoGradient, PolyError> {
        let (m, dim) = (self.lengths.len(), self.dim);
        if grad_coeffs.len() != COEFFS * m * dim || grad_lengths.len() != m {
            return Err(PolyError::Dimension("gradient size does not match the spline".into()));
        }
        let mut adj = grad_coeffs.to_vec();
        self.factor.solve_transposed(&mut adj, dim);

        let n = COEFFS * m;
        let mut lengths = grad_lengths.to_vec();
        // dA/dT_j only touches rows evaluating piece j at its end, where the
        // entry is the basis derivative; differentiating adds one order.
        for r in 3..n {
            if let Some((piece, order)) = self.row_end_order(r) {
                let tau = self.lengths[piece];
                let mut acc = 0.0;
                for d in 0..dim {
                    acc += adj[r * dim + d] * spline.piece_derivative(piece, tau, order + 1, d);
                }
                lengths[piece] -= acc;
            }
        }
        let mut waypoints = vec![0.0; (m - 1) * dim];
        for i in 0..m - 1 {
            for d in 0..dim {
                waypoints[i * dim + d] = adj[(COEFFS * i + 5) * dim + d];
            }
        }
        let pick = |r: usize| -> Vec<f64> { (0..dim).map(|d| adj[r * dim + d]).collect() };
        Ok(MincoGradient {
            waypoints,
            lengths,
            start: Boundary::new(pick(0), pick(1)),
            end: Boundary::new(pick(n - 3), pick(n - 2)),
        })
    }
}

/// One-shot solve: the unique spline through `waypoints` (row-major
/// `(M - 1) x dim`) with the given piece lengths and boundary states.
pub fn minco_solve(
    lengths: &[f64],
    start: &Boundary,
    waypoints: &[f64],
    end: &Boundary,
) -> Result<QuinticSpline, PolyError> {
    Minco::new(start.value.len(), lengths)?.solve(start, waypoints, end)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_instance(rng: &mut ChaCha8Rng, m: usize, dim: usize) -> (Vec<f64>, Boundary, Vec<f64>, Boundary) {
        let lengths: Vec<f64> = (0..m).map(|_| rng.gen_range(0.3..2.0)).collect();
        let mut v = |n: usize| (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect::<Vec<f64>>();
        let start = Boundary::new(v(dim), v(dim));
        let end = Boundary::new(v(dim), v(dim));
        let wps = v((m - 1) * dim);
        (lengths, start, wps, end)
    }

    #[test]
    fn single_linear_piece() {
        let s = 2.5;
        let sp = minco_solve(&[s], &Boundary::new(vec![0.0], vec![1.0]), &[], &Boundary::new(vec![s], vec![1.0]))
            .unwrap();
        let want = [0.0, 1.0, 0.0, 0.0, 0.0, 0.0];
        for (k, w) in want.iter().enumerate() {
            assert!((sp.coeff(0, k, 0) - w).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetric_line_gives_linear_pieces() {
        let sp = minco_solve(
            &[1.0, 1.0],
            &Boundary::new(vec![0.0, 0.0], vec![1.0, 0.5]),
            &[1.0, 0.5],
            &Boundary::new(vec![2.0, 1.0], vec![1.0, 0.5]),
        )
        .unwrap();
        for j in 0..2 {
            for k in 2..COEFFS {
                for d in 0..2 {
                    assert!(sp.coeff(j, k, d).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn eval_rejects_out_of_domain() {
        let sp = minco_solve(&[1.0], &Boundary::zeros(1), &[], &Boundary::zeros(1)).unwrap();
        assert!(matches!(sp.eval(1.5, 0), Err(PolyError::OutOfDomain { .. })));
        assert!(matches!(sp.eval(-1e-9, 0), Err(PolyError::OutOfDomain { .. })));
        assert!(sp.eval(1.0, 0).is_ok());
    }

    #[test]
    fn nonpositive_length_is_singular() {
        assert!(matches!(Minco::new(1, &[1.0, 0.0]), Err(PolyError::SingularSystem(_))));
        assert!(matches!(Minco::new(1, &[-1.0]), Err(PolyError::SingularSystem(_))));
    }

    #[test]
    fn start_and_knot_queries() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (l, st, w, en) = random_instance(&mut rng, 4, 2);
        let sp = minco_solve(&l, &st, &w, &en).unwrap();
        let at0 = sp.eval(0.0, 2).unwrap();
        for d in 0..2 {
            assert!((at0[d][0] - st.value[d]).abs() < 1e-12);
            assert!((at0[d][1] - st.derivative[d]).abs() < 1e-12);
            assert!(at0[d][2].abs() < 1e-12);
        }
        let (j, tau) = sp.locate(sp.knots()[2]).unwrap();
        assert_eq!((j, tau), (2, 0.0));
        let (j, _) = sp.locate(sp.total_length()).unwrap();
        assert_eq!(j, 3);
    }

    #[test]
    fn resolve_is_bit_identical() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (l, st, w, en) = random_instance(&mut rng, 6, 3);
        let a = minco_solve(&l, &st, &w, &en).unwrap();
        let b = minco_solve(&l, &st, &w, &en).unwrap();
        assert_eq!(a.coefficients(), b.coefficients());
    }

    #[test]
    fn jerk_energy_of_cubic_monomial() {
        let mut c = vec![0.0; 6];
        c[3] = 1.0;
        let sp = QuinticSpline::from_coefficients(1, vec![1.0], c).unwrap();
        let (e, _, _) = sp.jerk_energy(&[1.0]);
        assert!((e - 36.0).abs() < 1e-12);
        let (e3, _, _) = sp.jerk_energy(&[3.0]);
        assert!((e3 - 108.0).abs() < 1e-12);
    }

    #[test]
    fn jerk_energy_matches_quadrature_and_fd() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (l, st, w, en) = random_instance(&mut rng, 3, 2);
        let sp = minco_solve(&l, &st, &w, &en).unwrap();
        let weights = [1.5, 0.5];
        let (e, gc, gt) = sp.jerk_energy(&weights);
        // composite Simpson on each piece
        let mut quad = 0.0;
        for j in 0..3 {
            let n = 200;
            let h = l[j] / n as f64;
            for k in 0..=n {
                let tau = k as f64 * h;
                let wk = if k == 0 || k == n { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
                for d in 0..2 {
                    let j3 = sp.piece_derivative(j, tau, 3, d);
                    quad += wk * h / 3.0 * weights[d] * j3 * j3;
                }
            }
        }
        assert!((e - quad).abs() < 1e-8 * e.max(1.0));
        let h = 1e-6;
        for i in [3 * 2, 4 * 2 + 1, 17 * 2] {
            let mut c = sp.coefficients().to_vec();
            c[i] += h;
            let ep = QuinticSpline::from_coefficients(2, l.clone(), c.clone()).unwrap().jerk_energy(&weights).0;
            c[i] -= 2.0 * h;
            let em = QuinticSpline::from_coefficients(2, l.clone(), c).unwrap().jerk_energy(&weights).0;
            assert!(((ep - em) / (2.0 * h) - gc[i]).abs() < 1e-5 * gc[i].abs().max(1.0));
        }
        for j in 0..3 {
            let mut lp = l.clone();
            lp[j] += h;
            let ep = QuinticSpline::from_coefficients(2, lp.clone(), sp.coefficients().to_vec()).unwrap().jerk_energy(&weights).0;
            lp[j] -= 2.0 * h;
            let em = QuinticSpline::from_coefficients(2, lp, sp.coefficients().to_vec()).unwrap().jerk_energy(&weights).0;
            assert!(((ep - em) / (2.0 * h) - gt[j]).abs() < 1e-5 * gt[j].abs().max(1.0));
        }
    }

    #[test]
    fn linear_pieces_have_no_jerk() {
        let sp = minco_solve(&[1.0, 2.0], &Boundary::new(vec![0.0], vec![1.0]), &[1.0], &Boundary::new(vec![3.0], vec![1.0]))
            .unwrap();
        assert!(sp.jerk_energy(&[1.0]).0.abs() < 1e-20);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let (l, st, w, en) = random_instance(&mut rng, 5, 1);
        let sp = minco_solve(&l, &st, &w, &en).unwrap();
        let h = 1e-6;
        for _ in 0..50 {
            let j = rng.gen_range(0..5);
            let tau = rng.gen_range(0.1 * l[j]..0.9 * l[j]);
            for order in 1..=3 {
                let fd = (sp.piece_derivative(j, tau + h, order - 1, 0) - sp.piece_derivative(j, tau - h, order - 1, 0))
                    / (2.0 * h);
                let an = sp.piece_derivative(j, tau, order, 0);
                assert!((fd - an).abs() < 1e-6 * an.abs().max(1.0), "order {order}: {fd} vs {an}");
            }
        }
    }

    #[test]
    fn constant_objective_has_zero_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let (l, st, w, en) = random_instance(&mut rng, 4, 2);
        let minco = Minco::new(2, &l).unwrap();
        let sp = minco.solve(&st, &w, &en).unwrap();
        let g = minco.propagate_grad(&sp, &vec![0.0; 48], &[0.0; 4]).unwrap();
        assert!(g.waypoints.iter().chain(&g.lengths).all(|v| *v == 0.0));
    }

    #[test]
    fn waypoint_only_objective_passes_through() {
        // f = value of the spline at interior knot 2 = waypoint 2
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let (l, st, w, en) = random_instance(&mut rng, 4, 1);
        let minco = Minco::new(1, &l).unwrap();
        let sp = minco.solve(&st, &w, &en).unwrap();
        let mut gc = vec![0.0; 24];
        let b = basis(0.0, 0);
        for k in 0..COEFFS {
            gc[COEFFS * 2 + k] = b[k];
        }
        let g = minco.propagate_grad(&sp, &gc, &[0.0; 4]).unwrap();
        assert!((g.waypoints[1] - 1.0).abs() < 1e-10);
        assert!(g.waypoints[0].abs() < 1e-10 && g.waypoints[2].abs() < 1e-10);
        assert!(g.lengths.iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn banded_matches_dense_and_is_c4() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..10 {
            let m = rng.gen_range(2..9);
            let (l, st, w, en) = random_instance(&mut rng, m, 2);
            let sp = minco_solve(&l, &st, &w, &en).unwrap();
            let dense = Minco::assemble(&l).to_dense();
            let lu = dense.clone().lu();
            for d in 0..2 {
                let minco = Minco::new(2, &l).unwrap();
                let b = minco.rhs(&st, &w, &en).unwrap();
                let bv = nalgebra::DVector::from_fn(6 * m, |i, _| b[i * 2 + d]);
                let x = lu.solve(&bv).unwrap();
                for i in 0..6 * m {
                    assert!((x[i] - sp.coefficients()[i * 2 + d]).abs() < 1e-9);
                }
            }
            for j in 0..m - 1 {
                for order in 0..=4 {
                    for d in 0..2 {
                        let left = sp.piece_derivative(j, l[j], order, d);
                        let right = sp.piece_derivative(j + 1, 0.0, order, d);
                        assert!((left - right).abs() < 1e-8, "order {order} jump {}", left - right);
                    }
                }
            }
            let end = sp.eval(sp.total_length(), 2).unwrap();
            for d in 0..2 {
                assert!((end[d][0] - en.value[d]).abs() < 1e-10);
                assert!((end[d][1] - en.derivative[d]).abs() < 1e-10);
                assert!(end[d][2].abs() < 1e-10);
            }
        }
    }

    /// Arbitrary smooth objective of the coefficients and lengths.
    fn objective(sp: &QuinticSpline, weights: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
        let (e, mut gc, mut gt) = sp.jerk_energy(weights);
        let mut f = e;
        // plus sum of squared values at the middle of each piece (tau = T/2)
        for j in 0..sp.pieces() {
            let t = sp.lengths()[j];
            let tau = 0.5 * t;
            for d in 0..sp.dim() {
                let v = sp.piece_derivative(j, tau, 0, d);
                f += v * v;
                let b = basis(tau, 0);
                for k in 0..COEFFS {
                    gc[(COEFFS * j + k) * sp.dim() + d] += 2.0 * v * b[k];
                }
                gt[j] += 2.0 * v * sp.piece_derivative(j, tau, 1, d) * 0.5;
            }
        }
        (f, gc, gt)
    }

    #[test]
    fn propagated_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let weights = [1.0, 0.7];
        for _ in 0..20 {
            let m = rng.gen_range(2..9);
            let (l, st, w, en) = random_instance(&mut rng, m, 2);
            let minco = Minco::new(2, &l).unwrap();
            let sp = minco.solve(&st, &w, &en).unwrap();
            let (_, gc, gt) = objective(&sp, &weights);
            let g = minco.propagate_grad(&sp, &gc, &gt).unwrap();
            let eval = |l: &[f64], st: &Boundary, w: &[f64], en: &Boundary| {
                objective(&minco_solve(l, st, w, en).unwrap(), &weights).0
            };
            let h = 1e-6;
            let check = |an: f64, fp: f64, fm: f64| {
                let fd = (fp - fm) / (2.0 * h);
                let scale = an.abs().max(fd.abs()).max(1.0);
                assert!((an - fd).abs() / scale < 1e-5, "analytic {an} vs fd {fd}");
            };
            for i in 0..w.len() {
                let mut wp = w.clone();
                wp[i] += h;
                let fp = eval(&l, &st, &wp, &en);
                wp[i] -= 2.0 * h;
                check(g.waypoints[i], fp, eval(&l, &st, &wp, &en));
            }
            for j in 0..m {
                let mut lp = l.clone();
                lp[j] += h;
                let fp = eval(&lp, &st, &w, &en);
                lp[j] -= 2.0 * h;
                check(g.lengths[j], fp, eval(&lp, &st, &w, &en));
            }
            for d in 0..2 {
                let mut e2 = en.clone();
                e2.value[d] += h;
                let fp = eval(&l, &st, &w, &e2);
                e2.value[d] -= 2.0 * h;
                check(g.end.value[d], fp, eval(&l, &st, &w, &e2));
                let mut s2 = st.clone();
                s2.derivative[d] += h;
                let fp = eval(&l, &s2, &w, &en);
                s2.derivative[d] -= 2.0 * h;
                check(g.start.derivative[d], fp, eval(&l, &s2, &w, &en));
            }
        }
    }
}
