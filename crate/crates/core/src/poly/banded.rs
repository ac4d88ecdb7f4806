//! Square banded matrices with an in-place LU factorization that does not
//! pivot, plus a dense partial-pivoting fallback for ill-conditioned bands.

use nalgebra::{DMatrix, DVector};

/// Pivots smaller than this abandon the banded factorization.
pub const PIVOT_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct BandedMatrix {
    n: usize,
    lower: usize,
    upper: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, lower: usize, upper: usize) -> Self {
        Self { n, lower, upper, data: vec![0.0; n * (lower + upper + 1)] }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.lower >= i && j <= i + self.upper, "({i}, {j}) outside band");
        i * (self.lower + self.upper + 1) + (j + self.lower - i)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.lower < i || j > i + self.upper {
            0.0
        } else {
            self.data[self.slot(i, j)]
        }
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let s = self.slot(i, j);
        self.data[s] = v;
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    /// Doolittle LU without pivoting, stored in place (unit lower factor
    /// implied). Returns `false` when a pivot falls below [`PIVOT_FLOOR`].
    fn factorize(&mut self) -> bool {
        let (n, lo, up) = (self.n, self.lower, self.upper);
        for k in 0..n {
            let pivot = self.data[self.slot(k, k)];
            if !(pivot.abs() >= PIVOT_FLOOR) {
                return false;
            }
            for i in k + 1..(k + lo + 1).min(n) {
                let sik = self.slot(i, k);
                let factor = self.data[sik] / pivot;
                self.data[sik] = factor;
                if factor == 0.0 {
                    continue;
                }
                for j in k + 1..(k + up + 1).min(n) {
                    let skj = self.slot(k, j);
                    let sij = self.slot(i, j);
                    self.data[sij] -= factor * self.data[skj];
                }
            }
        }
        true
    }

    /// Solves `A X = B` in place for a row-major `B` with `cols` columns.
    fn lu_solve(&self, b: &mut [f64], cols: usize) {
        let (n, lo, up) = (self.n, self.lower, self.upper);
        for i in 0..n {
            for k in i.saturating_sub(lo)..i {
                let l = self.data[self.slot(i, k)];
                if l != 0.0 {
                    for c in 0..cols {
                        b[i * cols + c] -= l * b[k * cols + c];
                    }
                }
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..(i + up + 1).min(n) {
                let u = self.data[self.slot(i, j)];
                if u != 0.0 {
                    for c in 0..cols {
                        b[i * cols + c] -= u * b[j * cols + c];
                    }
                }
            }
            let d = self.data[self.slot(i, i)];
            for c in 0..cols {
                b[i * cols + c] /= d;
            }
        }
    }

    /// Solves `A^T X = B` in place using the stored factors.
    fn lu_solve_transposed(&self, b: &mut [f64], cols: usize) {
        let (n, lo, up) = (self.n, self.lower, self.upper);
        // U^T z = b
        for i in 0..n {
            for k in i.saturating_sub(up)..i {
                let u = self.data[self.slot(k, i)];
                if u != 0.0 {
                    for c in 0..cols {
                        b[i * cols + c] -= u * b[k * cols + c];
                    }
                }
            }
            let d = self.data[self.slot(i, i)];
            for c in 0..cols {
                b[i * cols + c] /= d;
            }
        }
        // L^T x = z
        for i in (0..n).rev() {
            for j in i + 1..(i + lo + 1).min(n) {
                let l = self.data[self.slot(j, i)];
                if l != 0.0 {
                    for c in 0..cols {
                        b[i * cols + c] -= l * b[j * cols + c];
                    }
                }
            }
        }
    }
}

type DenseLu = nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>;

/// Factorized system, banded when the band pivots are healthy.
#[derive(Debug, Clone)]
pub enum Factorization {
    Banded(BandedMatrix),
    /// Factors of `A` and of `A^T`.
    Dense(Box<(DenseLu, DenseLu)>),
}

impl Factorization {
    /// Returns `None` if the matrix is singular.
    pub fn new(matrix: BandedMatrix) -> Option<Self> {
        let mut lu = matrix.clone();
        if lu.factorize() {
            return Some(Self::Banded(lu));
        }
        let dense = matrix.to_dense();
        let lu = dense.clone().lu();
        lu.is_invertible().then(|| Self::Dense(Box::new((lu, dense.transpose().lu()))))
    }

    pub fn is_banded(&self) -> bool {
        matches!(self, Self::Banded(_))
    }

    pub fn solve(&self, b: &mut [f64], cols: usize) {
        match self {
            Self::Banded(m) => m.lu_solve(b, cols),
            Self::Dense(f) => dense_apply(b, cols, |v| f.0.solve(v)),
        }
    }

    pub fn solve_transposed(&self, b: &mut [f64], cols: usize) {
        match self {
            Self::Banded(m) => m.lu_solve_transposed(b, cols),
            Self::Dense(f) => dense_apply(b, cols, |v| f.1.solve(v)),
        }
    }
}

fn dense_apply(b: &mut [f64], cols: usize, f: impl Fn(&DVector<f64>) -> Option<DVector<f64>>) {
    let n = b.len() / cols.max(1);
    for c in 0..cols {
        let v = DVector::from_fn(n, |i, _| b[i * cols + c]);
        let x = f(&v).expect("factorization is invertible");
        for i in 0..n {
            b[i * cols + c] = x[i];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_banded(rng: &mut ChaCha8Rng, n: usize, lo: usize, up: usize) -> BandedMatrix {
        let mut m = BandedMatrix::zeros(n, lo, up);
        for i in 0..n {
            for j in i.saturating_sub(lo)..(i + up + 1).min(n) {
                m.set(i, j, rng.gen_range(-1.0..1.0));
            }
            // diagonally dominant
            m.set(i, i, 4.0 + (lo + up) as f64);
        }
        m
    }

    #[test]
    fn solve_and_transposed_solve_match_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = random_banded(&mut rng, 30, 3, 5);
        let dense = m.to_dense();
        let f = Factorization::new(m).unwrap();
        assert!(f.is_banded());
        let b: Vec<f64> = (0..60).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut x = b.clone();
        f.solve(&mut x, 2);
        let mut xt = b.clone();
        f.solve_transposed(&mut xt, 2);
        for c in 0..2 {
            let xv = DVector::from_fn(30, |i, _| x[i * 2 + c]);
            let xtv = DVector::from_fn(30, |i, _| xt[i * 2 + c]);
            let bv = DVector::from_fn(30, |i, _| b[i * 2 + c]);
            assert!((&dense * xv - &bv).amax() < 1e-12);
            assert!((dense.transpose() * xtv - bv).amax() < 1e-12);
        }
    }

    #[test]
    fn zero_pivot_falls_back_to_dense() {
        // [[0, 1], [1, 0]] needs a row swap
        let mut m = BandedMatrix::zeros(2, 1, 1);
        m.set(0, 1, 1.0);
        m.set(1, 0, 1.0);
        let f = Factorization::new(m).unwrap();
        assert!(!f.is_banded());
        let mut b = vec![2.0, 3.0];
        f.solve(&mut b, 1);
        assert_eq!(b, vec![3.0, 2.0]);
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let m = BandedMatrix::zeros(3, 1, 1);
        assert!(Factorization::new(m).is_none());
    }
}
