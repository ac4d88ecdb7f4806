use serde::{Deserialize, Serialize};

use super::{PolyError, QuinticSpline};
use crate::model::{flat_eval, FlatSample, RobotParams, RobotState, TANGENT_TOLERANCE};

/// Tractor path over the slackened arc length, the slackened arc length over
/// time, and trailer yaws over time.
///
/// `xy` and `s_of_t` have the same number of pieces; time piece `j` of
/// `s_of_t` sweeps exactly piece `j` of `xy`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatTrajectory {
    pub xy: QuinticSpline,
    pub s_of_t: QuinticSpline,
    pub thetas: QuinticSpline,
}

/// Everything known about the robot at one instant of a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Kinematics {
    pub state: RobotState,
    pub flat: FlatSample,
    /// `s, s_dot, s_ddot` of the slackened arc length.
    pub arc: [f64; 3],
    /// `x'^2 + y'^2` with respect to the slackened arc length.
    pub tangent_norm_sq: f64,
    pub trailer_rates: Vec<f64>,
}

/// Weighted jerk cost of a trajectory with partial derivatives per spline:
/// `(coefficients, piece lengths)`.
#[derive(Debug, Clone)]
pub struct JerkEnergy {
    pub cost: f64,
    pub xy: (Vec<f64>, Vec<f64>),
    pub s_of_t: (Vec<f64>, Vec<f64>),
    pub thetas: (Vec<f64>, Vec<f64>),
}

/// Serializable snapshot of the spline coefficients.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SplineRecord {
    pub dim: usize,
    pub lengths: Vec<f64>,
    pub coeffs: Vec<f64>,
}

impl From<&QuinticSpline> for SplineRecord {
    fn from(s: &QuinticSpline) -> Self {
        Self { dim: s.dim(), lengths: s.lengths().to_vec(), coeffs: s.coefficients().to_vec() }
    }
}

impl TryFrom<SplineRecord> for QuinticSpline {
    type Error = PolyError;

    fn try_from(r: SplineRecord) -> Result<Self, PolyError> {
        QuinticSpline::from_coefficients(r.dim, r.lengths, r.coeffs)
    }
}

impl FlatTrajectory {
    pub fn duration(&self) -> f64 {
        self.s_of_t.total_length()
    }

    pub fn n_trailers(&self) -> usize {
        self.thetas.dim()
    }

    /// Total slackened arc length.
    pub fn arc_length(&self) -> f64 {
        self.xy.total_length()
    }

    /// Derivatives of `x` and `y` (orders 0..=3) with respect to the slackened
    /// arc length, and of `s` (orders 0..=3) with respect to time.
    ///
    /// The path piece is chosen by the time piece, so the local arc
    /// coordinate may overshoot the piece by rounding without switching
    /// pieces.
    pub fn path_at(&self, t: f64) -> Result<([f64; 4], [f64; 4], [f64; 4]), PolyError> {
        let (j, tau) = self.s_of_t.locate(t)?;
        let mut s = [0.0; 4];
        for (k, v) in s.iter_mut().enumerate() {
            *v = self.s_of_t.piece_derivative(j, tau, k, 0);
        }
        let sigma = s[0] - self.xy.knots()[j];
        let mut x = [0.0; 4];
        let mut y = [0.0; 4];
        for k in 0..4 {
            x[k] = self.xy.piece_derivative(j, sigma, k, 0);
            y[k] = self.xy.piece_derivative(j, sigma, k, 1);
        }
        Ok((x, y, s))
    }

    /// Arc-length weighted jerk energy plus time-domain jerk energy.
    /// `w_st[0]` weights the slackened arc length; `w_st[1..]` the trailers.
    pub fn jerk_energy(&self, w_p: [f64; 2], w_st: &[f64]) -> JerkEnergy {
        let (c1, gx, tx) = self.xy.jerk_energy(&w_p);
        let (c2, gs, ts) = self.s_of_t.jerk_energy(&w_st[..1]);
        let (c3, gt, tt) = self.thetas.jerk_energy(&w_st[1..]);
        JerkEnergy { cost: c1 + c2 + c3, xy: (gx, tx), s_of_t: (gs, ts), thetas: (gt, tt) }
    }

    /// Samples at `t = 0, dt, 2 dt, ...` plus the final instant.
    pub fn sample_times(&self, dt: f64) -> Vec<f64> {
        let tf = self.duration();
        let n = (tf / dt).floor() as usize;
        let mut ts: Vec<f64> = (0..=n).map(|k| k as f64 * dt).filter(|t| *t < tf).collect();
        ts.push(tf);
        ts
    }
}

/// Full robot state at time `t`.
///
/// The tangent-norm guard is relaxed by [`TANGENT_TOLERANCE`] so that
/// solutions within solver tolerance of the slack floor still evaluate.
pub fn composed_state(traj: &FlatTrajectory, t: f64, params: &RobotParams) -> Result<Kinematics, PolyError> {
    let (x, y, s) = traj.path_at(t)?;
    let floor = (params.slack_floor - TANGENT_TOLERANCE).max(f64::MIN_POSITIVE);
    let flat = flat_eval([x[1], x[2]], [y[1], y[2]], [s[1], s[2]], floor, params.wheelbase)?;
    let n = traj.n_trailers();
    let mut thetas = vec![0.0; n];
    let mut theta_dots = vec![0.0; n];
    if n > 0 {
        let (j, tau) = traj.thetas.locate(t.min(traj.thetas.total_length()))?;
        for i in 0..n {
            thetas[i] = traj.thetas.piece_derivative(j, tau, 0, i);
            theta_dots[i] = traj.thetas.piece_derivative(j, tau, 1, i);
        }
    }
    Ok(Kinematics {
        state: RobotState { p0: [x[0], y[0]], v0: flat.v0, theta0: flat.theta0, thetas },
        flat,
        arc: [s[0], s[1], s[2]],
        tangent_norm_sq: x[1] * x[1] + y[1] * y[1],
        trailer_rates: theta_dots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{minco_solve, Boundary};

    fn straight(tf: f64, len: f64, n: usize) -> FlatTrajectory {
        let m = 2;
        let seg = len / m as f64;
        let xy = minco_solve(
            &[seg; 2],
            &Boundary::new(vec![0.0, 0.0], vec![1.0, 0.0]),
            &[seg, 0.0],
            &Boundary::new(vec![len, 0.0], vec![1.0, 0.0]),
        )
        .unwrap();
        let s_of_t = minco_solve(
            &[tf / m as f64; 2],
            &Boundary::new(vec![0.0], vec![0.0]),
            &[seg],
            &Boundary::new(vec![len], vec![0.0]),
        )
        .unwrap();
        let omega = 2 * m;
        let thetas = minco_solve(
            &vec![tf / omega as f64; omega],
            &Boundary::zeros(n),
            &vec![0.0; n * (omega - 1)],
            &Boundary::zeros(n),
        )
        .unwrap();
        FlatTrajectory { xy, s_of_t, thetas }
    }

    #[test]
    fn straight_line_has_zero_curvature() {
        let params = RobotParams::benchmark(2);
        let traj = straight(6.0, 4.0, 2);
        for t in traj.sample_times(0.05) {
            let k = composed_state(&traj, t, &params).unwrap();
            assert!(k.flat.kappa.abs() < 1e-12);
            assert!(k.flat.theta0.abs() < 1e-12);
            assert!(k.state.v0 >= -1e-12);
        }
        let end = composed_state(&traj, 6.0, &params).unwrap();
        assert!(end.state.v0.abs() < 1e-12);
        assert!((end.state.p0[0] - 4.0).abs() < 1e-10);
        assert!(end.trailer_rates.iter().all(|r| r.abs() < 1e-12));
        let start = composed_state(&traj, 0.0, &params).unwrap();
        assert!(start.state.p0[0].abs() < 1e-12 && start.state.v0.abs() < 1e-12);
    }

    #[test]
    fn sample_times_cover_both_ends() {
        let traj = straight(1.0, 1.0, 0);
        let ts = traj.sample_times(0.3);
        assert_eq!(ts, vec![0.0, 0.3, 0.6, 0.8999999999999999, 1.0]);
    }

    #[test]
    fn spline_record_round_trip() {
        let traj = straight(2.0, 3.0, 1);
        let rec = SplineRecord::from(&traj.xy);
        let back = QuinticSpline::try_from(rec).unwrap();
        assert_eq!(back, traj.xy);
    }
}
