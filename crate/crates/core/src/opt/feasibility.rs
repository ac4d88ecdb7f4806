use serde::{Deserialize, Serialize};

use crate::env::{Sdf, TargetRegion};
use crate::model::{pose_chain, rotation, RobotParams};
use crate::poly::{composed_state, FlatTrajectory, PolyError};
use crate::search::wrap_pi;

/// Slack allowed on each quantity when re-sampling a solution densely.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct FeasibilityTolerances {
    pub samples_per_piece: usize,
    /// On `|theta_i' L_i - v_{i-1} sin(theta_{i-1} - theta_i)|` (m/s).
    pub residual: f64,
    pub limit: f64,
    pub clearance: f64,
    pub arc_rate: f64,
    pub tangent: f64,
    pub end_region: f64,
}

impl Default for FeasibilityTolerances {
    fn default() -> Self {
        Self {
            samples_per_piece: 10_000,
            residual: 0.05,
            limit: 1e-2,
            clearance: 0.01,
            arc_rate: 1e-6,
            tangent: 1e-3,
            end_region: 1e-3,
        }
    }
}

/// Extremes found over the dense samples.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub samples: usize,
    pub max_residual: f64,
    pub max_speed: f64,
    pub max_accel: f64,
    pub max_lat_accel: f64,
    pub max_curvature: f64,
    pub max_hitch: f64,
    /// Smallest `sdf(center) - radius` over all vehicles.
    pub min_clearance: f64,
    pub min_arc_rate: f64,
    pub min_tangent_norm_sq: f64,
    /// Largest signed distance of a terminal body corner outside the target.
    pub end_region: f64,
    /// Names of the checks that failed.
    pub failures: Vec<String>,
}

impl FeasibilityReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Re-samples `traj` uniformly in time within every time piece and checks
/// all limits, clearances and the terminal region.
pub fn check_feasibility(
    traj: &FlatTrajectory,
    params: &RobotParams,
    sdf: &Sdf,
    region: &TargetRegion,
    tol: &FeasibilityTolerances,
) -> Result<FeasibilityReport, PolyError> {
    let mut r = FeasibilityReport {
        min_clearance: f64::INFINITY,
        min_arc_rate: f64::INFINITY,
        min_tangent_norm_sq: f64::INFINITY,
        end_region: f64::NEG_INFINITY,
        ..Default::default()
    };
    let k = tol.samples_per_piece.max(1);
    let knots = traj.s_of_t.knots().to_vec();
    let lengths = traj.s_of_t.lengths().to_vec();
    let mut times: Vec<f64> = Vec::with_capacity(lengths.len() * k + 1);
    for (t0, len) in knots.iter().zip(&lengths) {
        times.extend((0..k).map(|p| t0 + len * p as f64 / k as f64));
    }
    times.push(traj.duration());

    let mut last = None;
    for &t in &times {
        let kin = composed_state(traj, t, params)?;
        let yaws = kin.state.yaws();
        let speeds = crate::model::chain_speeds(kin.state.v0, &yaws);
        for i in 0..params.n_trailers() {
            // the tractor yaw comes from atan2 and may sit on another branch
            let d = wrap_pi(yaws[i] - yaws[i + 1]);
            let res = kin.trailer_rates[i] * params.hitch_lengths[i] - speeds[i] * d.sin();
            r.max_residual = r.max_residual.max(res.abs());
            r.max_hitch = r.max_hitch.max(d.abs());
        }
        r.max_speed = r.max_speed.max(kin.state.v0.abs());
        r.max_accel = r.max_accel.max(kin.flat.a.abs());
        r.max_lat_accel = r.max_lat_accel.max(kin.flat.a_lat.abs());
        r.max_curvature = r.max_curvature.max(kin.flat.kappa.abs());
        r.min_arc_rate = r.min_arc_rate.min(kin.arc[1]);
        r.min_tangent_norm_sq = r.min_tangent_norm_sq.min(kin.tangent_norm_sq);
        let chain = pose_chain(params, kin.state.position(), &yaws);
        for (c, radius) in chain.centers.iter().zip(&params.wrap_radii) {
            r.min_clearance = r.min_clearance.min(sdf.query(*c).0 - radius);
        }
        r.samples += 1;
        last = Some((chain, yaws));
    }
    if let Some((chain, yaws)) = last {
        for (i, yaw) in yaws.iter().enumerate() {
            let rot = rotation(*yaw);
            for c in params.body_corners(i) {
                r.end_region = r.end_region.max(region.max_violation(rot * c + chain.positions[i]));
            }
        }
    }

    let lim = &params.limits;
    let checks = [
        ("residual", r.max_residual <= tol.residual),
        ("speed", r.max_speed <= lim.v_max + tol.limit),
        ("accel", r.max_accel <= lim.a_max + tol.limit),
        ("lat_accel", r.max_lat_accel <= lim.a_lat_max + tol.limit),
        ("curvature", r.max_curvature <= lim.kappa_max + tol.limit),
        ("jackknife", r.max_hitch <= lim.jackknife + tol.limit),
        ("clearance", r.min_clearance >= -tol.clearance),
        ("arc_rate", r.min_arc_rate >= -tol.arc_rate),
        ("tangent", r.min_tangent_norm_sq >= params.slack_floor - tol.tangent),
        ("end_region", r.end_region <= tol.end_region),
    ];
    r.failures = checks.iter().filter(|(_, ok)| !ok).map(|(name, _)| name.to_string()).collect();
    Ok(r)
}
