//! Robot geometry, kinematics of the tractor-trailer chain and the
//! flat-output maps of the slackened arc-length parameterization.
//!
//! The tractor is a bicycle-model Ackermann vehicle whose rear-axle center
//! `p0` is the hitch point of the first trailer. Trailer `i` is hitched at
//! the center of vehicle `i - 1` and its own center sits `L_i` behind it.

use std::f64::consts::FRAC_PI_2;
use std::path::Path;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Vec2 = Vector2<f64>;

/// Tolerance on `x'^2 + y'^2 >= slack_floor` accepted when evaluating a solved
/// trajectory (matches the feasibility check tolerance).
pub const TANGENT_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid robot parameters: {0}")]
    InvalidParams(String),
    #[error("degenerate tangent: x'^2 + y'^2 = {norm_sq} is below the floor {floor}")]
    DegenerateTangent { norm_sq: f64, floor: f64 },
    #[error("jackknife between vehicles {vehicle} and {} at t = {time}", vehicle + 1)]
    JackknifeDetected { vehicle: usize, time: f64 },
    #[error("state has {got} trailer angles, robot has {expected} trailers")]
    TrailerCount { expected: usize, got: usize },
    #[error("rollout step must be positive, got {0}")]
    InvalidStep(f64),
    #[error("failed to read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("failed to parse config: {0}")]
    Parse(#[from] toml::de::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodySize {
    pub length: f64,
    pub width: f64,
}

impl BodySize {
    pub fn new(length: f64, width: f64) -> Self {
        Self { length, width }
    }

    /// Radius of the smallest circle centered on the body covering it.
    pub fn covering_radius(&self) -> f64 {
        0.5 * self.length.hypot(self.width)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Limits {
    /// Longitudinal speed bound (m/s).
    pub v_max: f64,
    /// Longitudinal acceleration bound (m/s^2).
    pub a_max: f64,
    /// Lateral acceleration bound (m/s^2).
    pub a_lat_max: f64,
    /// Curvature bound (1/m).
    pub kappa_max: f64,
    /// Largest allowed yaw difference between hitched vehicles (rad).
    pub jackknife: f64,
    /// Steering angle bound (rad).
    pub steer_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotParams {
    /// Tractor wheelbase `L0` (m).
    pub wheelbase: f64,
    /// Link lengths `L1..LN` (m); the number of trailers is their count.
    pub hitch_lengths: Vec<f64>,
    /// Distance from the rear-axle center to the tractor body center (m).
    pub rear_offset: f64,
    /// Body footprint per vehicle, tractor first.
    pub body_sizes: Vec<BodySize>,
    /// Covering circle radius per vehicle, tractor first.
    pub wrap_radii: Vec<f64>,
    pub limits: Limits,
    /// Minimum distance between circle centers of non-adjacent vehicles (m).
    pub veh_clearance: f64,
    /// Lower bound on `x'^2 + y'^2` of the slackened path.
    #[serde(default = "default_slack_floor")]
    pub slack_floor: f64,
}

fn default_slack_floor() -> f64 {
    0.9
}

impl RobotParams {
    /// Robot used in the random-world benchmarks: 0.6 x 0.4 m tractor,
    /// 0.4 x 0.4 m trailers, 0.5 m wheelbase, 0.7 rad steering, 2 m/s and
    /// 2 m/s^2 limits, 1.47 rad jackknife bound.
    pub fn benchmark(n_trailers: usize) -> Self {
        let steer_max: f64 = 0.7;
        let wheelbase = 0.5;
        let tractor = BodySize::new(0.6, 0.4);
        let trailer = BodySize::new(0.4, 0.4);
        let mut body_sizes = vec![tractor];
        body_sizes.extend(std::iter::repeat(trailer).take(n_trailers));
        let wrap_radii = body_sizes.iter().map(BodySize::covering_radius).collect();
        Self {
            wheelbase,
            hitch_lengths: vec![0.5; n_trailers],
            rear_offset: 0.25,
            body_sizes,
            wrap_radii,
            limits: Limits {
                v_max: 2.0,
                a_max: 2.0,
                a_lat_max: 2.0,
                kappa_max: steer_max.tan() / wheelbase,
                jackknife: 1.47,
                steer_max,
            },
            veh_clearance: 0.5,
            slack_floor: 0.9,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ModelError> {
        let params: Self = toml::from_str(text)?;
        params.validate()?;
        Ok(params)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("robot params serialize")
    }

    pub fn n_trailers(&self) -> usize {
        self.hitch_lengths.len()
    }

    pub fn n_vehicles(&self) -> usize {
        self.hitch_lengths.len() + 1
    }

    pub fn tractor_length(&self) -> f64 {
        self.body_sizes[0].length
    }

    /// Smallest turning radius of the tractor rear axle.
    pub fn min_turn_radius(&self) -> f64 {
        1.0 / self.limits.kappa_max
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg: String| Err(ModelError::InvalidParams(msg));
        let n = self.n_vehicles();
        if self.body_sizes.len() != n || self.wrap_radii.len() != n {
            return bad(format!(
                "expected {n} body sizes and wrap radii, got {} and {}",
                self.body_sizes.len(),
                self.wrap_radii.len()
            ));
        }
        let positive = std::iter::once(self.wheelbase)
            .chain(std::iter::once(self.rear_offset))
            .chain(self.hitch_lengths.iter().copied())
            .chain(self.wrap_radii.iter().copied())
            .chain(self.body_sizes.iter().flat_map(|b| [b.length, b.width]));
        if positive.into_iter().any(|v| !(v > 0.0) || !v.is_finite()) {
            return bad("all lengths and radii must be positive and finite".into());
        }
        let l = &self.limits;
        if [l.v_max, l.a_max, l.a_lat_max, l.kappa_max, l.steer_max]
            .iter()
            .any(|v| !(*v > 0.0))
        {
            return bad("limits must be positive".into());
        }
        if !(l.jackknife > 0.0 && l.jackknife <= FRAC_PI_2) {
            return bad(format!("jackknife bound {} outside (0, pi/2]", l.jackknife));
        }
        if !(self.slack_floor > 0.0 && self.slack_floor <= 1.0) {
            return bad(format!("slack floor {} outside (0, 1]", self.slack_floor));
        }
        if l.kappa_max > l.steer_max.tan() / self.wheelbase * (1.0 + 1e-12) {
            return bad(format!(
                "curvature limit {} exceeds what steering allows ({})",
                l.kappa_max,
                l.steer_max.tan() / self.wheelbase
            ));
        }
        if !(self.veh_clearance >= 0.0) {
            return bad("vehicle clearance must be non-negative".into());
        }
        Ok(())
    }

    /// Body-frame corners of vehicle `i`, relative to the vehicle's
    /// reference point (`p0` for the tractor, `p_i` for trailers).
    pub fn body_corners(&self, vehicle: usize) -> [Vec2; 4] {
        let size = self.body_sizes[vehicle];
        let (hl, hw) = (0.5 * size.length, 0.5 * size.width);
        let cx = if vehicle == 0 { self.rear_offset } else { 0.0 };
        [
            Vec2::new(cx + hl, hw),
            Vec2::new(cx - hl, hw),
            Vec2::new(cx - hl, -hw),
            Vec2::new(cx + hl, -hw),
        ]
    }
}

/// Full configuration of the chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    /// Rear-axle center of the tractor.
    pub p0: [f64; 2],
    /// Longitudinal tractor speed.
    pub v0: f64,
    pub theta0: f64,
    /// Trailer yaws `theta_1..theta_N`.
    pub thetas: Vec<f64>,
}

impl RobotState {
    pub fn new(x: f64, y: f64, theta0: f64, thetas: Vec<f64>) -> Self {
        Self { p0: [x, y], v0: 0.0, theta0, thetas }
    }

    /// Tractor and all trailers aligned with the same yaw.
    pub fn aligned(x: f64, y: f64, theta: f64, n_trailers: usize) -> Self {
        Self::new(x, y, theta, vec![theta; n_trailers])
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.p0[0], self.p0[1])
    }

    /// Yaws of all vehicles, tractor first.
    pub fn yaws(&self) -> Vec<f64> {
        std::iter::once(self.theta0).chain(self.thetas.iter().copied()).collect()
    }

    /// Largest `|theta_{i-1} - theta_i|` along the chain.
    pub fn max_hitch_angle(&self) -> f64 {
        self.yaws()
            .windows(2)
            .map(|w| (w[0] - w[1]).abs())
            .fold(0.0, f64::max)
    }

    pub fn check_trailers(&self, params: &RobotParams) -> Result<(), ModelError> {
        if self.thetas.len() != params.n_trailers() {
            return Err(ModelError::TrailerCount {
                expected: params.n_trailers(),
                got: self.thetas.len(),
            });
        }
        Ok(())
    }
}

/// Physical variables recovered from the flat outputs at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlatSample {
    pub theta0: f64,
    pub v0: f64,
    pub a: f64,
    pub kappa: f64,
    pub a_lat: f64,
    pub steering: f64,
}

/// Speeds `v_0..v_N` of every vehicle for the given tractor speed and yaws.
pub fn chain_speeds(v0: f64, yaws: &[f64]) -> Vec<f64> {
    let mut speeds = Vec::with_capacity(yaws.len());
    let mut v = v0;
    speeds.push(v);
    for w in yaws.windows(2) {
        v *= (w[0] - w[1]).cos();
        speeds.push(v);
    }
    speeds
}

/// Yaw rates `theta_i'` of the trailers.
pub fn trailer_rates(params: &RobotParams, state: &RobotState) -> Vec<f64> {
    let yaws = state.yaws();
    rates_from_yaws(&params.hitch_lengths, state.v0, &yaws)
}

fn rates_from_yaws(hitch_lengths: &[f64], v0: f64, yaws: &[f64]) -> Vec<f64> {
    let speeds = chain_speeds(v0, yaws);
    hitch_lengths
        .iter()
        .enumerate()
        .map(|(k, len)| speeds[k] * (yaws[k] - yaws[k + 1]).sin() / len)
        .collect()
}

/// Maps derivatives of the slackened path and of the slackened arc length to
/// heading, speed, acceleration, curvature, lateral acceleration and
/// steering. `dx = [x', x'']` and `dy = [y', y'']` are taken with respect to
/// the slackened arc length, `ds = [s_dot, s_ddot]` with respect to time.
///
/// Nothing divides by the speed, so the map stays finite when `s_dot = 0`.
pub fn flat_eval(
    dx: [f64; 2],
    dy: [f64; 2],
    ds: [f64; 2],
    floor: f64,
    wheelbase: f64,
) -> Result<FlatSample, ModelError> {
    let norm_sq = dx[0] * dx[0] + dy[0] * dy[0];
    if !(norm_sq >= floor) {
        return Err(ModelError::DegenerateTangent { norm_sq, floor });
    }
    let norm = norm_sq.sqrt();
    let v0 = ds[0] * norm;
    let a = ds[1] * norm + ds[0] * ds[0] * (dx[0] * dx[1] + dy[0] * dy[1]) / norm;
    let kappa = (dx[0] * dy[1] - dy[0] * dx[1]) / (norm_sq * norm);
    Ok(FlatSample {
        theta0: dy[0].atan2(dx[0]),
        v0,
        a,
        kappa,
        a_lat: v0 * v0 * kappa,
        steering: (wheelbase * kappa).atan(),
    })
}

/// Positions of every vehicle and the centers of their covering circles.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseChain {
    /// `p0..pN`.
    pub positions: Vec<Vec2>,
    /// `pc0..pcN`; `pc_i = p_i` for trailers.
    pub centers: Vec<Vec2>,
}

pub fn rotation(theta: f64) -> nalgebra::Matrix2<f64> {
    let (s, c) = theta.sin_cos();
    nalgebra::Matrix2::new(c, -s, s, c)
}

/// Walks the hitch chain from the tractor rear axle.
///
/// `yaws` holds `theta_0..theta_N`.
pub fn pose_chain(params: &RobotParams, p0: Vec2, yaws: &[f64]) -> PoseChain {
    let mut positions = Vec::with_capacity(yaws.len());
    positions.push(p0);
    for (i, len) in params.hitch_lengths.iter().enumerate().take(yaws.len() - 1) {
        let prev = positions[i];
        positions.push(prev - rotation(yaws[i + 1]) * Vec2::new(*len, 0.0));
    }
    let mut centers = positions.clone();
    let (s, c) = yaws[0].sin_cos();
    centers[0] = p0 + params.rear_offset * Vec2::new(c, s);
    PoseChain { positions, centers }
}

/// Time-varying `(v0, steering)` input of the kinematic model.
pub trait ControlSignal {
    fn at(&self, t: f64) -> (f64, f64);
}

impl<F: Fn(f64) -> (f64, f64)> ControlSignal for F {
    fn at(&self, t: f64) -> (f64, f64) {
        self(t)
    }
}

/// Controls sampled on a uniform grid, linearly interpolated in between and
/// held constant past the last sample.
#[derive(Debug, Clone)]
pub struct SampledControls {
    pub dt: f64,
    pub speed: Vec<f64>,
    pub steering: Vec<f64>,
}

impl ControlSignal for SampledControls {
    fn at(&self, t: f64) -> (f64, f64) {
        let n = self.speed.len();
        if n == 0 {
            return (0.0, 0.0);
        }
        let u = (t / self.dt).max(0.0);
        let i = (u.floor() as usize).min(n - 1);
        if i + 1 >= n {
            return (self.speed[n - 1], self.steering[n - 1]);
        }
        let w = u - i as f64;
        (
            self.speed[i] * (1.0 - w) + self.speed[i + 1] * w,
            self.steering[i] * (1.0 - w) + self.steering[i + 1] * w,
        )
    }
}

/// Integrates the kinematic model with classic fourth-order Runge-Kutta.
///
/// Returns the state at `t = 0, dt, 2 dt, ...` up to `duration`.
pub fn rollout(
    params: &RobotParams,
    start: &RobotState,
    controls: &impl ControlSignal,
    dt: f64,
    duration: f64,
) -> Result<Vec<RobotState>, ModelError> {
    if !(dt > 0.0) {
        return Err(ModelError::InvalidStep(dt));
    }
    start.check_trailers(params)?;
    let steps = (duration / dt).round().max(0.0) as usize;
    let mut trace = Vec::with_capacity(steps + 1);

    // [x, y, theta0, theta1..thetaN]
    let mut z: Vec<f64> = vec![start.p0[0], start.p0[1]];
    z.extend(start.yaws());
    let deriv = |t: f64, z: &[f64]| -> Vec<f64> {
        let (v, steer) = controls.at(t);
        let yaws = &z[2..];
        let mut dz = Vec::with_capacity(z.len());
        dz.push(v * yaws[0].cos());
        dz.push(v * yaws[0].sin());
        dz.push(v * steer.tan() / params.wheelbase);
        dz.extend(rates_from_yaws(&params.hitch_lengths, v, yaws));
        dz
    };
    let snapshot = |t: f64, z: &[f64]| RobotState {
        p0: [z[0], z[1]],
        v0: controls.at(t).0,
        theta0: z[2],
        thetas: z[3..].to_vec(),
    };
    let check = |t: f64, z: &[f64]| -> Result<(), ModelError> {
        for (k, w) in z[2..].windows(2).enumerate() {
            if (w[0] - w[1]).abs() >= FRAC_PI_2 {
                return Err(ModelError::JackknifeDetected { vehicle: k, time: t });
            }
        }
        Ok(())
    };

    check(0.0, &z)?;
    trace.push(snapshot(0.0, &z));
    let axpy = |a: &[f64], s: f64, b: &[f64]| -> Vec<f64> {
        a.iter().zip(b).map(|(x, y)| x + s * y).collect()
    };
    for step in 0..steps {
        let t = step as f64 * dt;
        let k1 = deriv(t, &z);
        let k2 = deriv(t + 0.5 * dt, &axpy(&z, 0.5 * dt, &k1));
        let k3 = deriv(t + 0.5 * dt, &axpy(&z, 0.5 * dt, &k2));
        let k4 = deriv(t + dt, &axpy(&z, dt, &k3));
        for i in 0..z.len() {
            z[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        let t_next = (step + 1) as f64 * dt;
        check(t_next, &z)?;
        trace.push(snapshot(t_next, &z));
    }
    Ok(trace)
}
