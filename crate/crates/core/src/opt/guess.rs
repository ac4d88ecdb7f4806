use thiserror::Error;

use crate::model::{RobotParams, RobotState};
use crate::search::{wrap_pi, SearchPath};

use super::problem::Parameters;

#[derive(Debug, Error, PartialEq)]
pub enum GuessError {
    #[error("path has {states} states and length {length} m")]
    PathTooShort { states: usize, length: f64 },
    #[error("trailer traces do not match the robot ({0} expected)")]
    TrailerCount(usize),
}

/// Fraction of the jackknife bound the terminal hitch angles are clamped to.
const HITCH_CLAMP: f64 = 0.95;
/// Guess speed as a fraction of the speed limit.
const GUESS_SPEED_RATIO: f64 = 0.6;

/// Tractor pieces for a path of the given length, about one per metre.
pub fn pieces_for_length(length: f64) -> usize {
    (length.max(0.0).ceil() as usize).clamp(2, 64)
}

/// Linear interpolation of `values` at `q` over the increasing `keys`.
fn interp(keys: &[f64], values: &[f64], q: f64) -> f64 {
    let k = keys.partition_point(|v| *v <= q).clamp(1, keys.len() - 1);
    let (k0, k1) = (keys[k - 1], keys[k]);
    if k1 <= k0 {
        return values[k];
    }
    let w = ((q - k0) / (k1 - k0)).clamp(0.0, 1.0);
    values[k - 1] + w * (values[k] - values[k - 1])
}

/// Maps a search path to reduced optimizer variables with `pieces` tractor
/// pieces and `trailer_pieces` trailer pieces. Yaws are unwrapped starting
/// from the branch of `start`.
pub fn initial_guess(
    path: &SearchPath,
    pieces: usize,
    trailer_pieces: usize,
    params: &RobotParams,
    start: &RobotState,
) -> Result<Parameters, GuessError> {
    let pts = &path.points;
    let n = params.n_trailers();
    let mut arc = Vec::with_capacity(pts.len());
    let mut acc = 0.0;
    for (k, p) in pts.iter().enumerate() {
        if k > 0 {
            acc += (p.x - pts[k - 1].x).hypot(p.y - pts[k - 1].y);
        }
        arc.push(acc);
    }
    if pts.len() < 2 || !(acc > 1e-6) {
        return Err(GuessError::PathTooShort { states: pts.len(), length: acc });
    }
    if path.trailers.len() != pts.len() || path.trailers.iter().any(|t| t.len() != n) {
        return Err(GuessError::TrailerCount(n));
    }

    let xs: Vec<f64> = pts.iter().map(|p| p.x).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.y).collect();
    let mut waypoints = Vec::with_capacity(2 * (pieces - 1));
    for j in 1..pieces {
        let q = acc * j as f64 / pieces as f64;
        waypoints.push(interp(&arc, &xs, q));
        waypoints.push(interp(&arc, &ys, q));
    }

    // unwrapped yaws of every vehicle along the path
    let mut yaw0 = vec![start.theta0 + wrap_pi(pts[0].theta0 - start.theta0)];
    for k in 1..pts.len() {
        let prev = yaw0[k - 1];
        yaw0.push(prev + wrap_pi(pts[k].theta0 - prev));
    }
    let mut trailer_yaws = vec![Vec::with_capacity(pts.len()); n];
    for i in 0..n {
        let mut prev = start.thetas[i];
        for trace in &path.trailers {
            let v = prev + wrap_pi(trace[i] - prev);
            trailer_yaws[i].push(v);
            prev = v;
        }
    }

    let times: Vec<f64> = pts.iter().map(|p| p.t).collect();
    let t_end = *times.last().unwrap();
    let by_time = t_end > times[0];
    let mut trailer_waypoints = Vec::with_capacity(n * (trailer_pieces - 1));
    for k in 1..trailer_pieces {
        let f = k as f64 / trailer_pieces as f64;
        for yaws in &trailer_yaws {
            trailer_waypoints.push(if by_time {
                interp(&times, yaws, times[0] + f * (t_end - times[0]))
            } else {
                interp(&arc, yaws, f * acc)
            });
        }
    }

    let last = pts.len() - 1;
    let bound = params.limits.jackknife;
    let mut hitches = Vec::with_capacity(n);
    let mut prev = yaw0[last];
    for yaws in &trailer_yaws {
        let h = (prev - yaws[last]).clamp(-HITCH_CLAMP * bound, HITCH_CLAMP * bound);
        hitches.push(h);
        prev -= h;
    }

    Ok(Parameters {
        waypoints,
        segments: vec![acc / pieces as f64; pieces],
        trailer_waypoints,
        end_pose: [pts[last].x, pts[last].y, yaw0[last]],
        hitches,
        duration: acc / (GUESS_SPEED_RATIO * params.limits.v_max),
    })
}
