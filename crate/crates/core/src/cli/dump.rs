use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{pose_chain, RobotParams};
use crate::poly::{composed_state, FlatTrajectory, PolyError, QuinticSpline, SplineRecord};
use crate::search::SearchPath;

use super::scenario::Scenario;

#[derive(Debug, Error)]
pub enum DumpError {
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A solved trajectory with everything needed to re-check it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionFile {
    pub scenario: Scenario,
    pub robot: RobotParams,
    pub xy: SplineRecord,
    pub s_of_t: SplineRecord,
    pub thetas: SplineRecord,
}

impl SolutionFile {
    pub fn new(scenario: &Scenario, robot: &RobotParams, traj: &FlatTrajectory) -> Self {
        Self {
            scenario: scenario.clone(),
            robot: robot.clone(),
            xy: (&traj.xy).into(),
            s_of_t: (&traj.s_of_t).into(),
            thetas: (&traj.thetas).into(),
        }
    }

    pub fn trajectory(&self) -> Result<FlatTrajectory, PolyError> {
        Ok(FlatTrajectory {
            xy: QuinticSpline::try_from(self.xy.clone())?,
            s_of_t: QuinticSpline::try_from(self.s_of_t.clone())?,
            thetas: QuinticSpline::try_from(self.thetas.clone())?,
        })
    }

    pub fn to_json(&self) -> Result<String, DumpError> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, DumpError> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Header of the trajectory dump for `n` trailers.
pub fn trajectory_header(n: usize) -> Vec<String> {
    let mut h: Vec<String> = ["t", "x", "y", "theta0", "v", "a", "kappa", "a_lat", "steering", "s", "s_dot"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    h.extend((1..=n).map(|i| format!("theta{i}")));
    for i in 1..=n {
        h.push(format!("x{i}"));
        h.push(format!("y{i}"));
    }
    h
}

/// Trajectory sampled every `dt` plus the final instant, as CSV.
pub fn trajectory_csv(traj: &FlatTrajectory, params: &RobotParams, dt: f64) -> Result<String, DumpError> {
    let n = traj.n_trailers();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(trajectory_header(n))?;
    for t in traj.sample_times(dt) {
        let k = composed_state(traj, t, params)?;
        let f = &k.flat;
        let mut row = vec![t, k.state.p0[0], k.state.p0[1], f.theta0, f.v0, f.a, f.kappa, f.a_lat, f.steering, k.arc[0], k.arc[1]];
        row.extend(&k.state.thetas);
        let chain = pose_chain(params, k.state.position(), &k.state.yaws());
        for p in &chain.positions[1..] {
            row.push(p.x);
            row.push(p.y);
        }
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv is utf-8"))
}

/// Search path samples as CSV: `t,x,y,theta0,v,steer,theta1..thetaN`.
pub fn path_csv(path: &SearchPath) -> Result<String, DumpError> {
    let n = path.trailers.first().map_or(0, Vec::len);
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = ["t", "x", "y", "theta0", "v", "steer"].iter().map(|s| s.to_string()).collect();
    header.extend((1..=n).map(|i| format!("theta{i}")));
    w.write_record(&header)?;
    for (p, tr) in path.points.iter().zip(&path.trailers) {
        let mut row = vec![p.t, p.x, p.y, p.theta0, p.v, p.steer];
        row.extend(tr);
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv is utf-8"))
}
