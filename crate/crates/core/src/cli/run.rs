use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::env::{build_sdf, rasterize, Sdf, TargetRegion};
use crate::model::{rollout, RobotParams, RobotState, SampledControls};
use crate::opt::{
    alm_solve, check_feasibility, initial_guess, pieces_for_length, AlmError, FeasibilityReport,
    FeasibilityTolerances, SolverConfig, TrajectoryProblem,
};
use crate::poly::{composed_state, FlatTrajectory, PolyError};
use crate::search::{search, wrap_pi, SearchConfig, SearchPath};

use super::scenario::Scenario;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PlanConfig {
    /// Cell size of the occupancy raster and distance field (m).
    pub map_resolution: f64,
    /// Tractor pieces per metre of search path.
    pub pieces_per_meter: f64,
    /// Step of the open-loop validation rollout (s).
    pub rollout_dt: f64,
    /// Search candidates tried in score order until one optimizes.
    pub max_attempts: usize,
    pub search: SearchConfig,
    pub solver: SolverConfig,
    pub feasibility: FeasibilityTolerances,
}

impl Default for PlanConfig {
    fn default() -> Self {
        Self {
            map_resolution: 0.1,
            pieces_per_meter: 1.0,
            rollout_dt: 1e-3,
            max_attempts: 2,
            search: SearchConfig::default(),
            solver: SolverConfig::default(),
            feasibility: FeasibilityTolerances::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureStage {
    /// Bad scenario or robot description.
    Input,
    /// No path within the expansion or time budget.
    FrontEnd,
    /// The augmented Lagrangian did not reach the violation tolerance.
    Optimization,
    /// The optimizer converged but dense re-sampling found a violation.
    Infeasible,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Tractor path length (m).
    pub l_traj: f64,
    /// Duration (s).
    pub t_d: f64,
    /// Arc-length weighted mean of `|kappa|` (1/m).
    pub mean_kappa: f64,
    /// Largest trailer yaw difference between the open-loop rollout and the
    /// trajectory (rad).
    pub rollout_error: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub seed: u64,
    pub n_trailers: usize,
    pub success: bool,
    pub failure_stage: Option<FailureStage>,
    pub message: String,
    pub front_end_ms: f64,
    pub optimization_ms: f64,
    /// Tractor pieces of the optimized trajectory.
    pub pieces: usize,
    /// Search candidates handed to the optimizer.
    pub attempts: usize,
    /// Length of the search path (m).
    pub search_length: f64,
    pub outer_iterations: usize,
    pub final_violation: Option<f64>,
    pub metrics: Option<Metrics>,
    pub feasibility: Option<FeasibilityReport>,
    pub history: Vec<crate::opt::alm::OuterRecord>,
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct PlanOutput {
    pub report: RunReport,
    pub path: Option<SearchPath>,
    pub trajectory: Option<FlatTrajectory>,
}

/// Arc length, duration and mean curvature from samples every `dt`.
pub fn trajectory_metrics(traj: &FlatTrajectory, params: &RobotParams, dt: f64) -> Result<(f64, f64, f64), PolyError> {
    let ts = traj.sample_times(dt);
    let mut prev: Option<(f64, f64, f64)> = None;
    let (mut len, mut kappa_arc) = (0.0, 0.0);
    for t in ts {
        let k = composed_state(traj, t, params)?;
        let cur = (t, k.state.v0.abs(), k.flat.kappa.abs());
        if let Some((t0, v0, k0)) = prev {
            let h = t - t0;
            len += 0.5 * h * (v0 + cur.1);
            kappa_arc += 0.5 * h * (v0 * k0 + cur.1 * cur.2);
        }
        prev = Some(cur);
    }
    let mean = if len > 0.0 { kappa_arc / len } else { 0.0 };
    Ok((len, traj.duration(), mean))
}

/// Replays `(v0(t), steering(t))` of the trajectory through the kinematic
/// model from its initial state and returns the largest trailer yaw error.
pub fn rollout_error(traj: &FlatTrajectory, params: &RobotParams, dt: f64) -> Result<f64, String> {
    let tf = traj.duration();
    let steps = (tf / dt).ceil() as usize;
    let mut speed = Vec::with_capacity(steps + 1);
    let mut steering = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let kin = composed_state(traj, (k as f64 * dt).min(tf), params).map_err(|e| e.to_string())?;
        speed.push(kin.state.v0);
        steering.push(kin.flat.steering);
        states.push(kin.state);
    }
    if let Some(first) = states[0].thetas.first().copied() {
        states[0].theta0 = first + wrap_pi(states[0].theta0 - first);
    }
    let controls = SampledControls { dt, speed, steering };
    let trace = rollout(params, &states[0], &controls, dt, steps as f64 * dt).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for (a, b) in trace.iter().zip(&states) {
        for (x, y) in a.thetas.iter().zip(&b.thetas) {
            worst = worst.max((x - y).abs());
        }
    }
    Ok(worst)
}

/// Builds the map, searches, optimizes and validates one scenario.
pub fn run_plan(scenario: &Scenario, params: &RobotParams, cfg: &PlanConfig) -> PlanOutput {
    let mut report = RunReport {
        seed: scenario.seed,
        n_trailers: scenario.n_trailers,
        success: false,
        failure_stage: None,
        message: String::new(),
        front_end_ms: 0.0,
        optimization_ms: 0.0,
        pieces: 0,
        attempts: 0,
        search_length: 0.0,
        outer_iterations: 0,
        final_violation: None,
        metrics: None,
        feasibility: None,
        history: Vec::new(),
    };
    let mut out = PlanOutput { report: report.clone(), path: None, trajectory: None };
    let fail = |mut report: RunReport, stage: FailureStage, msg: String, out: &mut PlanOutput| {
        report.failure_stage = Some(stage);
        report.message = msg;
        out.report = report;
    };

    if let Err(e) = params.validate().map_err(|e| e.to_string()).and_then(|_| {
        scenario.start.check_trailers(params).map_err(|e| e.to_string())
    }) {
        fail(report, FailureStage::Input, e, &mut out);
        return out;
    }
    let grid = match rasterize(&scenario.world, cfg.map_resolution) {
        Ok(g) => g,
        Err(e) => {
            fail(report, FailureStage::Input, e.to_string(), &mut out);
            return out;
        }
    };
    let sdf = build_sdf(&grid);
    let region = scenario.target.region();

    let clock = Instant::now();
    let start = &scenario.start;
    let found = search(&grid, &sdf, params, [start.p0[0], start.p0[1], start.theta0], &start.thetas, &region, &cfg.search);
    report.front_end_ms = clock.elapsed().as_secs_f64() * 1e3;
    let outcome = match found {
        Ok(o) if report.front_end_ms <= cfg.search.time_budget * 1e3 => o,
        Ok(_) => {
            fail(report, FailureStage::FrontEnd, "time budget exceeded".into(), &mut out);
            return out;
        }
        Err(e) => {
            fail(report, FailureStage::FrontEnd, e.to_string(), &mut out);
            return out;
        }
    };
    // candidates from other terminals serve as fallbacks when the best one
    // cannot be optimized
    let mut candidates = outcome.candidates.clone();
    candidates.sort_by(|a, b| a.score.total_cmp(&b.score));
    candidates.truncate(cfg.max_attempts.max(1));

    let clock = Instant::now();
    let mut solved = Err((FailureStage::Optimization, "no candidate".to_string()));
    for path in &candidates {
        report.attempts += 1;
        report.search_length = path.length;
        out.path = Some(path.clone());
        solved = optimize(path, start, &sdf, &region, params, cfg, &mut report);
        if solved.is_ok() {
            break;
        }
    }
    report.optimization_ms = clock.elapsed().as_secs_f64() * 1e3;
    let traj = match solved {
        Ok(t) => t,
        Err((stage, msg)) => {
            fail(report, stage, msg, &mut out);
            return out;
        }
    };

    match validate(&traj, params, &sdf, &region, cfg) {
        Ok((metrics, feas)) => {
            let passed = feas.passed();
            let failures = feas.failures.join(", ");
            report.metrics = Some(metrics);
            report.feasibility = Some(feas);
            out.trajectory = Some(traj);
            if passed {
                report.success = true;
                out.report = report;
            } else {
                fail(report, FailureStage::Infeasible, format!("re-sampling failed: {failures}"), &mut out);
            }
        }
        Err(msg) => {
            out.trajectory = Some(traj);
            fail(report, FailureStage::Infeasible, msg, &mut out);
        }
    }
    out
}

fn optimize(
    path: &SearchPath,
    start: &RobotState,
    sdf: &Sdf,
    region: &TargetRegion,
    params: &RobotParams,
    cfg: &PlanConfig,
    report: &mut RunReport,
) -> Result<FlatTrajectory, (FailureStage, String)> {
    let pieces = pieces_for_length(path.length * cfg.pieces_per_meter);
    report.pieces = pieces;
    let problem = TrajectoryProblem::new(params, sdf, region, start.clone(), pieces, cfg.solver.clone());
    let guess = initial_guess(path, pieces, problem.layout.trailer_pieces, params, start)
        .map_err(|e| (FailureStage::Optimization, e.to_string()))?;
    let x0 = problem.encode(&guess).map_err(|e| (FailureStage::Optimization, e.to_string()))?;
    let result = match alm_solve(&problem, &x0, &cfg.solver.alm()) {
        Ok(r) => r,
        Err(AlmError::MaxOuterIterations { iterations, violation, result }) => {
            report.outer_iterations = iterations;
            report.final_violation = Some(violation);
            report.history = result.history;
            return Err((FailureStage::Optimization, format!("violation {violation:.3e} after {iterations} outer iterations")));
        }
        Err(e) => return Err((FailureStage::Optimization, e.to_string())),
    };
    report.outer_iterations = result.history.len();
    report.final_violation = Some(result.violation);
    report.history = result.history;
    let decoded = problem.decode(&result.x).map_err(|e| (FailureStage::Optimization, e.to_string()))?;
    Ok(decoded.traj)
}

fn validate(
    traj: &FlatTrajectory,
    params: &RobotParams,
    sdf: &Sdf,
    region: &TargetRegion,
    cfg: &PlanConfig,
) -> Result<(Metrics, FeasibilityReport), String> {
    let feas = check_feasibility(traj, params, sdf, region, &cfg.feasibility).map_err(|e| e.to_string())?;
    let (l_traj, t_d, mean_kappa) = trajectory_metrics(traj, params, cfg.rollout_dt).map_err(|e| e.to_string())?;
    let err = rollout_error(traj, params, cfg.rollout_dt)?;
    Ok((Metrics { l_traj, t_d, mean_kappa, rollout_error: err }, feas))
}

/// Rebuilds the map of a scenario and re-checks a stored trajectory.
pub fn validate_solution(
    scenario: &Scenario,
    params: &RobotParams,
    traj: &FlatTrajectory,
    cfg: &PlanConfig,
) -> Result<(Metrics, FeasibilityReport), String> {
    let grid = rasterize(&scenario.world, cfg.map_resolution).map_err(|e| e.to_string())?;
    let sdf = build_sdf(&grid);
    validate(traj, params, &sdf, &scenario.target.region(), cfg)
}
