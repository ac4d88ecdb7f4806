use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::model::RobotParams;

use super::run::{run_plan, FailureStage, PlanConfig};
use super::scenario::{gen_scenario, ScenarioSpec};

/// Grid of benchmark cells: every trailer count times every obstacle mix
/// times every distance band.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchMatrix {
    pub trailers: Vec<usize>,
    /// Numbers of triangles, quadrilaterals and pentagons.
    pub complexities: Vec<[usize; 3]>,
    pub bands: Vec<[f64; 2]>,
    pub trials: usize,
    pub seed: u64,
    pub world_size: f64,
    /// When false, timing columns are left empty so reruns compare equal.
    pub record_timings: bool,
    pub plan: PlanConfig,
}

impl Default for BenchMatrix {
    fn default() -> Self {
        Self {
            trailers: vec![1, 2, 3],
            complexities: vec![[20, 20, 20]],
            bands: vec![[10.0, 20.0]],
            trials: 30,
            seed: 0,
            world_size: 40.0,
            record_timings: true,
            plan: PlanConfig::default(),
        }
    }
}

impl BenchMatrix {
    pub fn from_toml_str(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    /// Scenario seed of one trial. It does not depend on the trailer count,
    /// so every trailer count sees the same start, target and obstacles.
    pub fn trial_seed(&self, complexity: usize, band: usize, trial: usize) -> u64 {
        self.seed
            .wrapping_mul(1_000_000_007)
            .wrapping_add(((complexity * 1000 + band) * 100_000 + trial) as u64)
    }
}

/// One benchmark trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub n_trailers: usize,
    pub n_tri: usize,
    pub n_quad: usize,
    pub n_pent: usize,
    pub band_min: f64,
    pub band_max: f64,
    pub trial: usize,
    pub seed: u64,
    pub front_end_ok: bool,
    pub success: bool,
    pub failure_stage: Option<FailureStage>,
    pub front_end_ms: Option<f64>,
    pub optimization_ms: Option<f64>,
    pub pieces: usize,
    pub l_traj: Option<f64>,
    pub t_d: Option<f64>,
    pub mean_kappa: Option<f64>,
    pub rollout_error: Option<f64>,
    /// Largest trailer equation residual over the dense samples (m/s).
    pub max_residual: Option<f64>,
    /// Every dense re-sampling check passed.
    pub feasible: Option<bool>,
}

/// Aggregate of the trials of one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub n_trailers: usize,
    pub n_tri: usize,
    pub n_quad: usize,
    pub n_pent: usize,
    pub band_min: f64,
    pub band_max: f64,
    pub trials: usize,
    pub front_end_rate: f64,
    pub success_rate: f64,
    pub front_end_ms_mean: Option<f64>,
    pub optimization_ms_mean: Option<f64>,
    pub optimization_ms_median: Option<f64>,
    pub l_traj_mean: Option<f64>,
    pub l_traj_std: Option<f64>,
    pub t_d_mean: Option<f64>,
    pub t_d_std: Option<f64>,
    pub mean_kappa_mean: Option<f64>,
    pub mean_kappa_std: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub rows: Vec<TrialRow>,
    pub cells: Vec<CellSummary>,
}

fn mean_std(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (Some(mean), Some(var.sqrt()))
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[k] } else { 0.5 * (v[k - 1] + v[k]) })
}

fn summarize(rows: &[TrialRow]) -> CellSummary {
    let first = &rows[0];
    let ok: Vec<&TrialRow> = rows.iter().filter(|r| r.success).collect();
    let collect = |f: &dyn Fn(&TrialRow) -> Option<f64>| -> Vec<f64> { ok.iter().filter_map(|r| f(r)).collect() };
    let opt_ms: Vec<f64> = collect(&|r| r.optimization_ms);
    let fe_ms: Vec<f64> = rows.iter().filter(|r| r.front_end_ok).filter_map(|r| r.front_end_ms).collect();
    let (l_mean, l_std) = mean_std(&collect(&|r| r.l_traj));
    let (t_mean, t_std) = mean_std(&collect(&|r| r.t_d));
    let (k_mean, k_std) = mean_std(&collect(&|r| r.mean_kappa));
    let n = rows.len() as f64;
    CellSummary {
        n_trailers: first.n_trailers,
        n_tri: first.n_tri,
        n_quad: first.n_quad,
        n_pent: first.n_pent,
        band_min: first.band_min,
        band_max: first.band_max,
        trials: rows.len(),
        front_end_rate: rows.iter().filter(|r| r.front_end_ok).count() as f64 / n,
        success_rate: ok.len() as f64 / n,
        front_end_ms_mean: mean_std(&fe_ms).0,
        optimization_ms_mean: mean_std(&opt_ms).0,
        optimization_ms_median: median(&opt_ms),
        l_traj_mean: l_mean,
        l_traj_std: l_std,
        t_d_mean: t_mean,
        t_d_std: t_std,
        mean_kappa_mean: k_mean,
        mean_kappa_std: k_std,
    }
}

/// Runs every trial of every cell sequentially, calling `progress` after
/// each trial.
pub fn run_bench(matrix: &BenchMatrix, mut progress: impl FnMut(&TrialRow)) -> BenchResult {
    let mut result = BenchResult::default();
    for &n in &matrix.trailers {
        let params = RobotParams::benchmark(n);
        for (ci, counts) in matrix.complexities.iter().enumerate() {
            for (bi, band) in matrix.bands.iter().enumerate() {
                let mut cell = Vec::with_capacity(matrix.trials);
                for trial in 0..matrix.trials {
                    let seed = matrix.trial_seed(ci, bi, trial);
                    let spec = ScenarioSpec {
                        seed,
                        n_trailers: n,
                        counts: *counts,
                        band: *band,
                        world_size: matrix.world_size,
                        ..Default::default()
                    };
                    let mut row = TrialRow {
                        n_trailers: n,
                        n_tri: counts[0],
                        n_quad: counts[1],
                        n_pent: counts[2],
                        band_min: band[0],
                        band_max: band[1],
                        trial,
                        seed,
                        front_end_ok: false,
                        success: false,
                        failure_stage: Some(FailureStage::Input),
                        front_end_ms: None,
                        optimization_ms: None,
                        pieces: 0,
                        l_traj: None,
                        t_d: None,
                        mean_kappa: None,
                        rollout_error: None,
                        max_residual: None,
                        feasible: None,
                    };
                    if let Ok(scenario) = gen_scenario(&spec, &params) {
                        let out = run_plan(&scenario, &params, &matrix.plan);
                        let r = &out.report;
                        row.front_end_ok = !matches!(r.failure_stage, Some(FailureStage::Input | FailureStage::FrontEnd));
                        row.success = r.success;
                        row.failure_stage = r.failure_stage;
                        if matrix.record_timings {
                            row.front_end_ms = Some(r.front_end_ms);
                            row.optimization_ms = row.front_end_ok.then_some(r.optimization_ms);
                        }
                        row.pieces = r.pieces;
                        if let Some(m) = &r.metrics {
                            row.l_traj = Some(m.l_traj);
                            row.t_d = Some(m.t_d);
                            row.mean_kappa = Some(m.mean_kappa);
                            row.rollout_error = Some(m.rollout_error);
                        }
                        row.max_residual = r.feasibility.as_ref().map(|f| f.max_residual);
                        row.feasible = r.feasibility.as_ref().map(|f| f.passed());
                    }
                    progress(&row);
                    cell.push(row);
                }
                result.cells.push(summarize(&cell));
                result.rows.extend(cell);
            }
        }
    }
    result
}

fn to_csv<T: Serialize>(items: &[T]) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for it in items {
        w.serialize(it)?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv is utf-8"))
}

impl BenchResult {
    pub fn rows_csv(&self) -> Result<String, csv::Error> {
        to_csv(&self.rows)
    }

    pub fn cells_csv(&self) -> Result<String, csv::Error> {
        to_csv(&self.cells)
    }

    /// Plain-text table, one line per cell.
    pub fn table(&self) -> String {
        let fmt = |v: Option<f64>, p: usize| v.map_or("-".to_string(), |x| format!("{x:.p$}"));
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:>2} {:>12} {:>9} {:>6} {:>8} {:>8} {:>10} {:>14} {:>14} {:>14}",
            "N", "complexity", "band", "trials", "fe_rate", "success", "t_opt_ms", "l_traj_m", "t_d_s", "kappa_1/m"
        );
        for c in &self.cells {
            let pm = |m: Option<f64>, sd: Option<f64>, p: usize| format!("{}±{}", fmt(m, p), fmt(sd, p));
            let _ = writeln!(
                s,
                "{:>2} {:>12} {:>9} {:>6} {:>8.3} {:>8.3} {:>10} {:>14} {:>14} {:>14}",
                c.n_trailers,
                format!("{},{},{}", c.n_tri, c.n_quad, c.n_pent),
                format!("{}-{}", c.band_min, c.band_max),
                c.trials,
                c.front_end_rate,
                c.success_rate,
                fmt(c.optimization_ms_median, 1),
                pm(c.l_traj_mean, c.l_traj_std, 2),
                pm(c.t_d_mean, c.t_d_std, 2),
                pm(c.mean_kappa_mean, c.mean_kappa_std, 4),
            );
        }
        s
    }
}
