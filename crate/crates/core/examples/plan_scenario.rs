//! Plans one random medium-density scenario end to end and prints the report.
//!
//! Usage: `plan_scenario [seed] [trailers]`

use trailplan::cli::{gen_scenario, run_plan, PlanConfig, ScenarioSpec};
use trailplan::model::RobotParams;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let seed = args.get(1).map_or(3, |s| s.parse().expect("seed is an integer"));
    let n = args.get(2).map_or(2, |s| s.parse().expect("trailer count is an integer"));
    let params = RobotParams::benchmark(n);
    let spec = ScenarioSpec { seed, n_trailers: n, ..Default::default() };
    let scenario = gen_scenario(&spec, &params).expect("scenario fits");
    let out = run_plan(&scenario, &params, &PlanConfig::default());
    let r = &out.report;
    println!("success {}  stage {:?}  {}", r.success, r.failure_stage, r.message);
    println!(
        "front end {:.1} ms, optimization {:.1} ms, {} pieces, {} outer iterations",
        r.front_end_ms, r.optimization_ms, r.pieces, r.outer_iterations
    );
    if let Some(m) = &r.metrics {
        println!(
            "l_traj {:.2} m, t_d {:.2} s, mean |kappa| {:.4} 1/m, rollout error {:.2e} rad",
            m.l_traj, m.t_d, m.mean_kappa, m.rollout_error
        );
    }
    if let Some(f) = &r.feasibility {
        println!(
            "max speed {:.3}, max accel {:.3}, max curvature {:.3}, min clearance {:.3}, failures {:?}",
            f.max_speed, f.max_accel, f.max_curvature, f.min_clearance, f.failures
        );
    }
}
