//! End-to-end planning runs and benchmark harness behavior.

use trailplan::cli::{run_bench, run_plan, BenchMatrix, FailureStage, PlanConfig, Scenario, TargetSpec};
use trailplan::env::{Bounds, ObstacleSet, Polygon};
use trailplan::model::{RobotParams, RobotState};

fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Polygon {
    Polygon::new(vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1]])
}

fn scenario(n: usize, start: RobotState, target: TargetSpec, bounds: Bounds, polygons: Vec<Polygon>) -> Scenario {
    Scenario { seed: 0, n_trailers: n, band: [0.0, 0.0], start, target, world: ObstacleSet { bounds, polygons } }
}

#[test]
fn empty_world_straight_task_is_nearly_straight() {
    let params = RobotParams::benchmark(1);
    let s = scenario(
        1,
        RobotState::aligned(3.0, 5.0, 0.0, 1),
        TargetSpec { center: [13.0, 5.0], yaw: 0.0, length: 2.6, width: 1.4 },
        Bounds::new([0.0, 0.0], [20.0, 10.0]),
        vec![],
    );
    let out = run_plan(&s, &params, &PlanConfig::default());
    assert!(out.report.success, "{:?}", out.report.message);
    let m = out.report.metrics.unwrap();
    // the tractor axle ends inside the target, so the straight-line lower
    // bound is the distance to the nearest admissible axle position
    let traj = out.trajectory.unwrap();
    let end = trailplan::poly::composed_state(&traj, traj.duration(), &params).unwrap().state;
    let straight = ((end.p0[0] - 3.0).powi(2) + (end.p0[1] - 5.0).powi(2)).sqrt();
    assert!(m.l_traj >= straight - 1e-6);
    assert!(m.l_traj <= 1.05 * straight, "{} vs {straight}", m.l_traj);
}

#[test]
fn sealed_start_fails_in_the_front_end() {
    let params = RobotParams::benchmark(2);
    let walls = vec![rect(2.0, 2.0, 10.0, 2.5), rect(2.0, 7.5, 10.0, 8.0), rect(2.0, 2.0, 2.5, 8.0), rect(9.5, 2.0, 10.0, 8.0)];
    let s = scenario(
        2,
        RobotState::aligned(6.5, 5.0, 0.0, 2),
        TargetSpec { center: [15.0, 5.0], yaw: 0.0, length: 3.0, width: 1.4 },
        Bounds::new([0.0, 0.0], [20.0, 10.0]),
        walls,
    );
    let out = run_plan(&s, &params, &PlanConfig::default());
    assert!(!out.report.success);
    assert_eq!(out.report.failure_stage, Some(FailureStage::FrontEnd));
    assert!(out.report.message.starts_with("no path"), "{}", out.report.message);
    assert!(out.trajectory.is_none());
}

#[test]
fn parking_lot_with_three_trailers() {
    let params = RobotParams::benchmark(3);
    // two rows of parked vehicles with a free slot in the lower row
    let mut cars = Vec::new();
    for k in 0..6 {
        let x = 6.0 + 3.0 * k as f64;
        cars.push(rect(x, 15.0, x + 1.8, 19.0));
        if k != 3 {
            cars.push(rect(x, 1.0, x + 1.8, 5.0));
        }
    }
    let s = scenario(
        3,
        RobotState::aligned(3.0, 10.0, 0.0, 3),
        TargetSpec { center: [15.9, 3.2], yaw: -std::f64::consts::FRAC_PI_2, length: 3.2, width: 1.0 },
        Bounds::new([0.0, 0.0], [26.0, 20.0]),
        cars,
    );
    let out = run_plan(&s, &params, &PlanConfig::default());
    assert!(out.report.success, "{:?} {}", out.report.failure_stage, out.report.message);
    let m = out.report.metrics.unwrap();
    assert!(m.mean_kappa <= params.limits.kappa_max);
    assert!(out.report.feasibility.unwrap().passed());
}

#[test]
fn single_empty_trial_gives_one_full_row() {
    let matrix = BenchMatrix { trailers: vec![1], complexities: vec![[0, 0, 0]], trials: 1, ..Default::default() };
    let result = run_bench(&matrix, |_| {});
    assert_eq!(result.rows.len(), 1);
    assert_eq!(result.cells.len(), 1);
    assert_eq!(result.cells[0].success_rate, 1.0);
    assert_eq!(result.table().lines().count(), 2);
}

#[test]
fn rerun_gives_identical_csv() {
    let matrix = BenchMatrix {
        trailers: vec![1, 2],
        complexities: vec![[3, 3, 3]],
        trials: 2,
        seed: 7,
        record_timings: false,
        ..Default::default()
    };
    let a = run_bench(&matrix, |_| {});
    let b = run_bench(&matrix, |_| {});
    assert_eq!(a.rows_csv().unwrap(), b.rows_csv().unwrap());
    assert_eq!(a.cells_csv().unwrap(), b.cells_csv().unwrap());
    // both trailer counts see the same worlds
    assert_eq!(a.rows[0].seed, a.rows[2].seed);
}
