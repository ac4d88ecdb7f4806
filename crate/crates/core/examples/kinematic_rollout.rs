//! Drives a tractor with two trailers through a constant-steering turn and
//! prints the hitch angles settling towards their steady state.

use trailplan::model::{pose_chain, rollout, RobotParams, RobotState};

fn main() {
    let params = RobotParams::benchmark(2);
    let start = RobotState::aligned(0.0, 0.0, 0.0, 2);
    let controls = |_t: f64| (1.0, 0.3);
    let trace = rollout(&params, &start, &controls, 0.01, 10.0).expect("valid start");
    println!("{:>5} {:>8} {:>8} {:>8} {:>9} {:>9}", "t", "x", "y", "theta0", "hitch1", "hitch2");
    for (k, s) in trace.iter().enumerate().step_by(100) {
        let yaws = s.yaws();
        println!(
            "{:5.1} {:8.3} {:8.3} {:8.3} {:9.4} {:9.4}",
            k as f64 * 0.01,
            s.p0[0],
            s.p0[1],
            s.theta0,
            yaws[0] - yaws[1],
            yaws[1] - yaws[2]
        );
    }
    let last = trace.last().expect("non-empty trace");
    let chain = pose_chain(&params, last.position(), &last.yaws());
    for (i, p) in chain.positions.iter().enumerate() {
        println!("vehicle {i} axle at ({:.3}, {:.3})", p.x, p.y);
    }
}
