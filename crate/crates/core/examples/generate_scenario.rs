//! Writes a random benchmark scenario as TOML.
//!
//! Usage: `generate_scenario [seed] [trailers] [out.toml]`

use trailplan::cli::{gen_scenario, ScenarioSpec};
use trailplan::model::RobotParams;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let seed = args.get(1).map_or(0, |s| s.parse().expect("seed is an integer"));
    let n = args.get(2).map_or(1, |s| s.parse().expect("trailer count is an integer"));
    let spec = ScenarioSpec { seed, n_trailers: n, ..Default::default() };
    let scenario = gen_scenario(&spec, &RobotParams::benchmark(n)).expect("scenario fits");
    let text = scenario.to_toml_string();
    match args.get(3) {
        Some(path) => {
            std::fs::write(path, text).expect("writable output");
            eprintln!("start-goal distance {:.2} m, written to {path}", scenario.start_goal_distance());
        }
        None => print!("{text}"),
    }
}
