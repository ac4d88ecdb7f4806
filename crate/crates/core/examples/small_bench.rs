//! Runs a small benchmark: five trials per trailer count in medium worlds.

use trailplan::cli::{run_bench, BenchMatrix};

fn main() {
    let matrix = BenchMatrix { trials: 5, ..Default::default() };
    let result = run_bench(&matrix, |row| {
        eprintln!("N={} trial {}: success {}", row.n_trailers, row.trial, row.success);
    });
    print!("{}", result.table());
}
