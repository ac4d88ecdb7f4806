//! Scenario generation, end-to-end planning runs, benchmarks and dumps.

mod bench;
mod dump;
mod run;
mod scenario;

pub use bench::{median, run_bench, BenchMatrix, BenchResult, CellSummary, TrialRow};
pub use dump::{path_csv, trajectory_csv, trajectory_header, DumpError, SolutionFile};
pub use run::{
    rollout_error, run_plan, trajectory_metrics, validate_solution, FailureStage, Metrics, PlanConfig, PlanOutput,
    RunReport,
};
pub use scenario::{chain_length, gen_scenario, Scenario, ScenarioError, ScenarioSpec, TargetSpec};
