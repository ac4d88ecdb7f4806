use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use trailplan::cli::{
    path_csv, run_bench, run_plan, trajectory_csv, validate_solution, BenchMatrix, PlanConfig, Scenario,
    SolutionFile,
};
use trailplan::env::{build_sdf, rasterize};
use trailplan::model::RobotParams;

#[derive(Parser)]
#[command(name = "trailplan", version, about = "Trajectory planner for tractor-trailer robots")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plan one scenario and write the trajectory, path, report and solution files.
    Plan {
        scenario: PathBuf,
        /// Robot parameters (TOML); defaults to the benchmark robot.
        #[arg(long)]
        robot: Option<PathBuf>,
        /// Planner configuration (TOML).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Sample step of the trajectory dump (s).
        #[arg(long, default_value_t = 0.05)]
        dt: f64,
    },
    /// Run a benchmark matrix and write per-trial and per-cell CSV files.
    Bench {
        matrix: PathBuf,
        #[arg(long, default_value = "bench_out")]
        out: PathBuf,
        /// Overrides the trial count of the matrix.
        #[arg(long)]
        trials: Option<usize>,
        /// Leaves timing columns empty so reruns give identical files.
        #[arg(long)]
        no_timings: bool,
    },
    /// Write the signed distance field of a scenario.
    SdfDump {
        scenario: PathBuf,
        /// Planner configuration (TOML) giving the map resolution.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-check a solution file written by `plan`.
    Validate {
        solution: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

type Result<T> = std::result::Result<T, String>;

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_config(path: Option<&Path>) -> Result<PlanConfig> {
    match path {
        Some(p) => toml::from_str(&read(p)?).map_err(|e| format!("{}: {e}", p.display())),
        None => Ok(PlanConfig::default()),
    }
}

fn load_scenario(path: &Path) -> Result<Scenario> {
    Scenario::from_toml_str(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))
}

fn plan(scenario: &Path, robot: Option<&Path>, config: Option<&Path>, out: &Path, dt: f64) -> Result<bool> {
    let scenario = load_scenario(scenario)?;
    let cfg = load_config(config)?;
    let params = match robot {
        Some(p) => RobotParams::from_toml_str(&read(p)?).map_err(|e| format!("{}: {e}", p.display()))?,
        None => RobotParams::benchmark(scenario.n_trailers),
    };
    let result = run_plan(&scenario, &params, &cfg);
    fs::create_dir_all(out).map_err(|e| format!("{}: {e}", out.display()))?;
    let r = &result.report;
    write(&out.join("report.json"), &serde_json::to_string_pretty(r).map_err(|e| e.to_string())?)?;
    if let Some(path) = &result.path {
        write(&out.join("path.csv"), &path_csv(path).map_err(|e| e.to_string())?)?;
    }
    if let Some(traj) = &result.trajectory {
        write(&out.join("trajectory.csv"), &trajectory_csv(traj, &params, dt).map_err(|e| e.to_string())?)?;
        let sol = SolutionFile::new(&scenario, &params, traj);
        write(&out.join("solution.json"), &sol.to_json().map_err(|e| e.to_string())?)?;
    }
    match (&r.metrics, r.success) {
        (Some(m), true) => println!(
            "success: l_traj {:.3} m, t_d {:.3} s, mean |kappa| {:.4} 1/m, front end {:.1} ms, optimization {:.1} ms",
            m.l_traj, m.t_d, m.mean_kappa, r.front_end_ms, r.optimization_ms
        ),
        _ => println!("failed at {:?}: {}", r.failure_stage, r.message),
    }
    Ok(r.success)
}

fn bench(matrix: &Path, out: &Path, trials: Option<usize>, no_timings: bool) -> Result<()> {
    let mut m = BenchMatrix::from_toml_str(&read(matrix)?).map_err(|e| format!("{}: {e}", matrix.display()))?;
    if let Some(t) = trials {
        m.trials = t;
    }
    if no_timings {
        m.record_timings = false;
    }
    let result = run_bench(&m, |row| {
        eprintln!("N={} trial {} seed {}: {}", row.n_trailers, row.trial, row.seed, if row.success { "ok" } else { "fail" })
    });
    fs::create_dir_all(out).map_err(|e| format!("{}: {e}", out.display()))?;
    write(&out.join("trials.csv"), &result.rows_csv().map_err(|e| e.to_string())?)?;
    write(&out.join("cells.csv"), &result.cells_csv().map_err(|e| e.to_string())?)?;
    let table = result.table();
    write(&out.join("summary.txt"), &table)?;
    print!("{table}");
    Ok(())
}

fn sdf_dump(scenario: &Path, config: Option<&Path>, out: Option<&Path>) -> Result<()> {
    let scenario = load_scenario(scenario)?;
    let cfg = load_config(config)?;
    let grid = rasterize(&scenario.world, cfg.map_resolution).map_err(|e| e.to_string())?;
    let dump = build_sdf(&grid).to_dump();
    match out {
        Some(p) => write(p, &dump),
        None => {
            print!("{dump}");
            Ok(())
        }
    }
}

fn validate(solution: &Path, config: Option<&Path>) -> Result<bool> {
    let sol = SolutionFile::from_json(&read(solution)?).map_err(|e| format!("{}: {e}", solution.display()))?;
    let cfg = load_config(config)?;
    let traj = sol.trajectory().map_err(|e| e.to_string())?;
    let (metrics, feas) = validate_solution(&sol.scenario, &sol.robot, &traj, &cfg)?;
    println!("{}", serde_json::to_string_pretty(&serde_json::json!({ "metrics": metrics, "feasibility": feas })).map_err(|e| e.to_string())?);
    Ok(feas.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Plan { scenario, robot, config, out, dt } => plan(scenario, robot.as_deref(), config.as_deref(), out, *dt),
        Command::Bench { matrix, out, trials, no_timings } => bench(matrix, out, *trials, *no_timings).map(|_| true),
        Command::SdfDump { scenario, config, out } => sdf_dump(scenario, config.as_deref(), out.as_deref()).map(|_| true),
        Command::Validate { solution, config } => validate(solution, config.as_deref()),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
