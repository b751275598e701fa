//! `rendezvous`: solve, sweep, predict and validate UAV–UGV rendezvous trajectories.

mod output;

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use rendezvous::guidance::DesiredProfiles;
use rendezvous::scenarios::{load_config, preset, RunConfig};
use rendezvous::trajopt::{solve, SolverOptions, SolverStatus, Weights};
use rendezvous::validation::{run_all, ValidationOptions};

const THREADS_ENV: &str = "RENDEZVOUS_NUM_THREADS";
const SWEEP_SUMMARY: &str = "sweep_summary.csv";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] rendezvous::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("JSON encoding failed: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Usage(String),
}

#[derive(Parser)]
#[command(name = "rendezvous", version, about = "Optimal UAV landing trajectories onto a moving ground vehicle")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one rendezvous problem and write trajectory, report and manifest.
    Solve(SolveArgs),
    /// Print the closed-form desired descent angle, rendezvous distance and time.
    Predict(PredictArgs),
    /// Solve for several aggressiveness indices and summarise the results.
    Sweep(SweepArgs),
    /// Run the model and solver invariant suites.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct ScenarioArgs {
    /// `straight`, `turn90` or `file:PATH` to a JSON configuration.
    #[arg(long, default_value = "straight")]
    scenario: String,
}

#[derive(Args)]
struct SolverArgs {
    /// Newton iterations per barrier stage.
    #[arg(long)]
    max_newton: Option<usize>,
    /// Stationarity tolerance of the final barrier stage.
    #[arg(long)]
    grad_tol: Option<f64>,
    /// Grid step, s.
    #[arg(long)]
    step: Option<f64>,
    /// Recorded in the manifest; the solve itself is deterministic.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Aggressiveness index in [0, 1]; overrides the configuration.
    #[arg(long, allow_negative_numbers = true)]
    k_aggr: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct PredictArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Comma-separated aggressiveness indices.
    #[arg(long, value_delimiter = ',', default_value = "0,0.25,0.5,0.75,1", allow_negative_numbers = true)]
    k_aggr: Vec<f64>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Comma-separated aggressiveness indices.
    #[arg(long, value_delimiter = ',', default_value = "0,0.25,0.5,0.75,1", allow_negative_numbers = true)]
    k_aggr: Vec<f64>,
    /// Output directory; each index gets its own `k_<value>` subdirectory.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct ValidateArgs {
    /// Relative tolerance of the finite-difference linearization check.
    #[arg(long, default_value_t = ValidationOptions::default().fd_tol)]
    fd_tol: f64,
    /// Seed of the randomized suites.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write the results as JSON to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load(scenario: &str) -> Result<RunConfig, CliError> {
    if let Some(path) = scenario.strip_prefix("file:") {
        let path = PathBuf::from(path);
        let text = std::fs::read_to_string(&path).map_err(|source| CliError::Io { path, source })?;
        return Ok(load_config(&text)?);
    }
    Ok(RunConfig {
        scenario: preset(scenario)?,
        weights: Weights::default(),
        solver: SolverOptions::default(),
    })
}

fn configure(scenario: &ScenarioArgs, k_aggr: Option<f64>, flags: &SolverArgs) -> Result<RunConfig, CliError> {
    let mut cfg = load(&scenario.scenario)?;
    if let Some(k) = k_aggr {
        cfg.scenario.spec.k_aggr = k;
    }
    cfg.scenario.validate()?;
    let s = &mut cfg.solver;
    s.max_newton = flags.max_newton.unwrap_or(s.max_newton);
    s.grad_tol = flags.grad_tol.unwrap_or(s.grad_tol);
    s.step = flags.step.unwrap_or(s.step);
    s.validate()?;
    Ok(cfg)
}

fn status_code(status: SolverStatus) -> ExitCode {
    match status {
        SolverStatus::Converged => ExitCode::SUCCESS,
        SolverStatus::MaxIterations | SolverStatus::Stalled => ExitCode::from(2),
    }
}

fn fmt_time(t: Option<f64>) -> String {
    t.map_or_else(|| "none".to_string(), |t| format!("{t:.2} s"))
}

fn cmd_solve(args: &SolveArgs) -> Result<ExitCode, CliError> {
    let cfg = configure(&args.scenario, args.k_aggr, &args.solver)?;
    output::create_dir(&args.out)?;
    let solution = solve(&cfg.scenario, &cfg.weights, &cfg.solver)?;
    let manifest = output::write_run(&args.out, &cfg, args.solver.seed, &solution)?;
    let s = &manifest.summary;
    println!("status           {:?}", s.status);
    println!("rendezvous time  {}", fmt_time(s.rendezvous_time));
    println!("predicted time   {:.2} s", s.predicted_time);
    println!("iterations       {}", s.iterations);
    println!("final cost       {:.6e}", s.final_cost);
    println!("worst residual   {:.3e}", s.worst_residual);
    println!("active           {}", s.active_constraints.join(", "));
    println!("output           {}", args.out.display());
    Ok(status_code(s.status))
}

fn cmd_predict(args: &PredictArgs) -> Result<ExitCode, CliError> {
    let cfg = load(&args.scenario.scenario)?;
    let sc = &cfg.scenario;
    let mut table = format!("{:>6} {:>14} {:>10} {:>10}\n", "k", "gamma_d[deg]", "s_r[m]", "T_r^d[s]");
    for &k in &args.k_aggr {
        let mut spec = sc.spec;
        spec.k_aggr = k;
        spec.validate(&sc.limits)?;
        let p = DesiredProfiles::new(&spec, &sc.params, &sc.limits)?;
        let _ = writeln!(table, "{k:>6} {:>14.6} {:>10.2} {:>10.2}", p.gamma_d.to_degrees(), p.s_r, p.t_r);
    }
    print!("{table}");
    Ok(ExitCode::SUCCESS)
}

struct SweepRow {
    k: f64,
    predicted: f64,
    achieved: Option<f64>,
    iterations: usize,
    worst_residual: f64,
    status: Option<SolverStatus>,
}

fn sweep_one(args: &SweepArgs, k: f64) -> Result<SweepRow, CliError> {
    let cfg = configure(&args.scenario, Some(k), &args.solver)?;
    let dir = args.out.join(format!("k_{k}"));
    output::create_dir(&dir)?;
    let solution = solve(&cfg.scenario, &cfg.weights, &cfg.solver)?;
    let m = output::write_run(&dir, &cfg, args.solver.seed, &solution)?;
    Ok(SweepRow {
        k,
        predicted: m.summary.predicted_time,
        achieved: m.summary.rendezvous_time,
        iterations: m.summary.iterations,
        worst_residual: m.summary.worst_residual,
        status: Some(m.summary.status),
    })
}

fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got `{v}`")))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| CliError::Usage(e.to_string()))
}

fn cmd_sweep(args: &SweepArgs) -> Result<ExitCode, CliError> {
    if args.k_aggr.is_empty() {
        return Err(CliError::Usage("--k-aggr needs at least one value".into()));
    }
    // reject bad flags before any solve starts
    for &k in &args.k_aggr {
        configure(&args.scenario, Some(k), &args.solver)?;
    }
    output::create_dir(&args.out)?;
    let pool = thread_pool()?;
    let rows: Vec<SweepRow> = pool.install(|| {
        args.k_aggr
            .par_iter()
            .map(|&k| {
                sweep_one(args, k).unwrap_or_else(|e| {
                    eprintln!("k = {k}: {e}");
                    SweepRow {
                        k,
                        predicted: f64::NAN,
                        achieved: None,
                        iterations: 0,
                        worst_residual: f64::NAN,
                        status: None,
                    }
                })
            })
            .collect()
    });

    let mut csv = String::from("k[-],T_pred[s],T_achieved[s],iterations[-],worst_residual[-]\n");
    let mut all_ok = true;
    println!("{:>6} {:>10} {:>12} {:>6} {:>12}  status", "k", "T_pred[s]", "T_achieved[s]", "iters", "worst");
    for r in &rows {
        let achieved = r.achieved.unwrap_or(f64::NAN);
        let _ = writeln!(csv, "{},{},{},{},{}", r.k, r.predicted, achieved, r.iterations, r.worst_residual);
        let status = r.status.map_or("failed".to_string(), |s| format!("{s:?}"));
        println!(
            "{:>6} {:>10.2} {:>12.2} {:>6} {:>12.3e}  {status}",
            r.k, r.predicted, achieved, r.iterations, r.worst_residual
        );
        all_ok &= r.status == Some(SolverStatus::Converged);
    }
    output::write_file(&args.out.join(SWEEP_SUMMARY), &csv)?;
    Ok(if all_ok { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn cmd_validate(args: &ValidateArgs) -> Result<ExitCode, CliError> {
    let results = run_all(&ValidationOptions {
        fd_tol: args.fd_tol,
        seed: args.seed,
    });
    for r in &results {
        let tag = if r.passed { "PASS" } else { "FAIL" };
        println!("{tag} {:<24} {:>11.3e} (tol {:.1e})  {}", r.name, r.value, r.tolerance, r.detail);
    }
    if let Some(path) = &args.out {
        output::write_file(path, &serde_json::to_string_pretty(&results)?)?;
    }
    let failed: Vec<&str> = results.iter().filter(|r| !r.passed).map(|r| r.name).collect();
    if failed.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("failing suites: {}", failed.join(", "));
        Ok(ExitCode::from(1))
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Validate(a) => cmd_validate(a),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(1)
    })
}
