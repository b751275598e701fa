//! Run artifacts: trajectory, report, plot series and the manifest tying them together.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use rendezvous::io::{plot_series, report_json, trajectory_csv};
use rendezvous::scenarios::{RunConfig, ScenarioSummary};
use rendezvous::trajopt::{Solution, SolverOptions, SolverStatus, Weights};

use crate::CliError;

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const REPORT_FILE: &str = "report.json";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const PLOT_DIR: &str = "plots";

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub status: SolverStatus,
    /// Time after manoeuvre start until the vertical error is within 0.1 m, s.
    pub rendezvous_time: Option<f64>,
    pub predicted_time: f64,
    pub final_cost: f64,
    pub tracking_cost: f64,
    pub iterations: usize,
    pub worst_residual: f64,
    pub max_defect: f64,
    pub active_constraints: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    /// Seconds since the Unix epoch; `SOURCE_DATE_EPOCH` overrides the clock.
    pub timestamp: u64,
    pub scenario: ScenarioSummary,
    pub weights: Weights,
    pub solver: SolverOptions,
    pub seed: u64,
    /// Output files relative to the run directory.
    pub files: Vec<String>,
    pub summary: Summary,
}

fn timestamp() -> u64 {
    if let Some(t) = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|s| s.parse().ok()) {
        return t;
    }
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn summary(solution: &Solution) -> Summary {
    let r = &solution.report;
    Summary {
        status: r.status,
        rendezvous_time: r.rendezvous_time,
        predicted_time: r.predicted_time,
        final_cost: r.final_cost,
        tracking_cost: r.tracking_cost,
        iterations: r.iterations,
        worst_residual: r.worst_residual,
        max_defect: r.max_defect,
        active_constraints: r.active_constraints().into_iter().map(String::from).collect(),
    }
}

/// Write all artifacts of one solve into `dir` and return the manifest.
pub fn write_run(dir: &Path, config: &RunConfig, seed: u64, solution: &Solution) -> Result<RunManifest, CliError> {
    create_dir(&dir.join(PLOT_DIR))?;
    let mut files = Vec::new();
    let mut emit = |rel: PathBuf, contents: &str| -> Result<(), CliError> {
        write_file(&dir.join(&rel), contents)?;
        files.push(rel.to_string_lossy().replace('\\', "/"));
        Ok(())
    };
    emit(
        PathBuf::from(TRAJECTORY_FILE),
        &trajectory_csv(&solution.model, &solution.trajectory)?,
    )?;
    emit(PathBuf::from(REPORT_FILE), &report_json(&solution.report)?)?;
    for (name, contents) in plot_series(solution)? {
        emit(Path::new(PLOT_DIR).join(name), &contents)?;
    }

    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        timestamp: timestamp(),
        scenario: config.scenario.summary(),
        weights: config.weights,
        solver: config.solver,
        seed,
        files,
        summary: summary(solution),
    };
    let text = serde_json::to_string_pretty(&manifest)?;
    write_file(&dir.join(MANIFEST_FILE), &text)?;
    Ok(manifest)
}
