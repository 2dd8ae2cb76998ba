//! Machine-readable run outputs: `summary.json` and the trajectory CSVs.
//!
//! CSV files carry one header row plus `2N + 1` data rows, full-precision
//! scientific notation, comma separators, LF line endings.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use hpmoc::numerics::Trajectory;

use crate::CliError;

/// Wall-clock phase timings in milliseconds. The only block of the
/// summary that varies between identical runs.
#[derive(Debug, Clone, Serialize)]
pub struct Timings {
    pub parse_ms: f64,
    pub solve_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_ms: Option<f64>,
    pub write_ms: f64,
}

/// Cross-validation block of a compare run.
#[derive(Debug, Clone, Serialize)]
pub struct OracleSummary {
    pub converged: bool,
    pub iterations: usize,
    pub sup_state_deviation: f64,
    pub cost_gap: f64,
}

/// Top-level contents of `summary.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub problem_name: String,
    pub grid_intervals: usize,
    pub epsilon: f64,
    pub achieved_order: usize,
    pub converged: bool,
    pub cost_history: Vec<f64>,
    pub cost_deltas: Vec<f64>,
    /// Per-order `[state, costate]` residual sup-norms of the partial sums.
    pub residuals: Vec<[f64; 2]>,
    pub timings_ms: Timings,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSummary>,
    pub exit_code: i32,
}

pub fn write_summary(path: &Path, summary: &RunSummary) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(summary).expect("summary serializes");
    std::fs::write(path, text + "\n").map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// `trajectories.csv`: `t, x₁..xₙ, λ₁..λₙ, u₁..uₘ, x_sim₁..x_simₙ`,
/// where the state/costate columns hold the series partial sums.
pub fn write_trajectories_csv(
    path: &Path,
    x_series: &Trajectory<f64>,
    lambda_series: &Trajectory<f64>,
    control: &Trajectory<f64>,
    x_sim: &Trajectory<f64>,
) -> Result<(), CliError> {
    let mut out = Vec::new();
    let n = x_series.dim();
    let m = control.dim();
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("x{i}")));
    header.extend((1..=n).map(|i| format!("lambda{i}")));
    header.extend((1..=m).map(|i| format!("u{i}")));
    header.extend((1..=n).map(|i| format!("x_sim{i}")));
    writeln!(out, "{}", header.join(",")).map_err(io_err(path))?;

    let grid = x_series.grid();
    for i in 0..grid.sample_count() {
        let mut row = vec![format!("{:.16e}", grid.sample_time(i))];
        row.extend(x_series.sample(i).iter().map(|v| format!("{v:.16e}")));
        row.extend(lambda_series.sample(i).iter().map(|v| format!("{v:.16e}")));
        row.extend(control.sample(i).iter().map(|v| format!("{v:.16e}")));
        row.extend(x_sim.sample(i).iter().map(|v| format!("{v:.16e}")));
        writeln!(out, "{}", row.join(",")).map_err(io_err(path))?;
    }
    std::fs::write(path, out).map_err(io_err(path))
}

/// `oracle_trajectories.csv`: the shooting solution in the same layout
/// minus the simulated-state block.
pub fn write_oracle_csv(
    path: &Path,
    x: &Trajectory<f64>,
    lambda: &Trajectory<f64>,
    control: &Trajectory<f64>,
) -> Result<(), CliError> {
    let mut out = Vec::new();
    let n = x.dim();
    let m = control.dim();
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("x{i}")));
    header.extend((1..=n).map(|i| format!("lambda{i}")));
    header.extend((1..=m).map(|i| format!("u{i}")));
    writeln!(out, "{}", header.join(",")).map_err(io_err(path))?;

    let grid = x.grid();
    for i in 0..grid.sample_count() {
        let mut row = vec![format!("{:.16e}", grid.sample_time(i))];
        row.extend(x.sample(i).iter().map(|v| format!("{v:.16e}")));
        row.extend(lambda.sample(i).iter().map(|v| format!("{v:.16e}")));
        row.extend(control.sample(i).iter().map(|v| format!("{v:.16e}")));
        writeln!(out, "{}", row.join(",")).map_err(io_err(path))?;
    }
    std::fs::write(path, out).map_err(io_err(path))
}
