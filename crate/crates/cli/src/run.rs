//! The solve and compare pipelines behind the CLI subcommands.

use std::path::Path;
use std::time::Instant;

use hpmoc::hpm::{control_from_costate, evaluate_cost, solve_hpm, HpmSolution};
use hpmoc::numerics::Grid;
use hpmoc::oracle::shooting_solve;
use hpmoc::tpbvp::residual_norm;

use crate::file::ParsedProblem;
use crate::output::{
    write_oracle_csv, write_summary, write_trajectories_csv, OracleSummary, RunSummary, Timings,
};
use crate::{CliError, EXIT_EXHAUSTED, EXIT_OK, EXIT_ORACLE};

/// Result of a pipeline run: the summary written to disk plus the
/// process exit code it implies.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub exit_code: i32,
    pub summary: RunSummary,
}

/// Prepares the output directory, failing before any solving happens.
fn prepare_out_dir(out_dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out_dir).map_err(|source| CliError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    // Probe writability now rather than after a long solve.
    let probe = out_dir.join("summary.json");
    std::fs::File::create(&probe).map_err(|source| CliError::Io {
        path: probe.clone(),
        source,
    })?;
    Ok(())
}

/// Solution, per-order `[state, costate]` residuals, and solve time.
type PipelineOutput = (HpmSolution<f64>, Vec<[f64; 2]>, f64);

fn solve_pipeline(parsed: &ParsedProblem, parse_ms: f64) -> Result<PipelineOutput, CliError> {
    let started = Instant::now();
    let solution = solve_hpm(&parsed.problem, &parsed.config).map_err(|failure| {
        if let Some(partial) = &failure.partial {
            eprintln!(
                "solver failed at order {}; completed cost history: {:?}",
                partial.achieved_order + 1,
                partial.cost_history
            );
        }
        CliError::Solver(failure.error)
    })?;
    let solve_ms = started.elapsed().as_secs_f64() * 1e3;

    let mut problem = parsed.problem.clone();
    problem.jacobian_transpose = parsed.config.jacobian_transpose;
    let mut residuals = Vec::with_capacity(solution.achieved_order + 1);
    for order in 0..=solution.achieved_order {
        let (x, lambda) = solution.partial_sums(order)?;
        let (r1, r2) = residual_norm(&problem, &x, &lambda)?;
        residuals.push([r1, r2]);
    }
    let _ = parse_ms;
    Ok((solution, residuals, solve_ms))
}

/// `solve`: run the driver, write `trajectories.csv` and `summary.json`.
///
/// Exit 0 on convergence, 2 when the order cap was exhausted; input and
/// solver errors surface as `Err` (exit 1).
pub fn run_solve(
    parsed: &ParsedProblem,
    parse_ms: f64,
    out_dir: &Path,
) -> Result<RunArtifacts, CliError> {
    prepare_out_dir(out_dir)?;
    let (solution, residuals, solve_ms) = solve_pipeline(parsed, parse_ms)?;

    let write_started = Instant::now();
    let (x_series, lambda_series) = solution.partial_sums(solution.achieved_order)?;
    write_trajectories_csv(
        &out_dir.join("trajectories.csv"),
        &x_series,
        &lambda_series,
        &solution.control,
        &solution.simulated_state,
    )?;
    let write_ms = write_started.elapsed().as_secs_f64() * 1e3;

    let exit_code = if solution.converged {
        EXIT_OK
    } else {
        EXIT_EXHAUSTED
    };
    let summary = RunSummary {
        problem_name: parsed.name.clone(),
        grid_intervals: parsed.config.grid_intervals,
        epsilon: parsed.config.epsilon,
        achieved_order: solution.achieved_order,
        converged: solution.converged,
        cost_history: solution.cost_history.clone(),
        cost_deltas: solution.cost_deltas(),
        residuals,
        timings_ms: Timings {
            parse_ms,
            solve_ms,
            oracle_ms: None,
            write_ms,
        },
        oracle: None,
        exit_code,
    };
    write_summary(&out_dir.join("summary.json"), &summary)?;
    Ok(RunArtifacts { exit_code, summary })
}

/// `compare`: run the driver plus the shooting oracle, write both
/// trajectory sets and the cross-validation block.
///
/// Exit 3 when the oracle fails to converge; otherwise as `solve`.
pub fn run_compare(
    parsed: &ParsedProblem,
    parse_ms: f64,
    out_dir: &Path,
) -> Result<RunArtifacts, CliError> {
    prepare_out_dir(out_dir)?;
    let (solution, residuals, solve_ms) = solve_pipeline(parsed, parse_ms)?;

    let mut problem = parsed.problem.clone();
    problem.jacobian_transpose = parsed.config.jacobian_transpose;
    let grid = Grid::new(problem.t0, problem.tf, parsed.config.grid_intervals)?;
    let (x_series, lambda_series) = solution.partial_sums(solution.achieved_order)?;

    let oracle_started = Instant::now();
    let warm_start: Vec<f64> = lambda_series.sample(0).to_vec();
    let report = shooting_solve(&problem, &grid, Some(&warm_start))?;
    let (sup_state_deviation, cost_gap) = if report.converged {
        let deviation = x_series.max_abs_diff(&report.x)?;
        let u_oracle = control_from_costate(&problem, &report.lambda)?;
        let (_, j_oracle) = evaluate_cost(&problem, &u_oracle)?;
        let j_hpm = *solution.cost_history.last().expect("at least order 0");
        (deviation, (j_hpm - j_oracle).abs())
    } else {
        (f64::INFINITY, f64::INFINITY)
    };
    let oracle_ms = oracle_started.elapsed().as_secs_f64() * 1e3;

    let write_started = Instant::now();
    write_trajectories_csv(
        &out_dir.join("trajectories.csv"),
        &x_series,
        &lambda_series,
        &solution.control,
        &solution.simulated_state,
    )?;
    let u_oracle = control_from_costate(&problem, &report.lambda)?;
    write_oracle_csv(
        &out_dir.join("oracle_trajectories.csv"),
        &report.x,
        &report.lambda,
        &u_oracle,
    )?;
    let write_ms = write_started.elapsed().as_secs_f64() * 1e3;

    let exit_code = if !report.converged {
        EXIT_ORACLE
    } else if solution.converged {
        EXIT_OK
    } else {
        EXIT_EXHAUSTED
    };
    let summary = RunSummary {
        problem_name: parsed.name.clone(),
        grid_intervals: parsed.config.grid_intervals,
        epsilon: parsed.config.epsilon,
        achieved_order: solution.achieved_order,
        converged: solution.converged,
        cost_history: solution.cost_history.clone(),
        cost_deltas: solution.cost_deltas(),
        residuals,
        timings_ms: Timings {
            parse_ms,
            solve_ms,
            oracle_ms: Some(oracle_ms),
            write_ms,
        },
        oracle: Some(OracleSummary {
            converged: report.converged,
            iterations: report.iterations,
            sup_state_deviation,
            cost_gap,
        }),
        exit_code,
    };
    write_summary(&out_dir.join("summary.json"), &summary)?;
    Ok(RunArtifacts { exit_code, summary })
}
