use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use hpmoc_cli::file::{parse_problem, spacecraft_file, write_problem_file, ParsedProblem};
use hpmoc_cli::run::{run_compare, run_solve};
use hpmoc_cli::{CliError, EXIT_ERROR, EXIT_OK};

/// Suboptimal control of nonlinear quadratic optimal control problems
/// with polynomial dynamics.
#[derive(Parser)]
#[command(name = "hpmoc", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a problem file and write trajectories.csv + summary.json.
    Solve(SolveArgs),
    /// Solve and cross-validate against the shooting oracle.
    Compare(SolveArgs),
    /// Parse and validate a problem file without solving.
    Validate {
        /// Problem file to check.
        #[arg(long)]
        problem: PathBuf,
    },
    /// Write a bundled problem file.
    Preset {
        #[command(subcommand)]
        which: PresetCommand,
    },
}

#[derive(Subcommand)]
enum PresetCommand {
    /// The rigid-spacecraft detumbling benchmark.
    Spacecraft {
        /// Directory to write spacecraft.json into.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct SolveArgs {
    /// Problem file (JSON).
    #[arg(long)]
    problem: PathBuf,
    /// Override the cost-difference stopping tolerance ε.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Override the series order cap.
    #[arg(long)]
    max_order: Option<usize>,
    /// Override the grid interval count N.
    #[arg(long)]
    grid: Option<usize>,
    /// Override the costate coupling convention.
    #[arg(long)]
    jacobian_transpose: Option<bool>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

fn load(args: &SolveArgs) -> Result<(ParsedProblem, f64), CliError> {
    let started = Instant::now();
    let mut parsed = parse_problem(&args.problem)?;
    if let Some(eps) = args.epsilon {
        parsed.config.epsilon = eps;
    }
    if let Some(cap) = args.max_order {
        parsed.config.max_order = cap;
    }
    if let Some(grid) = args.grid {
        parsed.config.grid_intervals = grid;
    }
    if let Some(transpose) = args.jacobian_transpose {
        parsed.config.jacobian_transpose = transpose;
        parsed.problem.jacobian_transpose = transpose;
    }
    parsed.config.validate()?;
    Ok((parsed, started.elapsed().as_secs_f64() * 1e3))
}

fn dispatch(cli: Cli) -> i32 {
    match cli.command {
        Command::Solve(args) => {
            match load(&args).and_then(|(p, ms)| run_solve(&p, ms, &args.out)) {
                Ok(artifacts) => {
                    report(&artifacts.summary);
                    artifacts.exit_code
                }
                Err(e) => fail(e),
            }
        }
        Command::Compare(args) => {
            match load(&args).and_then(|(p, ms)| run_compare(&p, ms, &args.out)) {
                Ok(artifacts) => {
                    report(&artifacts.summary);
                    artifacts.exit_code
                }
                Err(e) => fail(e),
            }
        }
        Command::Validate { problem } => match parse_problem(&problem) {
            Ok(parsed) => {
                println!(
                    "{}: valid ({} states, {} controls, horizon [{}, {}])",
                    parsed.name,
                    parsed.problem.state_dim(),
                    parsed.problem.control_dim(),
                    parsed.problem.t0,
                    parsed.problem.tf
                );
                EXIT_OK
            }
            Err(e) => fail(e),
        },
        Command::Preset { which } => match which {
            PresetCommand::Spacecraft { out } => {
                if let Err(e) = std::fs::create_dir_all(&out) {
                    return fail(CliError::Io {
                        path: out.clone(),
                        source: e,
                    });
                }
                let path = out.join("spacecraft.json");
                match write_problem_file(&spacecraft_file(), &path) {
                    Ok(()) => {
                        println!("{}", path.display());
                        EXIT_OK
                    }
                    Err(e) => fail(e),
                }
            }
        },
    }
}

fn report(summary: &hpmoc_cli::RunSummary) {
    println!(
        "{}: {} at order {} (J = {:.9e}, final delta = {:.3e})",
        summary.problem_name,
        if summary.converged {
            "converged"
        } else {
            "order cap exhausted"
        },
        summary.achieved_order,
        summary.cost_history.last().copied().unwrap_or(f64::NAN),
        summary.cost_deltas.last().copied().unwrap_or(f64::NAN),
    );
    if let Some(oracle) = &summary.oracle {
        println!(
            "oracle: converged = {}, iterations = {}, state deviation = {:.3e}, cost gap = {:.3e}",
            oracle.converged, oracle.iterations, oracle.sup_state_deviation, oracle.cost_gap
        );
    }
}

fn fail(e: CliError) -> i32 {
    eprintln!("error: {e}");
    EXIT_ERROR
}

fn main() -> ExitCode {
    // Input errors (including argv misuse) exit 1; --help/--version exit 0.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprint!("{e}");
            return ExitCode::from(EXIT_ERROR as u8);
        }
    };
    ExitCode::from(dispatch(cli) as u8)
}
