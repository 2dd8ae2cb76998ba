//! Library backing the `hpmoc` binary: problem-file ingestion, the solve
//! and compare pipelines, and the machine-readable output writers.

// Negated float comparisons like `!(x > y)` reject NaN by design.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod file;
pub mod output;
pub mod run;

pub use file::{parse_problem, spacecraft_file, write_problem_file, ParsedProblem, ProblemFile};
pub use output::{OracleSummary, RunSummary, Timings};
pub use run::{run_compare, run_solve, RunArtifacts};

use std::path::PathBuf;

use thiserror::Error;

/// Exit code: converged solve.
pub const EXIT_OK: i32 = 0;
/// Exit code: input or solver error.
pub const EXIT_ERROR: i32 = 1;
/// Exit code: the order cap was exhausted before convergence.
pub const EXIT_EXHAUSTED: i32 = 2;
/// Exit code: the shooting oracle failed to converge (compare only).
pub const EXIT_ORACLE: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    /// JSON syntax or shape error with its document location.
    #[error("{path}: syntax error at line {line}, column {column}: {message}")]
    Syntax {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    /// Validation failures, one field-addressed line each.
    #[error("invalid problem file:\n{}", issues.join("\n"))]
    Invalid { issues: Vec<String> },

    #[error("solver error: {0}")]
    Solver(#[from] hpmoc::Error),
}
