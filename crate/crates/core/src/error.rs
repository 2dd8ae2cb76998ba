//! Error types shared by every solver module.

use thiserror::Error;

use crate::problem::ValidationIssue;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Shapes, lengths, or grids do not line up.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Gaussian elimination met a pivot below the singularity threshold.
    #[error("singular matrix in {context}: pivot {pivot:e} below threshold {threshold:e}")]
    Singular {
        context: &'static str,
        pivot: f64,
        threshold: f64,
    },

    /// A matrix required to be symmetric is not (within tolerance).
    #[error("matrix is not symmetric: {0}")]
    NotSymmetric(&'static str),

    /// A matrix required to be positive definite is not.
    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(&'static str),

    /// The state/costate coupling block of the transition matrix is
    /// singular: the linear boundary problem has no unique solution on
    /// this horizon and the decomposition cannot proceed.
    #[error(
        "boundary system singular: the state/costate transition block is not \
         invertible on this horizon"
    )]
    BoundarySystemSingular,

    /// The solved trajectory misses the terminal boundary condition by
    /// more than the contract tolerance.
    #[error(
        "boundary residual {achieved:e} exceeds tolerance {tolerance:e}; \
         use a finer grid"
    )]
    Accuracy { achieved: f64, tolerance: f64 },

    /// Series terms were requested out of order.
    #[error("series sequencing error: {0}")]
    Sequencing(String),

    /// Forward simulation left the trusted state region.
    #[error("state diverged (norm above {limit:e}) near t = {time}")]
    Divergence { time: f64, limit: f64 },

    /// The analytic scalar reference has a zero coupling coefficient on
    /// this horizon.
    #[error("degenerate horizon: zero state/costate coupling in the closed form")]
    DegenerateHorizon,

    /// Problem validation failed; all violations are listed.
    #[error("invalid problem: {}", format_issues(.0))]
    InvalidProblem(Vec<ValidationIssue>),

    /// Solver configuration violates its invariants.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

fn format_issues(issues: &[ValidationIssue]) -> String {
    issues
        .iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
