//! Suboptimal feedback-free control of nonlinear systems with polynomial
//! dynamics and a quadratic performance index.
//!
//! The Pontryagin necessary conditions for the problem class handled here
//! form a nonlinear two-point boundary value problem. This crate solves it
//! by embedding the TPBVP in a one-parameter family that connects a linear
//! time-invariant TPBVP to the original problem, expanding the solution as
//! a power series in the embedding parameter, and solving one linear
//! time-invariant TPBVP per series order. Truncating the costate series
//! yields a suboptimal open-loop control whose cost is evaluated on the
//! true nonlinear plant; iteration stops once consecutive costs agree to a
//! user tolerance.
//!
//! Module map:
//! - [`numerics`]: dense small-matrix linear algebra, matrix exponential,
//!   staggered-grid RK4 integration, Simpson quadrature
//! - [`problem`]: problem definition (matrices, sparse polynomial vector
//!   field, boundary data) and validation
//! - [`series`]: truncated power-series arithmetic in the embedding
//!   parameter and extraction of the per-order forcing terms
//! - [`tpbvp`]: linear time-invariant TPBVP solver and nonlinear residual
//!   evaluation
//! - [`hpm`]: the order-by-order solve / control-synthesis / cost-check
//!   driver
//! - [`oracle`]: independent checks — nonlinear plant simulation, a
//!   single-shooting solver for the full nonlinear TPBVP, and an analytic
//!   scalar LQ reference
//! - [`spacecraft`]: the built-in rigid-spacecraft benchmark problem
//!
//! All solver math is generic over the floating-point scalar via [`Real`];
//! concrete `f64` aliases are provided at the crate root.

// Negated float comparisons like `!(x > y)` are deliberate: they treat
// NaN as a failure instead of silently passing it through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive};

pub mod error;
pub mod hpm;
pub mod numerics;
pub mod oracle;
pub mod problem;
pub mod series;
pub mod spacecraft;
pub mod tpbvp;

pub use error::{Error, Result};

/// Floating-point scalar for all solver math: `f32` or `f64`.
pub trait Real:
    Float
    + FromPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum<Self>
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
}

impl<T> Real for T where
    T: Float
        + FromPrimitive
        + AddAssign
        + SubAssign
        + MulAssign
        + DivAssign
        + Sum<Self>
        + Debug
        + Display
        + Send
        + Sync
        + 'static
{
}

/// Lifts an `f64` constant into the scalar type.
pub(crate) fn real<T: Real>(v: f64) -> T {
    T::from_f64(v).expect("f64 constant representable in scalar type")
}

pub type Matrix64 = numerics::Matrix<f64>;
pub type Grid64 = numerics::Grid<f64>;
pub type Trajectory64 = numerics::Trajectory<f64>;
pub type OcpProblem64 = problem::OcpProblem<f64>;
pub type PolyVectorField64 = problem::PolyVectorField<f64>;
pub type HpmConfig64 = hpm::HpmConfig<f64>;
pub type HpmSolution64 = hpm::HpmSolution<f64>;
pub type ShootingReport64 = oracle::ShootingReport<f64>;
