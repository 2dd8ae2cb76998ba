//! Built-in benchmark: minimum-energy detumbling of a rigid asymmetric
//! spacecraft over a 100-second horizon.
//!
//! The states are the body-frame angular velocities, the controls are the
//! three axis torques, and the gyroscopic coupling supplies the quadratic
//! nonlinearity:
//!
//! ```text
//! ω̇₁ = -((I₃-I₂)/I₁)·ω₂ω₃ + u₁/I₁
//! ω̇₂ = -((I₁-I₃)/I₂)·ω₁ω₃ + u₂/I₂
//! ω̇₃ = -((I₂-I₁)/I₃)·ω₁ω₂ + u₃/I₃
//! ```
//!
//! with `ω(0) = (0.01, 0.005, 0.001) rad/s`, `ω(100) = 0`, and cost
//! `½∫(u₁² + u₂² + u₃²) dt`.

use crate::hpm::HpmConfig;
use crate::numerics::Matrix;
use crate::problem::{Monomial, OcpProblem, PolyVectorField};
use crate::{real, Real};

/// Principal moments of inertia in kg·m².
pub const INERTIAS: [f64; 3] = [86.24, 85.07, 113.59];

/// Initial angular velocities in rad/s.
pub const OMEGA0: [f64; 3] = [0.01, 0.005, 0.001];

/// Maneuver duration in seconds.
pub const HORIZON: f64 = 100.0;

/// The benchmark problem instance.
pub fn problem<T: Real>() -> OcpProblem<T> {
    let [i1, i2, i3] = INERTIAS;
    let b = Matrix::diagonal(&[real::<T>(1.0 / i1), real(1.0 / i2), real(1.0 / i3)]);
    let f = PolyVectorField::new(
        3,
        vec![
            vec![Monomial::new(real(-(i3 - i2) / i1), vec![0, 1, 1])],
            vec![Monomial::new(real(-(i1 - i3) / i2), vec![1, 0, 1])],
            vec![Monomial::new(real(-(i2 - i1) / i3), vec![1, 1, 0])],
        ],
    )
    .expect("benchmark field is well-formed");

    OcpProblem::new(
        Matrix::zeros(3, 3),
        b,
        Matrix::zeros(3, 3),
        Matrix::identity(3),
        f,
        T::zero(),
        real(HORIZON),
        OMEGA0.iter().map(|&w| real(w)).collect(),
        vec![T::zero(); 3],
    )
}

/// Solver settings the benchmark is normally run with.
pub fn config<T: Real>() -> HpmConfig<T> {
    HpmConfig {
        epsilon: real(1e-12),
        max_order: 10,
        grid_intervals: 1000,
        jacobian_transpose: true,
    }
}
