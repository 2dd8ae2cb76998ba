//! Nonhomogeneous linear time-invariant TPBVP solves — the building block
//! the series recursion calls once per order — plus residual evaluation
//! of the full nonlinear boundary value problem.
//!
//! The linear subproblem is `ż = Hz + g(t)` with the state fixed at both
//! ends and the costate free. The unknown initial costate is recovered
//! from one matrix exponential: with `Φ = e^{H(tf-t0)}` partitioned into
//! `n×n` blocks and `w` the forced response from a zero initial state,
//! the terminal condition reads `Φ₁₁a + Φ₁₂λ(t0) + w_x(tf) = b`, which is
//! a single dense solve against `Φ₁₂`.

use crate::error::{Error, Result};
use crate::numerics::{
    mat_exp, rk4_integrate, solve_linear_in, spd_solve, Grid, Matrix, Trajectory,
};
use crate::problem::{differentiate, eval_field_into, OcpProblem};
use crate::{real, Real};

/// Relative tolerance on the terminal boundary residual of a successful
/// linear TPBVP solve.
pub const BOUNDARY_REL_TOL: f64 = 1e-8;

/// The composite matrix of the linear TPBVP dynamics,
/// `H = [[A, -BR⁻¹Bᵀ], [-Q, -Aᵀ]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianSystem<T> {
    matrix: Matrix<T>,
    state_dim: usize,
}

impl<T: Real> HamiltonianSystem<T> {
    pub fn matrix(&self) -> &Matrix<T> {
        &self.matrix
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }
}

/// Assembles the Hamiltonian system of a problem. `R⁻¹` is applied via a
/// Cholesky solve; the off-diagonal blocks are symmetrized so the block
/// invariants hold exactly.
pub fn build_hamiltonian<T: Real>(p: &OcpProblem<T>) -> Result<HamiltonianSystem<T>> {
    let n = p.state_dim();
    if !p.a.is_square() || p.b.rows() != n || p.q.rows() != n || p.q.cols() != n {
        return Err(Error::Dimension(
            "build_hamiltonian: inconsistent A/B/Q dimensions".to_string(),
        ));
    }
    // S = B R⁻¹ Bᵀ from R X = Bᵀ.
    let x = spd_solve(&p.r, &p.b.transpose(), "build_hamiltonian: R")?;
    let s = p.b.matmul(&x)?;
    let s = s.add(&s.transpose())?.scale(real(0.5));

    let mut h = Matrix::zeros(2 * n, 2 * n);
    h.set_block(0, 0, &p.a);
    h.set_block(0, n, &s.scale(-T::one()));
    h.set_block(n, 0, &p.q.scale(-T::one()));
    h.set_block(n, n, &p.a.transpose().scale(-T::one()));
    Ok(HamiltonianSystem {
        matrix: h,
        state_dim: n,
    })
}

/// One linear time-invariant TPBVP instance: dynamics, optional forcing
/// sampled on the solve grid, and the fixed endpoint states.
#[derive(Debug, Clone)]
pub struct LinearTpbvp<T> {
    pub system: HamiltonianSystem<T>,
    pub forcing: Option<Trajectory<T>>,
    pub boundary_initial: Vec<T>,
    pub boundary_final: Vec<T>,
    pub grid: Grid<T>,
}

/// Solves the linear TPBVP, returning the state and costate trajectories.
///
/// Fails with [`Error::BoundarySystemSingular`] when `Φ₁₂` is not
/// invertible and with [`Error::Accuracy`] when the integrated terminal
/// state misses the boundary value by more than
/// `1e-8 · max(1, ‖b‖∞)` — the cure for the latter is a finer grid.
pub fn solve_linear_tpbvp<T: Real>(
    prob: &LinearTpbvp<T>,
) -> Result<(Trajectory<T>, Trajectory<T>)> {
    let n = prob.system.state_dim();
    let h = prob.system.matrix();
    if prob.boundary_initial.len() != n || prob.boundary_final.len() != n {
        return Err(Error::Dimension(format!(
            "boundary vectors of lengths {} and {}, expected {n}",
            prob.boundary_initial.len(),
            prob.boundary_final.len()
        )));
    }
    if let Some(g) = &prob.forcing {
        if g.dim() != 2 * n {
            return Err(Error::Dimension(format!(
                "forcing dimension {} does not match 2n = {}",
                g.dim(),
                2 * n
            )));
        }
        if g.grid() != &prob.grid {
            return Err(Error::Dimension(
                "forcing sampled on a different grid".to_string(),
            ));
        }
    }

    // Particular response from a zero initial condition.
    let last = prob.grid.sample_count() - 1;
    let w_final_x: Vec<T> = match &prob.forcing {
        Some(g) => {
            let w = rk4_integrate(h, Some(g), &vec![T::zero(); 2 * n], &prob.grid)?;
            w.sample(last)[..n].to_vec()
        }
        None => vec![T::zero(); n],
    };

    let horizon = prob.grid.tf() - prob.grid.t0();
    let phi = mat_exp(h, horizon)?;
    let phi11 = phi.block(0, 0, n, n);
    let phi12 = phi.block(0, n, n, n);

    let mut rhs = phi11.mul_vec(&prob.boundary_initial)?;
    for i in 0..n {
        rhs[i] = prob.boundary_final[i] - rhs[i] - w_final_x[i];
    }
    let lambda0 = solve_linear_in(&phi12, &rhs, "phi12").map_err(|e| match e {
        Error::Singular { .. } => Error::BoundarySystemSingular,
        other => other,
    })?;

    let mut z0 = prob.boundary_initial.clone();
    z0.extend_from_slice(&lambda0);
    let z = rk4_integrate(h, prob.forcing.as_ref(), &z0, &prob.grid)?;

    // Overflowed or NaN samples would slip past the max-based boundary
    // check below, so reject them outright.
    if (0..prob.grid.sample_count()).any(|i| z.sample(i).iter().any(|v| !v.is_finite())) {
        return Err(Error::Accuracy {
            achieved: f64::INFINITY,
            tolerance: BOUNDARY_REL_TOL,
        });
    }

    // The initial state is set exactly; check the far end.
    let b_scale = prob
        .boundary_final
        .iter()
        .fold(T::one(), |acc, v| acc.max(v.abs()));
    let achieved = z.sample(last)[..n]
        .iter()
        .zip(&prob.boundary_final)
        .map(|(&xi, &bi)| (xi - bi).abs())
        .fold(T::zero(), T::max);
    let tolerance = real::<T>(BOUNDARY_REL_TOL) * b_scale;
    if achieved > tolerance {
        return Err(Error::Accuracy {
            achieved: achieved.to_f64().unwrap_or(f64::NAN),
            tolerance: tolerance.to_f64().unwrap_or(f64::NAN),
        });
    }

    z.split(n)
}

/// Sup-norm residuals of the full nonlinear TPBVP along a trajectory
/// pair, with time derivatives by central differences over the node
/// spacing (`O(h²)`); the endpoints are excluded.
///
/// The first component measures the state equation
/// `ẋ - Ax + BR⁻¹Bᵀλ - f(x)`, the second the costate equation
/// `λ̇ + Qx + Aᵀλ + (∂f/∂x)ᵀλ` (transpose per the problem flag).
pub fn residual_norm<T: Real>(
    p: &OcpProblem<T>,
    x: &Trajectory<T>,
    lambda: &Trajectory<T>,
) -> Result<(T, T)> {
    let n = p.state_dim();
    if x.dim() != n || lambda.dim() != n {
        return Err(Error::Dimension(format!(
            "residual_norm: trajectories of dimension {}/{}, expected {n}",
            x.dim(),
            lambda.dim()
        )));
    }
    if x.grid() != lambda.grid() {
        return Err(Error::Dimension(
            "residual_norm: trajectories on different grids".to_string(),
        ));
    }
    let grid = x.grid();
    let sys = build_hamiltonian(p)?;
    let h_mat = sys.matrix();
    let jac = differentiate(&p.f);
    let h = grid.step();
    let two_h = real::<T>(2.0) * h;

    let mut r1 = T::zero();
    let mut r2 = T::zero();
    let mut fx = vec![T::zero(); n];

    for node in 1..grid.intervals() {
        let i = 2 * node;
        let xs = x.sample(i);
        let ls = lambda.sample(i);

        // Linear part via the Hamiltonian blocks: ẋ-residual uses
        // -(Hz)_x = -(Ax - Sλ), λ̇-residual uses -(Hz)_λ = Qx + Aᵀλ.
        let mut z = xs.to_vec();
        z.extend_from_slice(ls);
        let hz = h_mat.mul_vec(&z)?;

        eval_field_into(&p.f, xs, &mut fx);
        let jmat = jac.eval(xs)?;
        let jl = if p.jacobian_transpose {
            jmat.transpose_mul_vec(ls)?
        } else {
            jmat.mul_vec(ls)?
        };

        for c in 0..n {
            let xd = (x.value(i + 2, c) - x.value(i - 2, c)) / two_h;
            let ld = (lambda.value(i + 2, c) - lambda.value(i - 2, c)) / two_h;
            let f1 = xd - hz[c] - fx[c];
            let f2 = ld - hz[n + c] + jl[c];
            r1 = r1.max(f1.abs());
            r2 = r2.max(f2.abs());
        }
    }
    Ok((r1, r2))
}
