//! Independent verification paths: forward simulation of the true
//! nonlinear plant, a single-shooting Newton solver for the full
//! nonlinear TPBVP, and a closed-form scalar LQ reference.
//!
//! The shooting solver deliberately shares nothing with the series
//! recursion beyond the elementary integrator, so agreement between the
//! two is meaningful cross-validation rather than a tautology.

use crate::error::{Error, Result};
use crate::numerics::{rk4_march, solve_linear_in, spd_solve, Grid, Matrix, Trajectory};
use crate::problem::{differentiate, eval_field_into, require_valid, OcpProblem};
use crate::tpbvp::{build_hamiltonian, solve_linear_tpbvp, LinearTpbvp};
use crate::{real, Real};

/// State-norm bound beyond which forward simulation reports divergence.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

/// Newton iteration cap for the shooting solver.
pub const SHOOTING_MAX_ITERATIONS: usize = 50;

/// Backtracking halvings attempted per Newton step.
pub const SHOOTING_MAX_HALVINGS: usize = 20;

/// Relative tolerance of the shooting terminal residual.
pub const SHOOTING_RESIDUAL_REL: f64 = 1e-10;

/// Forward-difference step scale for the shooting Jacobian.
const SHOOTING_FD_STEP: f64 = 1e-7;

/// Simulates the nonlinear plant `ẋ = Ax + Bu(t) + f(x)` from `x(t0) = x0`
/// under a control sampled on the solve grid.
///
/// Errors with [`Error::Divergence`] once the state norm passes `1e12`.
pub fn simulate_nonlinear<T: Real>(p: &OcpProblem<T>, u: &Trajectory<T>) -> Result<Trajectory<T>> {
    let n = p.state_dim();
    let m = p.control_dim();
    if u.dim() != m {
        return Err(Error::Dimension(format!(
            "simulate_nonlinear: control dimension {}, expected {m}",
            u.dim()
        )));
    }
    if u.grid().t0() != p.t0 || u.grid().tf() != p.tf {
        return Err(Error::Dimension(
            "simulate_nonlinear: control grid does not span the problem horizon".to_string(),
        ));
    }
    if p.x0.len() != n || p.f.dim() != n || p.b.rows() != n || !p.a.is_square() {
        return Err(Error::Dimension(
            "simulate_nonlinear: inconsistent problem dimensions".to_string(),
        ));
    }

    let mut fx = vec![T::zero(); n];
    let mut bu = vec![T::zero(); n];
    rk4_march(
        u.grid(),
        &p.x0,
        Some(u),
        Some(real(DIVERGENCE_LIMIT)),
        |x, u_stage, out| {
            p.a.mul_vec_into(x, out);
            p.b.mul_vec_into(u_stage.expect("control signal present"), &mut bu);
            eval_field_into(&p.f, x, &mut fx);
            for i in 0..n {
                out[i] += bu[i] + fx[i];
            }
        },
    )
}

/// Outcome of a shooting solve. Non-convergence is reported here, never
/// raised as an error.
#[derive(Debug, Clone)]
pub struct ShootingReport<T> {
    pub converged: bool,
    /// Newton updates performed.
    pub iterations: usize,
    /// Terminal mismatch `x(tf) - xf` of the reported iterate
    /// (componentwise infinite when no finite propagation exists).
    pub final_residual: Vec<T>,
    /// Initial costate of the reported iterate.
    pub lambda0: Vec<T>,
    pub x: Trajectory<T>,
    pub lambda: Trajectory<T>,
}

/// Propagates the full nonlinear TPBVP dynamics from `(x0, λ0)` and
/// Newton-iterates on `λ0` until the terminal state matches `xf`.
///
/// The Jacobian comes from forward finite differences (step
/// `1e-7·max(1, |λ0ᵢ|)`), with up to twenty step halvings whenever the
/// residual fails to decrease. Iteration stops at a residual below
/// `1e-10·max(1, ‖xf‖∞, ‖x0‖∞)` or after fifty updates. With no guess
/// supplied, the order-0 costate of the linear subproblem seeds the
/// iteration (falling back to zero if that subproblem is singular).
pub fn shooting_solve<T: Real>(
    p: &OcpProblem<T>,
    grid: &Grid<T>,
    lambda0_guess: Option<&[T]>,
) -> Result<ShootingReport<T>> {
    require_valid(p)?;
    let n = p.state_dim();
    if grid.t0() != p.t0 || grid.tf() != p.tf {
        return Err(Error::Dimension(
            "shooting_solve: grid does not span the problem horizon".to_string(),
        ));
    }
    if let Some(guess) = lambda0_guess {
        if guess.len() != n {
            return Err(Error::Dimension(format!(
                "shooting_solve: guess of length {}, expected {n}",
                guess.len()
            )));
        }
        if !guess.iter().all(|v| v.is_finite()) {
            return Err(Error::Dimension(
                "shooting_solve: non-finite initial guess".to_string(),
            ));
        }
    }

    let dynamics = TpbvpDynamics::new(p)?;
    let mut lambda0: Vec<T> = match lambda0_guess {
        Some(g) => g.to_vec(),
        None => warm_start(p, grid).unwrap_or_else(|| vec![T::zero(); n]),
    };

    let scale =
        p.x0.iter()
            .chain(&p.xf)
            .fold(T::one(), |acc, v| acc.max(v.abs()));
    let tol = real::<T>(SHOOTING_RESIDUAL_REL) * scale;

    let fail_report = |lambda0: &[T], iterations: usize| ShootingReport {
        converged: false,
        iterations,
        final_residual: vec![T::infinity(); n],
        lambda0: lambda0.to_vec(),
        x: Trajectory::zeros(*grid, n),
        lambda: Trajectory::zeros(*grid, n),
    };

    let Ok(mut current) = dynamics.propagate(grid, &lambda0) else {
        return Ok(fail_report(&lambda0, 0));
    };
    let mut residual = current.residual(&p.xf);
    let mut iterations = 0;

    while sup(&residual) > tol {
        if iterations >= SHOOTING_MAX_ITERATIONS {
            break;
        }

        // Finite-difference Jacobian of the terminal residual in λ0.
        let mut jac = Matrix::zeros(n, n);
        let mut jacobian_ok = true;
        for col in 0..n {
            let step = real::<T>(SHOOTING_FD_STEP) * T::one().max(lambda0[col].abs());
            let mut perturbed = lambda0.clone();
            perturbed[col] += step;
            match dynamics.propagate(grid, &perturbed) {
                Ok(shot) => {
                    let r_pert = shot.residual(&p.xf);
                    for row in 0..n {
                        jac[(row, col)] = (r_pert[row] - residual[row]) / step;
                    }
                }
                Err(_) => {
                    jacobian_ok = false;
                    break;
                }
            }
        }
        if !jacobian_ok {
            break;
        }

        let neg_r: Vec<T> = residual.iter().map(|&r| -r).collect();
        let Ok(delta) = solve_linear_in(&jac, &neg_r, "shooting jacobian") else {
            break;
        };

        // Backtracking: accept the first step that reduces the residual.
        let mut alpha = T::one();
        let mut accepted = None;
        for _ in 0..=SHOOTING_MAX_HALVINGS {
            let candidate: Vec<T> = lambda0
                .iter()
                .zip(&delta)
                .map(|(&l, &d)| l + alpha * d)
                .collect();
            if let Ok(shot) = dynamics.propagate(grid, &candidate) {
                let r_new = shot.residual(&p.xf);
                if sup(&r_new) < sup(&residual) {
                    accepted = Some((candidate, shot, r_new));
                    break;
                }
            }
            alpha *= real(0.5);
        }
        let Some((candidate, shot, r_new)) = accepted else {
            break;
        };
        lambda0 = candidate;
        current = shot;
        residual = r_new;
        iterations += 1;
    }

    let converged = sup(&residual) <= tol;
    let (x, lambda) = current.z.split(n)?;
    Ok(ShootingReport {
        converged,
        iterations,
        final_residual: residual,
        lambda0,
        x,
        lambda,
    })
}

fn sup<T: Real>(v: &[T]) -> T {
    v.iter().map(|x| x.abs()).fold(T::zero(), T::max)
}

/// Order-0 costate as the default shooting seed.
fn warm_start<T: Real>(p: &OcpProblem<T>, grid: &Grid<T>) -> Option<Vec<T>> {
    let system = build_hamiltonian(p).ok()?;
    let (_, lambda) = solve_linear_tpbvp(&LinearTpbvp {
        system,
        forcing: None,
        boundary_initial: p.x0.clone(),
        boundary_final: p.xf.clone(),
        grid: *grid,
    })
    .ok()?;
    Some(lambda.sample(0).to_vec())
}

/// The coupled state/costate dynamics of the nonlinear TPBVP.
struct TpbvpDynamics<'a, T> {
    p: &'a OcpProblem<T>,
    /// `S = BR⁻¹Bᵀ`.
    s: Matrix<T>,
    jac: crate::problem::PolyMatrixField<T>,
}

struct Shot<T> {
    z: Trajectory<T>,
}

impl<T: Real> Shot<T> {
    fn residual(&self, xf: &[T]) -> Vec<T> {
        let n = xf.len();
        let last = self.z.grid().sample_count() - 1;
        self.z.sample(last)[..n]
            .iter()
            .zip(xf)
            .map(|(&x, &b)| x - b)
            .collect()
    }
}

impl<'a, T: Real> TpbvpDynamics<'a, T> {
    fn new(p: &'a OcpProblem<T>) -> Result<Self> {
        let x = spd_solve(&p.r, &p.b.transpose(), "shooting_solve: R")?;
        let s = p.b.matmul(&x)?;
        let s = s.add(&s.transpose())?.scale(real(0.5));
        Ok(Self {
            p,
            s,
            jac: differentiate(&p.f),
        })
    }

    /// Integrates `ż` per the necessary conditions from `(x0, λ0)`.
    fn propagate(&self, grid: &Grid<T>, lambda0: &[T]) -> Result<Shot<T>> {
        let n = self.p.state_dim();
        let mut z0 = self.p.x0.clone();
        z0.extend_from_slice(lambda0);
        let mut fx = vec![T::zero(); n];
        let mut tmp = vec![T::zero(); n];
        let z = rk4_march(
            grid,
            &z0,
            None,
            Some(real(DIVERGENCE_LIMIT)),
            |z, _, out| {
                let (x, lam) = z.split_at(n);
                let (out_x, out_l) = out.split_at_mut(n);
                // ẋ = Ax - Sλ + f(x)
                self.p.a.mul_vec_into(x, out_x);
                self.s.mul_vec_into(lam, &mut tmp);
                eval_field_into(&self.p.f, x, &mut fx);
                for i in 0..n {
                    out_x[i] += fx[i] - tmp[i];
                }
                // λ̇ = -Qx - Aᵀλ - J(x)ᵀλ  (or J(x)λ per the flag)
                self.p.q.mul_vec_into(x, out_l);
                let jm = self.jac.eval(x).expect("dimensions validated");
                let jl = if self.p.jacobian_transpose {
                    jm.transpose_mul_vec(lam).expect("dimensions validated")
                } else {
                    jm.mul_vec(lam).expect("dimensions validated")
                };
                for i in 0..n {
                    let at_l: T = lam
                        .iter()
                        .enumerate()
                        .map(|(k, &l)| self.p.a[(k, i)] * l)
                        .sum();
                    out_l[i] = -out_l[i] - at_l - jl[i];
                }
            },
        )?;
        Ok(Shot { z })
    }
}

/// Closed-form solution of the scalar LQ instance (`n = m = 1`, `f = 0`).
#[derive(Debug, Clone)]
pub struct ScalarLqSolution<T> {
    pub x: Trajectory<T>,
    pub lambda: Trajectory<T>,
    pub u: Trajectory<T>,
    /// Cost from exact integration of the quadratic forms.
    pub cost: T,
}

/// Evaluates the exact scalar LQ solution on a grid.
///
/// The Hamiltonian matrix `[[a, -b²/r], [-q, -a]]` squares to `ω²I` with
/// `ω² = a² + b²q/r ≥ 0`, so its exponential is hyperbolic (or affine
/// when `ω = 0`) and both the trajectories and the cost integrals have
/// closed forms.
pub fn analytic_scalar_lq<T: Real>(
    a: T,
    b: T,
    q: T,
    r: T,
    x0: T,
    xf: T,
    grid: &Grid<T>,
) -> Result<ScalarLqSolution<T>> {
    for (name, v) in [
        ("a", a),
        ("b", b),
        ("q", q),
        ("r", r),
        ("x0", x0),
        ("xf", xf),
    ] {
        if !v.is_finite() {
            return Err(Error::Dimension(format!(
                "analytic_scalar_lq: {name} not finite"
            )));
        }
    }
    if !(r > T::zero()) {
        return Err(Error::InvalidConfig(
            "analytic_scalar_lq: need r > 0".to_string(),
        ));
    }
    if q < T::zero() {
        return Err(Error::InvalidConfig(
            "analytic_scalar_lq: need q >= 0".to_string(),
        ));
    }
    if b == T::zero() {
        return Err(Error::InvalidConfig(
            "analytic_scalar_lq: need b != 0".to_string(),
        ));
    }

    let beta = b * b / r;
    let omega = (a * a + beta * q).sqrt();
    // cosh(ωτ) and sinh(ωτ)/ω, with the ω→0 limit handled in series.
    let cosh_sinch = |tau: T| -> (T, T) {
        let z = omega * tau;
        if z.abs() < real(1e-8) {
            let z2 = z * z;
            (T::one() + z2 * real(0.5), tau * (T::one() + z2 / real(6.0)))
        } else {
            (z.cosh(), z.sinh() / omega)
        }
    };

    let horizon = grid.tf() - grid.t0();
    let (ch_f, sh_f) = cosh_sinch(horizon);
    let phi11_f = ch_f + a * sh_f;
    let phi12_f = -beta * sh_f;
    if phi12_f == T::zero() {
        return Err(Error::DegenerateHorizon);
    }
    let lambda0 = (xf - phi11_f * x0) / phi12_f;

    let mut x = Trajectory::zeros(*grid, 1);
    let mut lambda = Trajectory::zeros(*grid, 1);
    let mut u = Trajectory::zeros(*grid, 1);
    for i in 0..grid.sample_count() {
        let tau = grid.sample_time(i) - grid.t0();
        let (ch, sh) = cosh_sinch(tau);
        let xt = (ch + a * sh) * x0 - beta * sh * lambda0;
        let lt = -q * sh * x0 + (ch - a * sh) * lambda0;
        x.sample_mut(i)[0] = xt;
        lambda.sample_mut(i)[0] = lt;
        u.sample_mut(i)[0] = -(b / r) * lt;
    }

    // J = ½(q·∫x² + β·∫λ²) with exact antiderivatives.
    let ix;
    let il;
    if omega == T::zero() {
        // a = q = 0: x is affine in τ, λ constant.
        let v = -beta * lambda0;
        ix = x0 * x0 * horizon
            + x0 * v * horizon * horizon
            + v * v * horizon * horizon * horizon / real(3.0);
        il = lambda0 * lambda0 * horizon;
    } else {
        let cx = x0;
        let sx = (a * x0 - beta * lambda0) / omega;
        let cl = lambda0;
        let sl = (-q * x0 - a * lambda0) / omega;
        let two = real::<T>(2.0);
        let four_omega = real::<T>(4.0) * omega;
        let sinh2 = (two * omega * horizon).sinh() / four_omega;
        let cosh2 = ((two * omega * horizon).cosh() - T::one()) / four_omega;
        let half_t = horizon * real(0.5);
        let quad = |c: T, s: T| -> T {
            c * c * (half_t + sinh2) + two * c * s * cosh2 + s * s * (sinh2 - half_t)
        };
        ix = quad(cx, sx);
        il = quad(cl, sl);
    }
    let cost = real::<T>(0.5) * (q * ix + beta * il);

    Ok(ScalarLqSolution { x, lambda, u, cost })
}
