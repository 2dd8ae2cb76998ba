//! The order-by-order driver: solve the order-0 linear TPBVP, then loop —
//! synthesize the truncated-costate control, price it on the true
//! nonlinear plant, stop once consecutive costs agree to `ε`, otherwise
//! compute the next series term from its forcing.

use crate::error::{Error, Result};
use crate::numerics::{simpson_quadrature, spd_solve, Grid, Trajectory};
use crate::oracle::simulate_nonlinear;
use crate::problem::{require_valid, OcpProblem};
use crate::series::{he_forcing, SeriesTerm};
use crate::tpbvp::{build_hamiltonian, solve_linear_tpbvp, LinearTpbvp};
use crate::{real, Real};

/// Driver settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HpmConfig<T> {
    /// Stop once `|J⁽ᴹ⁾ - J⁽ᴹ⁻¹⁾| < ε`.
    pub epsilon: T,
    /// Cap on the series order; hitting it yields a non-converged result.
    /// A cap of zero stops after the order-0 term, before the convergence
    /// test can ever run.
    pub max_order: usize,
    /// Interval count `N` of the solve grid.
    pub grid_intervals: usize,
    /// Costate coupling convention applied to the run (mirrors
    /// [`OcpProblem::jacobian_transpose`]).
    pub jacobian_transpose: bool,
}

impl<T: Real> HpmConfig<T> {
    pub fn new(epsilon: T, max_order: usize, grid_intervals: usize) -> Self {
        Self {
            epsilon,
            max_order,
            grid_intervals,
            jacobian_transpose: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > T::zero()) || !self.epsilon.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "epsilon must be a positive finite number, got {}",
                self.epsilon
            )));
        }
        if self.grid_intervals < 2 {
            return Err(Error::InvalidConfig(format!(
                "grid_intervals must be at least 2, got {}",
                self.grid_intervals
            )));
        }
        Ok(())
    }
}

/// Everything a finished (or capped) run produces.
#[derive(Debug, Clone)]
pub struct HpmSolution<T> {
    /// Series terms of orders `0..=achieved_order`.
    pub terms: Vec<SeriesTerm<T>>,
    /// The final truncated control `u_M`.
    pub control: Trajectory<T>,
    /// The nonlinear plant trajectory under [`Self::control`].
    pub simulated_state: Trajectory<T>,
    /// Plant costs `J⁽⁰⁾..J⁽ᴹ⁾`, one per order.
    pub cost_history: Vec<T>,
    /// Whether the cost-difference test passed before the order cap.
    pub converged: bool,
    /// Highest series order computed, `M`.
    pub achieved_order: usize,
}

impl<T: Real> HpmSolution<T> {
    /// `|J⁽ᵏ⁾ - J⁽ᵏ⁻¹⁾|` for `k = 1..=M`.
    pub fn cost_deltas(&self) -> Vec<T> {
        self.cost_history
            .windows(2)
            .map(|w| (w[1] - w[0]).abs())
            .collect()
    }

    /// Partial sums `Σ₀ᴹ x⁽ⁿ⁾` and `Σ₀ᴹ λ⁽ⁿ⁾` up to `order`.
    pub fn partial_sums(&self, order: usize) -> Result<(Trajectory<T>, Trajectory<T>)> {
        if order >= self.terms.len() {
            return Err(Error::Sequencing(format!(
                "partial sum of order {order} from {} terms",
                self.terms.len()
            )));
        }
        let mut x = self.terms[0].x_term.clone();
        let mut lambda = self.terms[0].lambda_term.clone();
        for term in &self.terms[1..=order] {
            x.add_assign_traj(&term.x_term)?;
            lambda.add_assign_traj(&term.lambda_term)?;
        }
        Ok((x, lambda))
    }
}

/// A failed run: the error plus whatever orders completed before it.
#[derive(Debug)]
pub struct HpmFailure<T> {
    pub error: Error,
    pub partial: Option<Box<HpmSolution<T>>>,
}

impl<T> std::fmt::Display for HpmFailure<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.error.fmt(f)
    }
}

impl<T: Real> std::error::Error for HpmFailure<T> {}

impl<T> From<Error> for HpmFailure<T> {
    fn from(error: Error) -> Self {
        Self {
            error,
            partial: None,
        }
    }
}

/// Solves the homogeneous order-0 TPBVP with the problem's boundary
/// states. For a linear problem this is already the exact solution.
pub fn solve_order_zero<T: Real>(p: &OcpProblem<T>, grid: &Grid<T>) -> Result<SeriesTerm<T>> {
    require_valid(p)?;
    let system = build_hamiltonian(p)?;
    let (x, lambda) = solve_linear_tpbvp(&LinearTpbvp {
        system,
        forcing: None,
        boundary_initial: p.x0.clone(),
        boundary_final: p.xf.clone(),
        grid: *grid,
    })?;
    SeriesTerm::new(0, x, lambda)
}

/// Solves the order-`n` TPBVP (`n = prior.len()`): forcing from the prior
/// terms, zero boundary states at both ends.
pub fn solve_order_n<T: Real>(
    p: &OcpProblem<T>,
    prior: &[SeriesTerm<T>],
    grid: &Grid<T>,
) -> Result<SeriesTerm<T>> {
    require_valid(p)?;
    let n = prior.len();
    if n == 0 {
        return Err(Error::Sequencing(
            "solve_order_n needs the order-0 term first".to_string(),
        ));
    }
    let forcing = he_forcing(n, prior, p)?;
    let system = build_hamiltonian(p)?;
    let zero = vec![T::zero(); p.state_dim()];
    let (x, lambda) = solve_linear_tpbvp(&LinearTpbvp {
        system,
        forcing: Some(forcing),
        boundary_initial: zero.clone(),
        boundary_final: zero,
        grid: *grid,
    })?;
    SeriesTerm::new(n, x, lambda)
}

/// The truncated control law `u(t) = -R⁻¹Bᵀ λ_sum(t)` at every sample.
pub fn control_from_costate<T: Real>(
    p: &OcpProblem<T>,
    lambda_sum: &Trajectory<T>,
) -> Result<Trajectory<T>> {
    let n = p.state_dim();
    if lambda_sum.dim() != n {
        return Err(Error::Dimension(format!(
            "control_from_costate: costate dimension {}, expected {n}",
            lambda_sum.dim()
        )));
    }
    // Gain K = R⁻¹Bᵀ, so u = -K λ.
    let gain = spd_solve(&p.r, &p.b.transpose(), "control_from_costate: R")?;
    let mut u = Trajectory::zeros(*lambda_sum.grid(), p.control_dim());
    for i in 0..lambda_sum.grid().sample_count() {
        let lam = lambda_sum.sample(i);
        let out = u.sample_mut(i);
        gain.mul_vec_into(lam, out);
        for v in out.iter_mut() {
            *v = -*v;
        }
    }
    Ok(u)
}

/// Prices a control on the true nonlinear plant: simulates
/// `ẋ = Ax + Bu + f(x)` from `x0` and integrates the quadratic cost with
/// the same Simpson rule and grid the solver uses.
pub fn evaluate_cost<T: Real>(p: &OcpProblem<T>, u: &Trajectory<T>) -> Result<(Trajectory<T>, T)> {
    let x_sim = simulate_nonlinear(p, u)?;
    let integrand = quadratic_cost_integrand(p, &x_sim, u)?;
    let j = real::<T>(0.5) * simpson_quadrature(&integrand)?;
    Ok((x_sim, j))
}

/// `xᵀQx + uᵀRu` sampled along a trajectory pair.
pub(crate) fn quadratic_cost_integrand<T: Real>(
    p: &OcpProblem<T>,
    x: &Trajectory<T>,
    u: &Trajectory<T>,
) -> Result<Trajectory<T>> {
    if x.grid() != u.grid() {
        return Err(Error::Dimension(
            "cost integrand: state and control on different grids".to_string(),
        ));
    }
    let mut integrand = Trajectory::zeros(*x.grid(), 1);
    for i in 0..x.grid().sample_count() {
        let xs = x.sample(i);
        let us = u.sample(i);
        let qx = p.q.mul_vec(xs)?;
        let ru = p.r.mul_vec(us)?;
        let xqx: T = xs.iter().zip(&qx).map(|(&a, &b)| a * b).sum();
        let uru: T = us.iter().zip(&ru).map(|(&a, &b)| a * b).sum();
        integrand.sample_mut(i)[0] = xqx + uru;
    }
    Ok(integrand)
}

/// Runs the full driver.
///
/// The convergence test first runs at `M = 1` (it needs two costs); on a
/// subproblem failure the orders computed so far are attached to the
/// returned failure. Hitting `max_order` is not an error — the solution
/// comes back with `converged = false`.
pub fn solve_hpm<T: Real>(
    p: &OcpProblem<T>,
    cfg: &HpmConfig<T>,
) -> std::result::Result<HpmSolution<T>, HpmFailure<T>> {
    cfg.validate()?;
    let mut problem = p.clone();
    problem.jacobian_transpose = cfg.jacobian_transpose;
    require_valid(&problem)?;
    let grid = Grid::new(problem.t0, problem.tf, cfg.grid_intervals)?;

    let term0 = solve_order_zero(&problem, &grid)?;
    let mut lambda_sum = term0.lambda_term.clone();
    let mut terms = vec![term0];

    let mut control = control_from_costate(&problem, &lambda_sum)?;
    let (mut simulated, j0) = evaluate_cost(&problem, &control)?;
    let mut cost_history = vec![j0];
    let mut converged = false;

    loop {
        let order = terms.len() - 1;
        if order >= cfg.max_order {
            break;
        }

        // On any subproblem failure, hand back the orders that completed.
        let partial = |terms: Vec<SeriesTerm<T>>,
                       control: Trajectory<T>,
                       simulated: Trajectory<T>,
                       cost_history: Vec<T>,
                       error: Error| {
            let achieved_order = terms.len() - 1;
            HpmFailure {
                error,
                partial: Some(Box::new(HpmSolution {
                    terms,
                    control,
                    simulated_state: simulated,
                    cost_history,
                    converged: false,
                    achieved_order,
                })),
            }
        };

        let next = match solve_order_n(&problem, &terms, &grid) {
            Ok(t) => t,
            Err(error) => return Err(partial(terms, control, simulated, cost_history, error)),
        };
        lambda_sum.add_assign_traj(&next.lambda_term)?;

        let next_control = control_from_costate(&problem, &lambda_sum);
        let priced = next_control.and_then(|u| evaluate_cost(&problem, &u).map(|(x, j)| (u, x, j)));
        let (u, x_sim, j) = match priced {
            Ok(v) => v,
            Err(error) => return Err(partial(terms, control, simulated, cost_history, error)),
        };
        terms.push(next);
        control = u;
        simulated = x_sim;
        let j_prev = *cost_history.last().expect("history starts at order 0");
        cost_history.push(j);

        if (j - j_prev).abs() < cfg.epsilon {
            converged = true;
            break;
        }
    }

    let achieved_order = terms.len() - 1;
    Ok(HpmSolution {
        terms,
        control,
        simulated_state: simulated,
        cost_history,
        converged,
        achieved_order,
    })
}
