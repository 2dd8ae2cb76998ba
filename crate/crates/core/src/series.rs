//! Truncated power series in the embedding parameter and extraction of
//! the per-order forcing terms of the linear TPBVP sequence.
//!
//! Substituting the state/costate series into the nonlinear operator and
//! matching powers of the embedding parameter shows that the order-`n`
//! subproblem is forced by the coefficient of `p^{n-1}` in the operator
//! evaluated on the partial series — not by the operator applied to the
//! single term of order `n-1`. The two readings coincide at `n = 1` and
//! diverge beyond; only the coefficient reading makes the summed series
//! solve the original problem at `p = 1`, so it is the one implemented.

use crate::error::{Error, Result};
use crate::numerics::{Grid, Trajectory};
use crate::problem::{differentiate, Monomial, OcpProblem};
use crate::Real;

/// Polynomial in the embedding parameter truncated at a fixed order:
/// exactly `K + 1` coefficients for order bound `K`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSeries<T> {
    coeffs: Vec<T>,
}

impl<T: Real> TruncatedSeries<T> {
    /// Wraps raw coefficients `c₀..c_K`.
    pub fn new(coeffs: Vec<T>) -> Self {
        assert!(
            !coeffs.is_empty(),
            "series needs at least the constant term"
        );
        Self { coeffs }
    }

    /// The constant series `c + 0·p + ... + 0·p^K`.
    pub fn constant(c: T, order_bound: usize) -> Self {
        let mut coeffs = vec![T::zero(); order_bound + 1];
        coeffs[0] = c;
        Self { coeffs }
    }

    pub fn zero(order_bound: usize) -> Self {
        Self {
            coeffs: vec![T::zero(); order_bound + 1],
        }
    }

    pub fn order_bound(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Coefficient of `p^k`, zero beyond the stored bound.
    pub fn coeff(&self, k: usize) -> T {
        self.coeffs.get(k).copied().unwrap_or_else(T::zero)
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    fn add_assign(&mut self, rhs: &Self) {
        for k in 0..self.coeffs.len() {
            self.coeffs[k] += rhs.coeff(k);
        }
    }
}

/// Cauchy product truncated at order bound `k`:
/// `c_l = Σ_{i+j=l} a_i b_j` for `l ≤ k`.
pub fn series_mul<T: Real>(
    a: &TruncatedSeries<T>,
    b: &TruncatedSeries<T>,
    k: usize,
) -> TruncatedSeries<T> {
    let mut coeffs = vec![T::zero(); k + 1];
    for (l, c) in coeffs.iter_mut().enumerate() {
        let lo = l.saturating_sub(b.order_bound());
        let hi = l.min(a.order_bound());
        for i in lo..=hi {
            *c += a.coeffs[i] * b.coeffs[l - i];
        }
    }
    TruncatedSeries { coeffs }
}

/// Evaluates a monomial list on series-valued state variables, truncated
/// at order bound `k`. Exponent vectors must match `state.len()`.
pub fn poly_on_series<T: Real>(
    monomials: &[Monomial<T>],
    state: &[TruncatedSeries<T>],
    k: usize,
) -> TruncatedSeries<T> {
    let mut acc = TruncatedSeries::zero(k);
    for mono in monomials {
        assert_eq!(
            mono.exponents.len(),
            state.len(),
            "poly_on_series: exponent length differs from state dimension"
        );
        let mut term = TruncatedSeries::constant(mono.coefficient, k);
        for (series, &e) in state.iter().zip(&mono.exponents) {
            for _ in 0..e {
                term = series_mul(&term, series, k);
            }
        }
        acc.add_assign(&term);
    }
    acc
}

/// One order of the solution series: the state and costate trajectories
/// of that order on a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesTerm<T> {
    pub order: usize,
    pub x_term: Trajectory<T>,
    pub lambda_term: Trajectory<T>,
}

impl<T: Real> SeriesTerm<T> {
    pub fn new(order: usize, x_term: Trajectory<T>, lambda_term: Trajectory<T>) -> Result<Self> {
        if x_term.grid() != lambda_term.grid() || x_term.dim() != lambda_term.dim() {
            return Err(Error::Dimension(
                "series term: state and costate trajectories disagree".to_string(),
            ));
        }
        Ok(Self {
            order,
            x_term,
            lambda_term,
        })
    }

    pub fn grid(&self) -> &Grid<T> {
        self.x_term.grid()
    }
}

/// Forcing of the order-`n` linear TPBVP (`n ≥ 1`), sampled on the common
/// grid of the prior terms.
///
/// At each grid point the prior terms of orders `0..n-1` define
/// per-component series for the state and costate. The state block of the
/// returned `2n_states`-vector is the `p^{n-1}` coefficient of `f` on the
/// state series (entering with a plus sign); the costate block is minus
/// the `p^{n-1}` coefficient of the Jacobian–costate product, transposed
/// or not per the problem's `jacobian_transpose` flag.
pub fn he_forcing<T: Real>(
    n: usize,
    prior: &[SeriesTerm<T>],
    problem: &OcpProblem<T>,
) -> Result<Trajectory<T>> {
    if n == 0 {
        return Err(Error::Sequencing(
            "forcing is defined for orders n >= 1".to_string(),
        ));
    }
    if prior.len() != n {
        return Err(Error::Sequencing(format!(
            "order {n} needs prior terms 0..{}, got {} terms",
            n - 1,
            prior.len()
        )));
    }
    for (k, term) in prior.iter().enumerate() {
        if term.order != k {
            return Err(Error::Sequencing(format!(
                "prior term at position {k} has order {}",
                term.order
            )));
        }
    }
    let grid = *prior[0].grid();
    let n_states = problem.state_dim();
    for term in prior {
        if term.grid() != &grid {
            return Err(Error::Dimension(
                "prior terms sampled on different grids".to_string(),
            ));
        }
        if term.x_term.dim() != n_states {
            return Err(Error::Dimension(format!(
                "prior term dimension {} does not match problem state dimension {n_states}",
                term.x_term.dim()
            )));
        }
    }
    if problem.f.dim() != n_states
        || !problem
            .f
            .components()
            .iter()
            .flatten()
            .all(|m| m.exponents.len() == n_states)
    {
        return Err(Error::Dimension(
            "nonlinearity dimensions do not match the problem".to_string(),
        ));
    }

    let jac = differentiate(&problem.f);
    let bound = n - 1;
    let mut forcing = Trajectory::zeros(grid, 2 * n_states);

    let mut x_series: Vec<TruncatedSeries<T>> = vec![TruncatedSeries::zero(bound); n_states];
    let mut l_series: Vec<TruncatedSeries<T>> = vec![TruncatedSeries::zero(bound); n_states];

    for i in 0..grid.sample_count() {
        for j in 0..n_states {
            let xc: Vec<T> = prior.iter().map(|t| t.x_term.value(i, j)).collect();
            let lc: Vec<T> = prior.iter().map(|t| t.lambda_term.value(i, j)).collect();
            x_series[j] = TruncatedSeries::new(xc);
            l_series[j] = TruncatedSeries::new(lc);
        }
        let (state_block, costate_block) = forcing.sample_mut(i).split_at_mut(n_states);
        for (o, comp) in state_block.iter_mut().zip(problem.f.components()) {
            *o = poly_on_series(comp, &x_series, bound).coeff(bound);
        }
        for (c, o) in costate_block.iter_mut().enumerate() {
            let mut total = T::zero();
            for (j, lambda_j) in l_series.iter().enumerate() {
                let entry = if problem.jacobian_transpose {
                    jac.entry(j, c)
                } else {
                    jac.entry(c, j)
                };
                if entry.is_empty() {
                    continue;
                }
                let e = poly_on_series(entry, &x_series, bound);
                total += series_mul(&e, lambda_j, bound).coeff(bound);
            }
            *o = -total;
        }
    }
    Ok(forcing)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Matrix;
    use crate::problem::PolyVectorField;

    fn ts(coeffs: &[f64]) -> TruncatedSeries<f64> {
        TruncatedSeries::new(coeffs.to_vec())
    }

    #[test]
    fn series_mul_basic() {
        // (1 + p)(1 - p) truncated at K = 2 is 1 + 0p - p².
        let prod = series_mul(&ts(&[1.0, 1.0, 0.0]), &ts(&[1.0, -1.0, 0.0]), 2);
        assert_eq!(prod.coeffs(), &[1.0, 0.0, -1.0]);
    }

    #[test]
    fn series_mul_order_zero() {
        let prod = series_mul(&ts(&[3.0]), &ts(&[-2.0]), 0);
        assert_eq!(prod.coeffs(), &[-6.0]);
    }

    #[test]
    fn poly_on_series_square() {
        // x² on x₀ + x₁p at K = 1: (x₀², 2x₀x₁).
        let (x0, x1) = (1.7, -0.4);
        let mono = vec![Monomial::new(1.0, vec![2])];
        let s = poly_on_series(&mono, &[ts(&[x0, x1])], 1);
        assert!((s.coeff(0) - x0 * x0).abs() < 1e-15);
        assert!((s.coeff(1) - 2.0 * x0 * x1).abs() < 1e-15);
    }

    #[test]
    fn poly_on_series_zero_series() {
        let mono = vec![Monomial::new(4.0, vec![3, 1])];
        let s = poly_on_series(
            &mono,
            &[TruncatedSeries::zero(3), TruncatedSeries::zero(3)],
            3,
        );
        assert!(s.coeffs().iter().all(|&c| c == 0.0));
    }

    #[test]
    fn poly_on_series_cube_expansion() {
        // (1 + p + p²)³ = 1 + 3p + 6p² + ...
        let mono = vec![Monomial::new(1.0, vec![3])];
        let s = poly_on_series(&mono, &[ts(&[1.0, 1.0, 1.0])], 2);
        assert_eq!(s.coeffs(), &[1.0, 3.0, 6.0]);
    }

    fn scalar_square_problem() -> OcpProblem<f64> {
        // ẋ = u + x² on [0, 1].
        OcpProblem::new(
            Matrix::zeros(1, 1),
            Matrix::identity(1),
            Matrix::zeros(1, 1),
            Matrix::identity(1),
            PolyVectorField::new(1, vec![vec![Monomial::new(1.0, vec![2])]]).unwrap(),
            0.0,
            1.0,
            vec![1.0],
            vec![0.0],
        )
    }

    fn term(order: usize, grid: Grid<f64>, x: f64, l: f64) -> SeriesTerm<f64> {
        SeriesTerm::new(
            order,
            Trajectory::from_fn(grid, 1, |t, out| out[0] = x * (1.0 + t)),
            Trajectory::from_fn(grid, 1, |t, out| out[0] = l * (1.0 - t)),
        )
        .unwrap()
    }

    #[test]
    fn he_forcing_order_one_is_literal_operator() {
        let p = scalar_square_problem();
        let grid = Grid::new(0.0, 1.0, 4).unwrap();
        let t0 = term(0, grid, 0.8, -0.3);
        let g = he_forcing(1, std::slice::from_ref(&t0), &p).unwrap();
        for i in 0..grid.sample_count() {
            let x = t0.x_term.value(i, 0);
            let l = t0.lambda_term.value(i, 0);
            assert!((g.value(i, 0) - x * x).abs() < 1e-15);
            assert!((g.value(i, 1) + 2.0 * x * l).abs() < 1e-15);
        }
    }

    #[test]
    fn he_forcing_zero_field_is_zero() {
        let mut p = scalar_square_problem();
        p.f = PolyVectorField::zero(1);
        let grid = Grid::new(0.0, 1.0, 4).unwrap();
        let terms = [term(0, grid, 0.8, -0.3), term(1, grid, 0.1, 0.2)];
        for n in 1..=2 {
            let g = he_forcing(n, &terms[..n], &p).unwrap();
            assert_eq!(g.sup_norm(), 0.0);
        }
    }

    #[test]
    fn he_forcing_order_two_is_cross_term() {
        // For f(x) = x², the order-2 state forcing is 2·x⁽⁰⁾x⁽¹⁾, not (x⁽¹⁾)².
        let p = scalar_square_problem();
        let grid = Grid::new(0.0, 1.0, 4).unwrap();
        let terms = vec![term(0, grid, 0.8, -0.3), term(1, grid, 0.1, 0.2)];
        let g = he_forcing(2, &terms, &p).unwrap();
        for i in 0..grid.sample_count() {
            let x0 = terms[0].x_term.value(i, 0);
            let x1 = terms[1].x_term.value(i, 0);
            let l0 = terms[0].lambda_term.value(i, 0);
            let l1 = terms[1].lambda_term.value(i, 0);
            assert!((g.value(i, 0) - 2.0 * x0 * x1).abs() < 1e-15);
            // Costate block: -(p¹ coefficient of 2x̃λ̃) = -2(x₀λ₁ + x₁λ₀).
            assert!((g.value(i, 1) + 2.0 * (x0 * l1 + x1 * l0)).abs() < 1e-15);
        }
    }

    #[test]
    fn he_forcing_requires_contiguous_orders() {
        let p = scalar_square_problem();
        let grid = Grid::new(0.0, 1.0, 4).unwrap();
        let t0 = term(0, grid, 0.8, -0.3);
        let t2 = term(2, grid, 0.1, 0.2);
        assert!(matches!(
            he_forcing(2, &[t0.clone(), t2], &p),
            Err(Error::Sequencing(_))
        ));
        assert!(matches!(
            he_forcing(2, &[t0], &p),
            Err(Error::Sequencing(_))
        ));
    }
}
