//! Shared test oracles: finite-difference extraction of power-series
//! coefficients (Fornberg weights) and seeded random problem generators.

use hpmoc::numerics::{Grid, Matrix, Trajectory};
use hpmoc::problem::{Monomial, OcpProblem, PolyVectorField};
use hpmoc::series::SeriesTerm;
use rand::Rng;

/// Finite-difference weights for the `k`-th derivative at `z` from
/// samples at `nodes` (Fornberg's recurrence). Column `k` of the result
/// holds the weight of each node in the `k`-th derivative estimate.
pub fn fd_weights(z: f64, nodes: &[f64], max_order: usize) -> Vec<Vec<f64>> {
    let n = nodes.len();
    let m = max_order;
    let mut c = vec![vec![0.0f64; m + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - z;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c
}

/// `(1/k!) · dᵏg/dpᵏ |_{p=0}` by finite differences on a symmetric
/// stencil wide enough to be exact for polynomials of the given degree.
pub fn fd_series_coefficient(g: impl Fn(f64) -> f64, k: usize, degree_bound: usize) -> f64 {
    let points = (degree_bound + 1).max(k + 1).max(3);
    let points = if points.is_multiple_of(2) {
        points + 1
    } else {
        points
    };
    let half = (points / 2) as i64;
    let delta = 0.25;
    let nodes: Vec<f64> = (-half..=half).map(|i| i as f64 * delta).collect();
    let w = fd_weights(0.0, &nodes, k);
    let deriv: f64 = nodes.iter().enumerate().map(|(j, &x)| w[j][k] * g(x)).sum();
    let k_factorial: f64 = (1..=k).map(|i| i as f64).product();
    deriv / k_factorial
}

#[allow(dead_code)]
pub fn spacecraft_grid(n: usize) -> Grid<f64> {
    Grid::new(0.0, 100.0, n).unwrap()
}

/// Random polynomial field with monomials of total degree 2 or 3.
pub fn random_field<R: Rng>(rng: &mut R, dim: usize) -> PolyVectorField<f64> {
    let components = (0..dim)
        .map(|_| {
            let monos = rng.gen_range(1..=3);
            (0..monos)
                .map(|_| {
                    let degree = rng.gen_range(2..=3u32);
                    let mut exponents = vec![0u32; dim];
                    for _ in 0..degree {
                        exponents[rng.gen_range(0..dim)] += 1;
                    }
                    let mut coefficient = 0.0;
                    while coefficient == 0.0 {
                        coefficient = rng.gen_range(-1.0..1.0);
                    }
                    Monomial::new(coefficient, exponents)
                })
                .collect()
        })
        .collect();
    PolyVectorField::new(dim, components).unwrap()
}

/// Random well-posed problem with the given state dimension (`m = n`).
#[allow(dead_code)]
pub fn random_problem<R: Rng>(rng: &mut R, n: usize) -> OcpProblem<f64> {
    let a = Matrix::from_fn(n, n, |_, _| rng.gen_range(-0.5..0.5));
    let mut b = Matrix::identity(n);
    for i in 0..n {
        for j in 0..n {
            b[(i, j)] += rng.gen_range(-0.2..0.2);
        }
    }
    // Q = GᵀG (PSD), R = I + HᵀH (PD).
    let g = Matrix::from_fn(n, n, |_, _| rng.gen_range(-0.5..0.5));
    let q = g.transpose().matmul(&g).unwrap();
    let h = Matrix::from_fn(n, n, |_, _| rng.gen_range(-0.3..0.3));
    let r = Matrix::identity(n)
        .add(&h.transpose().matmul(&h).unwrap())
        .unwrap();
    let x0 = (0..n).map(|_| rng.gen_range(-0.5..0.5)).collect();
    let xf = (0..n).map(|_| rng.gen_range(-0.5..0.5)).collect();
    OcpProblem::new(a, b, q, r, random_field(rng, n), 0.0, 1.0, x0, xf)
}

/// Random smooth series terms of orders `0..count` on a common grid.
pub fn random_series_terms<R: Rng>(
    rng: &mut R,
    grid: Grid<f64>,
    dim: usize,
    count: usize,
) -> Vec<SeriesTerm<f64>> {
    (0..count)
        .map(|order| {
            let mk = |rng: &mut R| {
                let coeffs: Vec<(f64, f64, f64)> = (0..dim)
                    .map(|_| {
                        (
                            rng.gen_range(-1.0..1.0),
                            rng.gen_range(-1.0..1.0),
                            rng.gen_range(-1.0..1.0),
                        )
                    })
                    .collect();
                Trajectory::from_fn(grid, dim, |t, out| {
                    for (o, &(c0, c1, c2)) in out.iter_mut().zip(&coeffs) {
                        *o = c0 + c1 * t + c2 * t * t;
                    }
                })
            };
            SeriesTerm::new(order, mk(rng), mk(rng)).unwrap()
        })
        .collect()
}
