//! Acceptance suite: one test per release criterion, each printing a
//! pass line with the measured quantities (run with `--nocapture` to see
//! them). Every tolerance is pinned in code next to its assertion.

mod common;

use std::time::Instant;

use common::{fd_series_coefficient, random_field, random_series_terms, shell_problem};
use hpmoc::hpm::{control_from_costate, evaluate_cost, solve_hpm, HpmConfig};
use hpmoc::numerics::{mat_exp, rk4_integrate, simpson_quadrature, Grid, Matrix, Trajectory};
use hpmoc::oracle::analytic_scalar_lq;
use hpmoc::problem::{differentiate, eval_field, OcpProblem, PolyVectorField};
use hpmoc::series::he_forcing;
use hpmoc::spacecraft;
use hpmoc::tpbvp::{build_hamiltonian, residual_norm, solve_linear_tpbvp, LinearTpbvp};
use hpmoc_cli::file::{file_to_problem, spacecraft_file, ParsedProblem};
use hpmoc_cli::run::{run_compare, run_solve};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn spacecraft_parsed() -> ParsedProblem {
    let file = spacecraft_file();
    let (problem, config) = file_to_problem(&file).expect("bundled preset is valid");
    assert_eq!(config.epsilon, 1e-12);
    assert_eq!(config.grid_intervals, 1000);
    ParsedProblem {
        name: "spacecraft".to_string(),
        problem,
        config,
    }
}

// Criterion 1: the bundled benchmark converges near the reference cost
// at a plausible order, quickly.
#[test]
fn criterion_1_benchmark_cost() {
    let parsed = spacecraft_parsed();
    let out = tempfile::tempdir().unwrap();
    let started = Instant::now();
    let artifacts = run_solve(&parsed, 0.0, out.path()).unwrap();
    let elapsed = started.elapsed();

    assert_eq!(artifacts.exit_code, 0, "solve must converge (exit 0)");
    let j = *artifacts.summary.cost_history.last().unwrap();
    let gap = (j - 0.004689).abs();
    assert!(gap <= 2e-5, "|J - 0.004689| = {gap:e} above 2e-5");
    let order = artifacts.summary.achieved_order;
    assert!(
        (2..=6).contains(&order),
        "achieved order {order} outside [2, 6]"
    );
    assert!(
        elapsed.as_secs_f64() < 10.0,
        "runtime {elapsed:?} above 10 s"
    );
    println!(
        "criterion 1: PASS — J = {j:.7}, |J - 0.004689| = {gap:.2e}, \
         order = {order}, runtime = {elapsed:?}"
    );
}

// Criterion 2: order-0 closed form (constant costate, linear state).
#[test]
fn criterion_2_order_zero_closed_form() {
    let p = spacecraft::problem::<f64>();
    let grid = Grid::new(0.0, 100.0, 1000).unwrap();
    let term0 = hpmoc::hpm::solve_order_zero(&p, &grid).unwrap();
    let lambda0 = term0.lambda_term.value(0, 0);
    let gap_lambda = (lambda0 - 0.743734).abs();
    assert!(
        gap_lambda <= 1e-6,
        "λ⁽⁰⁾₁(t0) = {lambda0}, gap {gap_lambda:e}"
    );

    let u0 = control_from_costate(&p, &term0.lambda_term).unwrap();
    let (_, j0) = evaluate_cost(&p, &u0).unwrap();
    let gap_j = (j0 - 0.0046878).abs();
    assert!(gap_j <= 1e-6, "J⁽⁰⁾ = {j0}, gap {gap_j:e}");
    println!(
        "criterion 2: PASS — J⁽⁰⁾ = {j0:.8} (gap {gap_j:.2e}), \
         λ⁽⁰⁾₁(t0) = {lambda0:.7} (gap {gap_lambda:.2e})"
    );
}

// Criterion 3: strictly decreasing cost deltas, final below 1e-12.
#[test]
fn criterion_3_convergence_deltas() {
    let parsed = spacecraft_parsed();
    let solution = solve_hpm(&parsed.problem, &parsed.config).unwrap();
    let deltas = solution.cost_deltas();
    assert!(solution.converged);
    for w in deltas.windows(2) {
        assert!(w[1] < w[0], "deltas not strictly decreasing: {:?}", deltas);
    }
    let last = *deltas.last().unwrap();
    assert!(last < 1e-12, "final delta {last:e} not below 1e-12");
    let shown: Vec<String> = deltas.iter().map(|d| format!("{d:.3e}")).collect();
    println!(
        "criterion 3: PASS — deltas [{}], final {last:.3e}",
        shown.join(", ")
    );
}

// Criterion 4: shooting oracle agreement through the compare pipeline.
#[test]
fn criterion_4_oracle_agreement() {
    let parsed = spacecraft_parsed();
    let out = tempfile::tempdir().unwrap();
    let artifacts = run_compare(&parsed, 0.0, out.path()).unwrap();
    assert_eq!(artifacts.exit_code, 0);
    let oracle = artifacts.summary.oracle.as_ref().expect("oracle block");
    assert!(oracle.converged, "shooting did not converge");
    assert!(
        oracle.iterations <= 10,
        "shooting took {} Newton iterations",
        oracle.iterations
    );
    assert!(
        oracle.sup_state_deviation <= 1e-5,
        "state deviation {:e}",
        oracle.sup_state_deviation
    );
    assert!(oracle.cost_gap <= 1e-8, "cost gap {:e}", oracle.cost_gap);
    println!(
        "criterion 4: PASS — {} iterations, state deviation {:.2e}, cost gap {:.2e}",
        oracle.iterations, oracle.sup_state_deviation, oracle.cost_gap
    );
}

// Criterion 5: terminal angular rates of the simulated plant under the
// converged control.
#[test]
fn criterion_5_terminal_accuracy() {
    let parsed = spacecraft_parsed();
    let solution = solve_hpm(&parsed.problem, &parsed.config).unwrap();
    assert!(solution.converged);
    let last = solution.simulated_state.grid().sample_count() - 1;
    let terminal = solution.simulated_state.sample(last);
    for (i, &w) in terminal.iter().enumerate() {
        assert!(w.abs() <= 1e-5, "|ω_{}(100)| = {:e} above 1e-5", i + 1, w);
    }
    let shown: Vec<String> = terminal.iter().map(|w| format!("{w:.3e}")).collect();
    println!("criterion 5: PASS — terminal rates [{}]", shown.join(", "));
}

// Criterion 6: linear problems collapse to the order-0 solve, which
// matches the analytic scalar LQ reference.
#[test]
fn criterion_6_linear_degeneration() {
    let (a, b, q, r) = (1.0, 1.0, 1.0, 1.0);
    let p: OcpProblem<f64> = OcpProblem::new(
        Matrix::from_rows(&[vec![a]]).unwrap(),
        Matrix::from_rows(&[vec![b]]).unwrap(),
        Matrix::from_rows(&[vec![q]]).unwrap(),
        Matrix::from_rows(&[vec![r]]).unwrap(),
        PolyVectorField::zero(1),
        0.0,
        1.0,
        vec![1.0],
        vec![0.0],
    );
    let cfg = HpmConfig::new(1e-12, 10, 1000);
    let solution = solve_hpm(&p, &cfg).unwrap();
    assert!(solution.converged);
    assert_eq!(solution.achieved_order, 1, "must converge at M = 1");
    for term in &solution.terms[1..] {
        assert!(term.x_term.sup_norm() <= 1e-12);
        assert!(term.lambda_term.sup_norm() <= 1e-12);
    }

    let grid = Grid::new(0.0, 1.0, 1000).unwrap();
    let reference = analytic_scalar_lq(a, b, q, r, 1.0, 0.0, &grid).unwrap();
    let gap = solution.terms[0]
        .x_term
        .max_abs_diff(&reference.x)
        .unwrap()
        .max(
            solution.terms[0]
                .lambda_term
                .max_abs_diff(&reference.lambda)
                .unwrap(),
        );
    assert!(gap <= 1e-9, "order-0 vs analytic gap {gap:e}");
    println!(
        "criterion 6: PASS — converged at M = 1, higher terms zero, \
         analytic gap {gap:.2e}"
    );
}

// Criterion 7: forcing extraction against a finite-difference oracle on
// 50 random quadratic/cubic problems.
#[test]
fn criterion_7_forcing_correctness() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let grid = Grid::new(0.0, 1.0, 2).unwrap();
    let mut worst: f64 = 0.0;
    for case in 0..50 {
        let n_states = rng.gen_range(1..=3);
        let p = shell_problem(random_field(&mut rng, n_states), rng.gen_bool(0.5));
        let jac = differentiate(&p.f);
        let terms = random_series_terms(&mut rng, grid, n_states, 4);
        for order in 1..=4usize {
            let forcing = he_forcing(order, &terms[..order], &p).unwrap();
            let degree = 3 * (order - 1) + 1;
            for i in 0..grid.sample_count() {
                let x_at = |pv: f64| -> Vec<f64> {
                    (0..n_states)
                        .map(|j| {
                            (0..order)
                                .map(|k| terms[k].x_term.value(i, j) * pv.powi(k as i32))
                                .sum()
                        })
                        .collect()
                };
                let lambda_at = |pv: f64| -> Vec<f64> {
                    (0..n_states)
                        .map(|j| {
                            (0..order)
                                .map(|k| terms[k].lambda_term.value(i, j) * pv.powi(k as i32))
                                .sum()
                        })
                        .collect()
                };
                for c in 0..n_states {
                    let state_oracle = fd_series_coefficient(
                        |pv| eval_field(&p.f, &x_at(pv)).unwrap()[c],
                        order - 1,
                        degree,
                    );
                    let rel =
                        (forcing.value(i, c) - state_oracle).abs() / 1.0f64.max(state_oracle.abs());
                    worst = worst.max(rel);
                    assert!(
                        rel <= 1e-6,
                        "case {case} order {order}: state rel err {rel:e}"
                    );

                    let costate_oracle = fd_series_coefficient(
                        |pv| {
                            let jm = jac.eval(&x_at(pv)).unwrap();
                            let lam = lambda_at(pv);
                            let jl = if p.jacobian_transpose {
                                jm.transpose_mul_vec(&lam).unwrap()
                            } else {
                                jm.mul_vec(&lam).unwrap()
                            };
                            jl[c]
                        },
                        order - 1,
                        degree,
                    );
                    let rel = (forcing.value(i, n_states + c) + costate_oracle).abs()
                        / 1.0f64.max(costate_oracle.abs());
                    worst = worst.max(rel);
                    assert!(
                        rel <= 1e-6,
                        "case {case} order {order}: costate rel err {rel:e}"
                    );
                }
            }
        }
    }
    println!("criterion 7: PASS — 50 problems, orders 1–4, worst rel err {worst:.2e}");
}

// Criterion 8: nonlinear residuals of the partial sums decrease
// monotonically over orders 0–4 on the benchmark.
#[test]
fn criterion_8_residual_decay() {
    let parsed = spacecraft_parsed();
    let mut config = parsed.config;
    config.epsilon = 1e-30; // force at least five orders
    config.max_order = 4;
    let solution = solve_hpm(&parsed.problem, &config).unwrap();
    assert_eq!(solution.achieved_order, 4);
    let mut totals = Vec::new();
    for order in 0..=4 {
        let (x, lambda) = solution.partial_sums(order).unwrap();
        let (r1, r2) = residual_norm(&parsed.problem, &x, &lambda).unwrap();
        totals.push(r1 + r2);
    }
    for w in totals.windows(2) {
        assert!(w[1] < w[0], "residuals not decreasing: {totals:?}");
    }
    let shown: Vec<String> = totals.iter().map(|r| format!("{r:.3e}")).collect();
    println!("criterion 8: PASS — residuals [{}]", shown.join(", "));
}

// Criterion 9: numerics floors — matrix exponential on analytic cases,
// fourth-order integrator/quadrature ratios, TPBVP superposition.
#[test]
fn criterion_9_numerics_floor() {
    // Matrix exponential against analytic cases, relative error ≤ 1e-12.
    let nilpotent = Matrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
    let e = mat_exp(&nilpotent, 1.0).unwrap();
    let expected = Matrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
    assert!(e.sub(&expected).unwrap().max_abs() <= 1e-12);

    let rotation = Matrix::from_rows(&[vec![0.0, -1.0], vec![1.0, 0.0]]).unwrap();
    let e = mat_exp(&rotation, std::f64::consts::FRAC_PI_2).unwrap();
    let expected = Matrix::from_rows(&[vec![0.0, -1.0], vec![1.0, 0.0]]).unwrap();
    assert!(e.sub(&expected).unwrap().max_abs() <= 1e-12);

    let diag = Matrix::diagonal(&[1.0, -2.0]);
    let e = mat_exp(&diag, 1.0).unwrap();
    assert!((e[(0, 0)] / 1f64.exp() - 1.0).abs() <= 1e-12);
    assert!((e[(1, 1)] / (-2f64).exp() - 1.0).abs() <= 1e-12);

    // RK4: fourth-order ratio under grid halving.
    let h = Matrix::from_rows(&[vec![1.0]]).unwrap();
    let rk4_err = |n: usize| {
        let grid = Grid::new(0.0, 1.0, n).unwrap();
        let z = rk4_integrate(&h, None, &[1.0], &grid).unwrap();
        (z.value(grid.sample_count() - 1, 0) - std::f64::consts::E).abs()
    };
    let rk4_ratio = rk4_err(50) / rk4_err(100);
    assert!(
        (12.0..=20.0).contains(&rk4_ratio),
        "RK4 ratio {rk4_ratio} outside [12, 20]"
    );

    // Simpson: fourth-order ratio on a quintic.
    let simpson_err = |n: usize| {
        let grid = Grid::new(0.0, 1.0, n).unwrap();
        let traj = Trajectory::from_fn(grid, 1, |t: f64, out| out[0] = t.powi(5));
        (simpson_quadrature(&traj).unwrap() - 1.0 / 6.0).abs()
    };
    let simpson_ratio = simpson_err(4) / simpson_err(8);
    assert!(
        (12.0..=20.0).contains(&simpson_ratio),
        "Simpson ratio {simpson_ratio} outside [12, 20]"
    );

    // Superposition of linear TPBVP solves to 1e-9.
    let p: OcpProblem<f64> = OcpProblem::new(
        Matrix::from_rows(&[vec![0.0, 1.0], vec![-0.5, -0.1]]).unwrap(),
        Matrix::from_rows(&[vec![0.0], vec![1.0]]).unwrap(),
        Matrix::identity(2),
        Matrix::identity(1),
        PolyVectorField::zero(2),
        0.0,
        1.0,
        vec![1.0, 0.0],
        vec![0.0, 0.0],
    );
    let system = build_hamiltonian(&p).unwrap();
    let grid = Grid::new(0.0, 1.0, 400).unwrap();
    let g1 = Trajectory::from_fn(grid, 4, |t, out| {
        out[0] = 1.0 - t;
        out[1] = t * t;
        out[2] = 0.3;
        out[3] = -t;
    });
    let g2 = Trajectory::from_fn(grid, 4, |t, out| {
        out[0] = t;
        out[1] = -0.7;
        out[2] = t * (1.0 - t);
        out[3] = 0.2 * t * t;
    });
    let solve = |g: Trajectory<f64>, a: Vec<f64>, b: Vec<f64>| {
        solve_linear_tpbvp(&LinearTpbvp {
            system: system.clone(),
            forcing: Some(g),
            boundary_initial: a,
            boundary_final: b,
            grid,
        })
        .unwrap()
    };
    let (x1, l1) = solve(g1.clone(), vec![1.0, 0.0], vec![0.0, 0.5]);
    let (x2, l2) = solve(g2.clone(), vec![-0.2, 0.4], vec![0.3, 0.0]);
    let (x12, l12) = solve(g1.try_add(&g2).unwrap(), vec![0.8, 0.4], vec![0.3, 0.5]);
    let superposition_gap = x12
        .max_abs_diff(&x1.try_add(&x2).unwrap())
        .unwrap()
        .max(l12.max_abs_diff(&l1.try_add(&l2).unwrap()).unwrap());
    assert!(
        superposition_gap <= 1e-9,
        "superposition gap {superposition_gap:e}"
    );

    println!(
        "criterion 9: PASS — exp floors ≤ 1e-12, RK4 ratio {rk4_ratio:.1}, \
         Simpson ratio {simpson_ratio:.1}, superposition gap {superposition_gap:.2e}"
    );
}
