//! Dense small-matrix linear algebra, the matrix exponential, fixed-step
//! staggered-grid integration, and Simpson quadrature.
//!
//! Everything in this crate samples functions of time on one grid
//! convention: `N` uniform intervals of width `h` plus the interval
//! midpoints, `2N + 1` points in total. Classical fourth-order
//! Runge-Kutta steps between nodes then read their stage forcing at
//! exactly `t`, `t + h/2`, and `t + h` without interpolation.

use crate::error::{Error, Result};
use crate::{real, Real};

/// Relative pivot threshold below which elimination reports singularity.
pub const SINGULAR_PIVOT_REL: f64 = 1e-13;

/// Relative tolerance for the symmetry checks in `check_pd`/`check_psd`.
pub const SYMMETRY_REL_TOL: f64 = 1e-12;

// ---------------------------------------------------------------------------
// Matrix
// ---------------------------------------------------------------------------

/// Dense row-major matrix of `Real` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn diagonal(entries: &[T]) -> Self {
        let mut m = Self::zeros(entries.len(), entries.len());
        for (i, &e) in entries.iter().enumerate() {
            m[(i, i)] = e;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Builds a matrix from nested rows; all rows must share one length.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        for (i, row) in rows.iter().enumerate() {
            if row.len() != c {
                return Err(Error::Dimension(format!(
                    "row {i} has {} entries, expected {c}",
                    row.len()
                )));
            }
        }
        Ok(Self {
            rows: r,
            cols: c,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| v * s).collect(),
        }
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        self.check_same_shape(rhs)?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(&a, &b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        self.check_same_shape(rhs)?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(&a, &b)| a - b)
                .collect(),
        })
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::Dimension(format!(
                "matmul: {}x{} times {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[T]) -> Result<Vec<T>> {
        if v.len() != self.cols {
            return Err(Error::Dimension(format!(
                "mul_vec: {}x{} times vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        let mut out = vec![T::zero(); self.rows];
        self.mul_vec_into(v, &mut out);
        Ok(out)
    }

    /// `out = M v` without allocating; lengths are the caller's contract.
    pub(crate) fn mul_vec_into(&self, v: &[T], out: &mut [T]) {
        for (i, o) in out.iter_mut().enumerate() {
            let row = self.row(i);
            *o = row.iter().zip(v).map(|(&a, &b)| a * b).sum();
        }
    }

    /// `out = Mᵀ v` without forming the transpose.
    pub fn transpose_mul_vec(&self, v: &[T]) -> Result<Vec<T>> {
        if v.len() != self.rows {
            return Err(Error::Dimension(format!(
                "transpose_mul_vec: {}x{} transposed times vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        let mut out = vec![T::zero(); self.cols];
        for i in 0..self.rows {
            let vi = v[i];
            for (j, o) in out.iter_mut().enumerate() {
                *o += self[(i, j)] * vi;
            }
        }
        Ok(out)
    }

    /// Maximum absolute row sum.
    pub fn inf_norm(&self) -> T {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|v| v.abs()).sum())
            .fold(T::zero(), T::max)
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().map(|v| v.abs()).fold(T::zero(), T::max)
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `|m_ij - m_ji| <= rel_tol * max|m|` for every pair.
    pub fn is_symmetric(&self, rel_tol: T) -> bool {
        if !self.is_square() {
            return false;
        }
        let scale = self.max_abs();
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let gap = (self[(i, j)] - self[(j, i)]).abs();
                if !(gap <= rel_tol * scale) {
                    return false;
                }
            }
        }
        true
    }

    fn check_same_shape(&self, rhs: &Self) -> Result<()> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(Error::Dimension(format!(
                "shape mismatch: {}x{} vs {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        Ok(())
    }

    /// Copies the `nr`×`nc` block with top-left corner `(r0, c0)`.
    pub fn block(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> Self {
        Self::from_fn(nr, nc, |i, j| self[(r0 + i, c0 + j)])
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, block: &Self) {
        for i in 0..block.rows {
            for j in 0..block.cols {
                self[(r0 + i, c0 + j)] = block[(i, j)];
            }
        }
    }
}

impl<T: Real> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T: Real> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

// ---------------------------------------------------------------------------
// Factorizations and solves
// ---------------------------------------------------------------------------

/// Solves `M x = rhs` by Gaussian elimination with partial pivoting.
///
/// A pivot of magnitude at most `1e-13 * ‖M‖∞` reports a singular matrix.
pub fn solve_linear<T: Real>(m: &Matrix<T>, rhs: &[T]) -> Result<Vec<T>> {
    solve_linear_in(m, rhs, "solve_linear")
}

pub(crate) fn solve_linear_in<T: Real>(
    m: &Matrix<T>,
    rhs: &[T],
    context: &'static str,
) -> Result<Vec<T>> {
    if !m.is_square() {
        return Err(Error::Dimension(format!(
            "{context}: matrix is {}x{}, expected square",
            m.rows, m.cols
        )));
    }
    let n = m.rows;
    if rhs.len() != n {
        return Err(Error::Dimension(format!(
            "{context}: rhs length {} does not match order {n}",
            rhs.len()
        )));
    }

    let threshold = real::<T>(SINGULAR_PIVOT_REL) * m.inf_norm();
    let mut a = m.clone();
    let mut b = rhs.to_vec();

    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&r, &s| {
                a[(r, col)]
                    .abs()
                    .partial_cmp(&a[(s, col)].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap();
        let pivot = a[(pivot_row, col)];
        if !(pivot.abs() > threshold) {
            return Err(Error::Singular {
                context,
                pivot: pivot.abs().to_f64().unwrap_or(f64::NAN),
                threshold: threshold.to_f64().unwrap_or(f64::NAN),
            });
        }
        if pivot_row != col {
            for j in 0..n {
                let tmp = a[(col, j)];
                a[(col, j)] = a[(pivot_row, j)];
                a[(pivot_row, j)] = tmp;
            }
            b.swap(col, pivot_row);
        }
        for row in (col + 1)..n {
            let factor = a[(row, col)] / pivot;
            if factor == T::zero() {
                continue;
            }
            for j in col..n {
                let v = a[(col, j)];
                a[(row, j)] -= factor * v;
            }
            let bc = b[col];
            b[row] -= factor * bc;
        }
    }

    for col in (0..n).rev() {
        let mut sum = b[col];
        for k in (col + 1)..n {
            sum -= a[(col, k)] * b[k];
        }
        b[col] = sum / a[(col, col)];
    }
    Ok(b)
}

/// Lower Cholesky factor of a symmetric matrix, or `None` when any pivot
/// fails to be strictly positive.
fn cholesky<T: Real>(m: &Matrix<T>) -> Option<Matrix<T>> {
    let n = m.rows;
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > T::zero()) {
            return None;
        }
        let dj = d.sqrt();
        l[(j, j)] = dj;
        for i in (j + 1)..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / dj;
        }
    }
    Some(l)
}

/// Strict positive definiteness via an unshifted Cholesky attempt.
///
/// Errors when the input is not symmetric within `1e-12` relative
/// tolerance.
pub fn check_pd<T: Real>(m: &Matrix<T>) -> Result<bool> {
    require_symmetric(m, "check_pd")?;
    Ok(m.all_finite() && cholesky(m).is_some())
}

/// Positive semidefiniteness via Cholesky of `M + δI` with
/// `δ = 1e-12 * max(1, ‖M‖∞)`.
pub fn check_psd<T: Real>(m: &Matrix<T>) -> Result<bool> {
    require_symmetric(m, "check_psd")?;
    if !m.all_finite() {
        return Ok(false);
    }
    let delta = real::<T>(1e-12) * T::one().max(m.inf_norm());
    let shifted = m.add(&Matrix::identity(m.rows).scale(delta))?;
    Ok(cholesky(&shifted).is_some())
}

fn require_symmetric<T: Real>(m: &Matrix<T>, what: &'static str) -> Result<()> {
    if !m.is_square() {
        return Err(Error::Dimension(format!(
            "{what}: matrix is {}x{}, expected square",
            m.rows, m.cols
        )));
    }
    if !m.is_symmetric(real(SYMMETRY_REL_TOL)) {
        return Err(Error::NotSymmetric(what));
    }
    Ok(())
}

/// Solves `M X = B` for symmetric positive definite `M` via Cholesky.
pub(crate) fn spd_solve<T: Real>(
    m: &Matrix<T>,
    b: &Matrix<T>,
    what: &'static str,
) -> Result<Matrix<T>> {
    if m.rows != b.rows {
        return Err(Error::Dimension(format!(
            "{what}: {}x{} system with {}x{} right-hand side",
            m.rows, m.cols, b.rows, b.cols
        )));
    }
    let l = cholesky(m).ok_or(Error::NotPositiveDefinite(what))?;
    let n = m.rows;
    let mut x = b.clone();
    // Forward substitution L Y = B.
    for col in 0..x.cols() {
        for i in 0..n {
            let mut s = x[(i, col)];
            for k in 0..i {
                s -= l[(i, k)] * x[(k, col)];
            }
            x[(i, col)] = s / l[(i, i)];
        }
        // Back substitution Lᵀ X = Y.
        for i in (0..n).rev() {
            let mut s = x[(i, col)];
            for k in (i + 1)..n {
                s -= l[(k, i)] * x[(k, col)];
            }
            x[(i, col)] = s / l[(i, i)];
        }
    }
    Ok(x)
}

// ---------------------------------------------------------------------------
// Matrix exponential
// ---------------------------------------------------------------------------

/// Computes `e^{Mt}` by scaling and squaring with a Taylor core.
///
/// The argument is halved until its infinity norm is at most `0.5`; the
/// series then converges to machine precision in under twenty terms and
/// the result is squared back up.
pub fn mat_exp<T: Real>(m: &Matrix<T>, t: T) -> Result<Matrix<T>> {
    if !m.is_square() {
        return Err(Error::Dimension(format!(
            "mat_exp: matrix is {}x{}, expected square",
            m.rows, m.cols
        )));
    }
    if !t.is_finite() || !m.all_finite() {
        return Err(Error::Dimension(
            "mat_exp: non-finite matrix entry or time".to_string(),
        ));
    }
    let n = m.rows;
    let scaled_norm = m.inf_norm() * t.abs();
    let half = real::<T>(0.5);
    let mut squarings = 0u32;
    let mut norm = scaled_norm;
    while norm > half {
        norm *= half;
        squarings += 1;
    }
    let factor = t / real::<T>(f64::powi(2.0, squarings as i32));
    let x = m.scale(factor);

    let mut result = Matrix::identity(n);
    let mut term = Matrix::identity(n);
    for k in 1..=30 {
        term = term.matmul(&x)?.scale(T::one() / real::<T>(k as f64));
        result = result.add(&term)?;
        if term.inf_norm() <= T::epsilon() * result.inf_norm() {
            break;
        }
    }
    for _ in 0..squarings {
        result = result.matmul(&result)?;
    }
    Ok(result)
}

// ---------------------------------------------------------------------------
// Grid and trajectories
// ---------------------------------------------------------------------------

/// Uniform time grid of `N ≥ 2` intervals sampled at the `N + 1` nodes and
/// the `N` interval midpoints: `2N + 1` strictly increasing points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid<T> {
    t0: T,
    tf: T,
    intervals: usize,
}

impl<T: Real> Grid<T> {
    pub fn new(t0: T, tf: T, intervals: usize) -> Result<Self> {
        if !t0.is_finite() || !tf.is_finite() || !(tf > t0) {
            return Err(Error::Dimension(format!(
                "grid: need finite tf > t0, got t0 = {t0}, tf = {tf}"
            )));
        }
        if intervals < 2 {
            return Err(Error::Dimension(format!(
                "grid: need at least 2 intervals, got {intervals}"
            )));
        }
        Ok(Self { t0, tf, intervals })
    }

    pub fn t0(&self) -> T {
        self.t0
    }

    pub fn tf(&self) -> T {
        self.tf
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    /// Node spacing `h = (tf - t0) / N`.
    pub fn step(&self) -> T {
        (self.tf - self.t0) / real(self.intervals as f64)
    }

    pub fn sample_count(&self) -> usize {
        2 * self.intervals + 1
    }

    /// Time of sample `i`; even indices are nodes, odd ones midpoints.
    pub fn sample_time(&self, i: usize) -> T {
        if i == 2 * self.intervals {
            self.tf
        } else {
            self.t0 + real::<T>(i as f64) * self.step() * real(0.5)
        }
    }
}

/// A vector-valued function of time sampled on a staggered [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    grid: Grid<T>,
    dim: usize,
    data: Vec<T>,
}

impl<T: Real> Trajectory<T> {
    pub fn zeros(grid: Grid<T>, dim: usize) -> Self {
        let count = grid.sample_count();
        Self {
            grid,
            dim,
            data: vec![T::zero(); count * dim],
        }
    }

    /// Fills each sample from `f(t, out)`.
    pub fn from_fn(grid: Grid<T>, dim: usize, mut f: impl FnMut(T, &mut [T])) -> Self {
        let mut traj = Self::zeros(grid, dim);
        for i in 0..grid.sample_count() {
            let t = grid.sample_time(i);
            f(t, traj.sample_mut(i));
        }
        traj
    }

    /// Builds from raw row-major samples, checking count and finiteness.
    pub fn from_samples(grid: Grid<T>, dim: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != grid.sample_count() * dim {
            return Err(Error::Dimension(format!(
                "trajectory: {} values for {} samples of dimension {dim}",
                data.len(),
                grid.sample_count()
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::Dimension(
                "trajectory: non-finite sample value".to_string(),
            ));
        }
        Ok(Self { grid, dim, data })
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sample(&self, i: usize) -> &[T] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn sample_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn value(&self, i: usize, k: usize) -> T {
        self.data[i * self.dim + k]
    }

    pub fn sup_norm(&self) -> T {
        self.data.iter().map(|v| v.abs()).fold(T::zero(), T::max)
    }

    pub fn try_add(&self, rhs: &Self) -> Result<Self> {
        self.check_compatible(rhs)?;
        let mut out = self.clone();
        for (a, &b) in out.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
        Ok(out)
    }

    pub fn add_assign_traj(&mut self, rhs: &Self) -> Result<()> {
        self.check_compatible(rhs)?;
        for (a, &b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
        Ok(())
    }

    /// Largest componentwise deviation from `rhs` over all samples.
    pub fn max_abs_diff(&self, rhs: &Self) -> Result<T> {
        self.check_compatible(rhs)?;
        Ok(self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(&a, &b)| (a - b).abs())
            .fold(T::zero(), T::max))
    }

    /// Splits a `dim`-vector trajectory into leading `n` and trailing
    /// `dim - n` components.
    pub fn split(&self, n: usize) -> Result<(Self, Self)> {
        if n > self.dim {
            return Err(Error::Dimension(format!(
                "split at {n} exceeds dimension {}",
                self.dim
            )));
        }
        let count = self.grid.sample_count();
        let mut head = Self::zeros(self.grid, n);
        let mut tail = Self::zeros(self.grid, self.dim - n);
        for i in 0..count {
            let s = self.sample(i);
            head.sample_mut(i).copy_from_slice(&s[..n]);
            tail.sample_mut(i).copy_from_slice(&s[n..]);
        }
        Ok((head, tail))
    }

    fn check_compatible(&self, rhs: &Self) -> Result<()> {
        if self.grid != rhs.grid || self.dim != rhs.dim {
            return Err(Error::Dimension(
                "trajectories differ in grid or dimension".to_string(),
            ));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Staggered RK4 march
// ---------------------------------------------------------------------------

/// Cubic interpolation of a sampled signal at the quarter point
/// `t_j + h/4` of interval `j` (spacing between samples is `h/2`).
fn quarter_sample<T: Real>(signal: &Trajectory<T>, interval: usize, out: &mut [T]) {
    let (idx, w): ([usize; 4], [f64; 4]) = if interval == 0 {
        (
            [0, 1, 2, 3],
            [5.0 / 16.0, 15.0 / 16.0, -5.0 / 16.0, 1.0 / 16.0],
        )
    } else {
        let b = 2 * interval;
        (
            [b - 1, b, b + 1, b + 2],
            [-1.0 / 16.0, 9.0 / 16.0, 9.0 / 16.0, -1.0 / 16.0],
        )
    };
    for o in out.iter_mut() {
        *o = T::zero();
    }
    for (&i, &wi) in idx.iter().zip(&w) {
        let s = signal.sample(i);
        let wt = real::<T>(wi);
        for (o, &v) in out.iter_mut().zip(s) {
            *o += wt * v;
        }
    }
}

/// One classical RK4 step of size `h` with per-stage forcing samples
/// `(g1, g23, g4)` handed to the right-hand side.
#[allow(clippy::too_many_arguments)]
fn rk4_step<T: Real, F>(
    rhs: &mut F,
    y: &[T],
    h: T,
    g1: Option<&[T]>,
    g23: Option<&[T]>,
    g4: Option<&[T]>,
    scratch: &mut StepScratch<T>,
    out: &mut [T],
) where
    F: FnMut(&[T], Option<&[T]>, &mut [T]),
{
    let half = h * real(0.5);
    let sixth = h / real(6.0);
    let two = real::<T>(2.0);
    let StepScratch {
        k1,
        k2,
        k3,
        k4,
        ytmp,
    } = scratch;

    rhs(y, g1, k1);
    for i in 0..y.len() {
        ytmp[i] = y[i] + half * k1[i];
    }
    rhs(ytmp, g23, k2);
    for i in 0..y.len() {
        ytmp[i] = y[i] + half * k2[i];
    }
    rhs(ytmp, g23, k3);
    for i in 0..y.len() {
        ytmp[i] = y[i] + h * k3[i];
    }
    rhs(ytmp, g4, k4);
    for i in 0..y.len() {
        out[i] = y[i] + sixth * (k1[i] + two * (k2[i] + k3[i]) + k4[i]);
    }
}

struct StepScratch<T> {
    k1: Vec<T>,
    k2: Vec<T>,
    k3: Vec<T>,
    k4: Vec<T>,
    ytmp: Vec<T>,
}

impl<T: Real> StepScratch<T> {
    fn new(dim: usize) -> Self {
        Self {
            k1: vec![T::zero(); dim],
            k2: vec![T::zero(); dim],
            k3: vec![T::zero(); dim],
            k4: vec![T::zero(); dim],
            ytmp: vec![T::zero(); dim],
        }
    }
}

/// Marches `ẏ = rhs(y, forcing)` forward over the staggered grid.
///
/// Node values advance node-to-node with full steps whose stage forcing
/// comes straight from the signal samples. Each midpoint value is a
/// half-step side computation from its left node, with the quarter-point
/// stage forcing cubic-interpolated from neighbouring samples, so every
/// returned sample is fourth-order accurate.
///
/// With `max_norm` set, any computed sample whose magnitude exceeds the
/// bound (or fails to be finite) aborts with a divergence error.
pub(crate) fn rk4_march<T: Real, F>(
    grid: &Grid<T>,
    y0: &[T],
    signal: Option<&Trajectory<T>>,
    max_norm: Option<T>,
    mut rhs: F,
) -> Result<Trajectory<T>>
where
    F: FnMut(&[T], Option<&[T]>, &mut [T]),
{
    let dim = y0.len();
    if let Some(sig) = signal {
        if sig.grid() != grid {
            return Err(Error::Dimension(
                "forcing signal sampled on a different grid".to_string(),
            ));
        }
    }
    let h = grid.step();
    let mut traj = Trajectory::zeros(*grid, dim);
    traj.sample_mut(0).copy_from_slice(y0);

    let mut scratch = StepScratch::new(dim);
    let sig_dim = signal.map_or(0, |s| s.dim());
    let mut quarter = vec![T::zero(); sig_dim];
    let mut node = vec![T::zero(); dim];
    let mut next = vec![T::zero(); dim];

    for j in 0..grid.intervals() {
        node.copy_from_slice(traj.sample(2 * j));

        let (g_node, g_mid, g_next, g_quarter) = match signal {
            Some(sig) => {
                quarter_sample(sig, j, &mut quarter);
                (
                    Some(sig.sample(2 * j)),
                    Some(sig.sample(2 * j + 1)),
                    Some(sig.sample(2 * j + 2)),
                    Some(quarter.as_slice()),
                )
            }
            None => (None, None, None, None),
        };

        // Midpoint: half step from the node.
        rk4_step(
            &mut rhs,
            &node,
            h * real(0.5),
            g_node,
            g_quarter,
            g_mid,
            &mut scratch,
            &mut next,
        );
        traj.sample_mut(2 * j + 1).copy_from_slice(&next);
        check_bounded(&next, max_norm, grid.sample_time(2 * j + 1))?;

        // Next node: full step, forcing read at exact samples.
        rk4_step(
            &mut rhs,
            &node,
            h,
            g_node,
            g_mid,
            g_next,
            &mut scratch,
            &mut next,
        );
        traj.sample_mut(2 * j + 2).copy_from_slice(&next);
        check_bounded(&next, max_norm, grid.sample_time(2 * j + 2))?;
    }
    Ok(traj)
}

fn check_bounded<T: Real>(y: &[T], max_norm: Option<T>, t: T) -> Result<()> {
    let Some(limit) = max_norm else {
        return Ok(());
    };
    if y.iter().any(|v| !v.is_finite() || v.abs() > limit) {
        return Err(Error::Divergence {
            time: t.to_f64().unwrap_or(f64::NAN),
            limit: limit.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(())
}

/// Integrates the linear system `ż = Hz + g(t)` forward from `z0`.
///
/// The forcing, when present, must be sampled on the integration grid
/// (nodes and midpoints), which lets every full RK4 stage use an exact
/// sample; see [`rk4_march`] for how midpoints are produced.
pub fn rk4_integrate<T: Real>(
    h_mat: &Matrix<T>,
    g: Option<&Trajectory<T>>,
    z0: &[T],
    grid: &Grid<T>,
) -> Result<Trajectory<T>> {
    if !h_mat.is_square() || h_mat.rows() != z0.len() {
        return Err(Error::Dimension(format!(
            "rk4_integrate: {}x{} system matrix with state of length {}",
            h_mat.rows(),
            h_mat.cols(),
            z0.len()
        )));
    }
    if let Some(gt) = g {
        if gt.dim() != z0.len() {
            return Err(Error::Dimension(format!(
                "rk4_integrate: forcing dimension {} does not match state {}",
                gt.dim(),
                z0.len()
            )));
        }
    }
    rk4_march(grid, z0, g, None, |y, forcing, out| {
        h_mat.mul_vec_into(y, out);
        if let Some(f) = forcing {
            for (o, &v) in out.iter_mut().zip(f) {
                *o += v;
            }
        }
    })
}

// ---------------------------------------------------------------------------
// Quadrature
// ---------------------------------------------------------------------------

/// Composite Simpson integral of a scalar trajectory, using each
/// node–midpoint–node triple as one panel. Exact for piecewise cubics.
pub fn simpson_quadrature<T: Real>(values: &Trajectory<T>) -> Result<T> {
    if values.dim() != 1 {
        return Err(Error::Dimension(format!(
            "simpson_quadrature: dimension {} trajectory, expected 1",
            values.dim()
        )));
    }
    let grid = values.grid();
    let weight = grid.step() / real(6.0);
    let four = real::<T>(4.0);
    let mut total = T::zero();
    for j in 0..grid.intervals() {
        let a = values.value(2 * j, 0);
        let m = values.value(2 * j + 1, 0);
        let b = values.value(2 * j + 2, 0);
        total += weight * (a + four * m + b);
    }
    Ok(total)
}
