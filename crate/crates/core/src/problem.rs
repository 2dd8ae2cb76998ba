//! The optimal control problem class: constant matrices, a polynomial
//! nonlinearity with `f(0) = 0`, fixed boundary states, and validation.

use std::fmt;

use crate::error::{Error, Result};
use crate::numerics::{check_pd, check_psd, Matrix, SYMMETRY_REL_TOL};
use crate::{real, Real};

/// Largest admissible total degree of a monomial of `f`.
pub const MAX_MONOMIAL_DEGREE: u32 = 8;

/// One term `c · ∏ⱼ xⱼ^{eⱼ}` of a polynomial component.
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial<T> {
    pub coefficient: T,
    /// Power of each state variable; length equals the state dimension.
    pub exponents: Vec<u32>,
}

impl<T: Real> Monomial<T> {
    pub fn new(coefficient: T, exponents: Vec<u32>) -> Self {
        Self {
            coefficient,
            exponents,
        }
    }

    pub fn total_degree(&self) -> u32 {
        self.exponents.iter().sum()
    }

    /// Evaluates the monomial; `x` must match the exponent length.
    fn eval(&self, x: &[T]) -> T {
        let mut v = self.coefficient;
        for (&xi, &e) in x.iter().zip(&self.exponents) {
            if e > 0 {
                v *= xi.powi(e as i32);
            }
        }
        v
    }
}

/// Sparse monomial representation of the nonlinearity `f : Rⁿ → Rⁿ`.
///
/// Every monomial has total degree at least two (enforced by
/// [`validate`]), so `f(0) = 0` holds structurally.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyVectorField<T> {
    dim: usize,
    components: Vec<Vec<Monomial<T>>>,
}

impl<T: Real> PolyVectorField<T> {
    pub fn new(dim: usize, components: Vec<Vec<Monomial<T>>>) -> Result<Self> {
        if components.len() != dim {
            return Err(Error::Dimension(format!(
                "field has {} components, expected {dim}",
                components.len()
            )));
        }
        Ok(Self { dim, components })
    }

    /// The identically zero field (no monomials).
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            components: vec![Vec::new(); dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> &[Vec<Monomial<T>>] {
        &self.components
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(Vec::is_empty)
    }

    fn exponents_consistent(&self) -> bool {
        self.components
            .iter()
            .flatten()
            .all(|m| m.exponents.len() == self.dim)
    }
}

/// Evaluates `f(x)` componentwise.
pub fn eval_field<T: Real>(f: &PolyVectorField<T>, x: &[T]) -> Result<Vec<T>> {
    if x.len() != f.dim {
        return Err(Error::Dimension(format!(
            "eval_field: point of length {} for field of dimension {}",
            x.len(),
            f.dim
        )));
    }
    if !f.exponents_consistent() {
        return Err(Error::Dimension(
            "eval_field: monomial exponent length differs from field dimension".to_string(),
        ));
    }
    let mut out = vec![T::zero(); f.dim];
    eval_field_into(f, x, &mut out);
    Ok(out)
}

/// `out = f(x)` without allocation; dimensions are the caller's contract.
pub(crate) fn eval_field_into<T: Real>(f: &PolyVectorField<T>, x: &[T], out: &mut [T]) {
    for (o, comp) in out.iter_mut().zip(&f.components) {
        *o = comp.iter().map(|m| m.eval(x)).sum();
    }
}

/// The symbolic Jacobian of a [`PolyVectorField`]: entry `(i, j)` holds
/// the monomials of `∂fᵢ/∂xⱼ`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyMatrixField<T> {
    dim: usize,
    entries: Vec<Vec<Monomial<T>>>,
}

impl<T: Real> PolyMatrixField<T> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, i: usize, j: usize) -> &[Monomial<T>] {
        &self.entries[i * self.dim + j]
    }

    /// Evaluates the Jacobian matrix at `x`.
    pub fn eval(&self, x: &[T]) -> Result<Matrix<T>> {
        if x.len() != self.dim {
            return Err(Error::Dimension(format!(
                "jacobian eval: point of length {} for dimension {}",
                x.len(),
                self.dim
            )));
        }
        let mut m = Matrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                m[(i, j)] = self.entry(i, j).iter().map(|mono| mono.eval(x)).sum();
            }
        }
        Ok(m)
    }
}

/// Differentiates the field symbolically: `c·∏ xₖ^{eₖ}` contributes
/// `c·eⱼ·xⱼ^{eⱼ-1}·∏_{k≠j} xₖ^{eₖ}` to column `j` whenever `eⱼ ≥ 1`.
pub fn differentiate<T: Real>(f: &PolyVectorField<T>) -> PolyMatrixField<T> {
    let n = f.dim;
    let mut entries = vec![Vec::new(); n * n];
    for (i, comp) in f.components.iter().enumerate() {
        for mono in comp {
            for (j, &e) in mono.exponents.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let mut exps = mono.exponents.clone();
                exps[j] = e - 1;
                entries[i * n + j].push(Monomial::new(mono.coefficient * real(e as f64), exps));
            }
        }
    }
    PolyMatrixField { dim: n, entries }
}

/// A complete problem instance.
///
/// Dynamics `ẋ = A x + B u + f(x)` with both endpoint states fixed, under
/// the cost `½∫(xᵀQx + uᵀRu) dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct OcpProblem<T> {
    pub a: Matrix<T>,
    pub b: Matrix<T>,
    pub q: Matrix<T>,
    pub r: Matrix<T>,
    pub f: PolyVectorField<T>,
    pub t0: T,
    pub tf: T,
    pub x0: Vec<T>,
    pub xf: Vec<T>,
    /// Whether the costate equation couples through the transposed
    /// Jacobian `(∂f/∂x)ᵀ λ` (the stationarity form, default) or the
    /// untransposed `(∂f/∂x) λ`.
    pub jacobian_transpose: bool,
}

impl<T: Real> OcpProblem<T> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        a: Matrix<T>,
        b: Matrix<T>,
        q: Matrix<T>,
        r: Matrix<T>,
        f: PolyVectorField<T>,
        t0: T,
        tf: T,
        x0: Vec<T>,
        xf: Vec<T>,
    ) -> Self {
        Self {
            a,
            b,
            q,
            r,
            f,
            t0,
            tf,
            x0,
            xf,
            jacobian_transpose: true,
        }
    }

    pub fn with_jacobian_transpose(mut self, transpose: bool) -> Self {
        self.jacobian_transpose = transpose;
        self
    }

    /// State dimension `n`.
    pub fn state_dim(&self) -> usize {
        self.a.rows()
    }

    /// Control dimension `m`.
    pub fn control_dim(&self) -> usize {
        self.b.cols()
    }
}

/// Machine-readable validation failure codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValidationCode {
    QNotSymmetric,
    QNotPsd,
    RNotSymmetric,
    RNotPd,
    DimensionMismatch,
    HorizonNotPositive,
    MonomialDegreeLt2,
    MonomialDegreeGtMax,
    MonomialCoefficientInvalid,
    NonFiniteEntry,
}

impl ValidationCode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::QNotSymmetric => "Q_NOT_SYMMETRIC",
            Self::QNotPsd => "Q_NOT_PSD",
            Self::RNotSymmetric => "R_NOT_SYMMETRIC",
            Self::RNotPd => "R_NOT_PD",
            Self::DimensionMismatch => "DIMENSION_MISMATCH",
            Self::HorizonNotPositive => "HORIZON_NOT_POSITIVE",
            Self::MonomialDegreeLt2 => "MONOMIAL_DEGREE_LT_2",
            Self::MonomialDegreeGtMax => "MONOMIAL_DEGREE_GT_MAX",
            Self::MonomialCoefficientInvalid => "MONOMIAL_COEFFICIENT_INVALID",
            Self::NonFiniteEntry => "NONFINITE_ENTRY",
        }
    }

    /// Remediation hint, when one exists.
    pub fn hint(&self) -> Option<&'static str> {
        match self {
            Self::MonomialDegreeLt2 => Some("fold linear terms into A"),
            _ => None,
        }
    }
}

impl fmt::Display for ValidationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One validation violation: a code plus the offending location/detail.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationIssue {
    pub code: ValidationCode,
    pub detail: String,
}

impl ValidationIssue {
    fn new(code: ValidationCode, detail: impl Into<String>) -> Self {
        Self {
            code,
            detail: detail.into(),
        }
    }
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code, self.detail)?;
        if let Some(hint) = self.code.hint() {
            write!(f, " ({hint})")?;
        }
        Ok(())
    }
}

/// Checks every problem invariant and returns all violations found.
///
/// Total: malformed numeric content (NaN, infinities, inconsistent
/// shapes) produces issues, never a panic. An empty list means the
/// problem is valid.
pub fn validate<T: Real>(p: &OcpProblem<T>) -> Vec<ValidationIssue> {
    use ValidationCode::*;

    let mut issues = Vec::new();
    let n = p.a.rows();
    let m = p.b.cols();

    if !p.a.is_square() {
        issues.push(ValidationIssue::new(
            DimensionMismatch,
            format!("A is {}x{}, expected square", p.a.rows(), p.a.cols()),
        ));
    }
    if p.b.rows() != n {
        issues.push(ValidationIssue::new(
            DimensionMismatch,
            format!("B has {} rows, expected n = {n}", p.b.rows()),
        ));
    }
    if p.q.rows() != n || p.q.cols() != n {
        issues.push(ValidationIssue::new(
            DimensionMismatch,
            format!("Q is {}x{}, expected {n}x{n}", p.q.rows(), p.q.cols()),
        ));
    }
    if p.r.rows() != m || p.r.cols() != m {
        issues.push(ValidationIssue::new(
            DimensionMismatch,
            format!("R is {}x{}, expected {m}x{m}", p.r.rows(), p.r.cols()),
        ));
    }
    if p.x0.len() != n {
        issues.push(ValidationIssue::new(
            DimensionMismatch,
            format!("x0 has length {}, expected n = {n}", p.x0.len()),
        ));
    }
    if p.xf.len() != n {
        issues.push(ValidationIssue::new(
            DimensionMismatch,
            format!("xf has length {}, expected n = {n}", p.xf.len()),
        ));
    }
    if p.f.dim() != n {
        issues.push(ValidationIssue::new(
            DimensionMismatch,
            format!("f has dimension {}, expected n = {n}", p.f.dim()),
        ));
    }

    for (name, mat) in [("A", &p.a), ("B", &p.b), ("Q", &p.q), ("R", &p.r)] {
        if !mat.all_finite() {
            issues.push(ValidationIssue::new(
                NonFiniteEntry,
                format!("{name} contains a non-finite entry"),
            ));
        }
    }
    for (name, vec) in [("x0", &p.x0), ("xf", &p.xf)] {
        if !vec.iter().all(|v| v.is_finite()) {
            issues.push(ValidationIssue::new(
                NonFiniteEntry,
                format!("{name} contains a non-finite entry"),
            ));
        }
    }

    if !(p.t0.is_finite() && p.tf.is_finite() && p.tf > p.t0) {
        issues.push(ValidationIssue::new(
            HorizonNotPositive,
            format!("need finite tf > t0, got t0 = {}, tf = {}", p.t0, p.tf),
        ));
    }

    let sym_tol = real::<T>(SYMMETRY_REL_TOL);
    let q_ok = p.q.is_square() && p.q.all_finite();
    if q_ok && !p.q.is_symmetric(sym_tol) {
        issues.push(ValidationIssue::new(QNotSymmetric, "Q is not symmetric"));
    } else if q_ok && !check_psd(&p.q).unwrap_or(false) {
        issues.push(ValidationIssue::new(
            QNotPsd,
            "Q is not positive semidefinite",
        ));
    }
    let r_ok = p.r.is_square() && p.r.all_finite();
    if r_ok && !p.r.is_symmetric(sym_tol) {
        issues.push(ValidationIssue::new(RNotSymmetric, "R is not symmetric"));
    } else if r_ok && !check_pd(&p.r).unwrap_or(false) {
        issues.push(ValidationIssue::new(RNotPd, "R is not positive definite"));
    }

    for (ci, comp) in p.f.components().iter().enumerate() {
        for (mi, mono) in comp.iter().enumerate() {
            let at = format!("monomial {mi} of f component {}", ci + 1);
            if mono.exponents.len() != p.f.dim() {
                issues.push(ValidationIssue::new(
                    DimensionMismatch,
                    format!(
                        "{at}: exponent vector has length {}, expected {}",
                        mono.exponents.len(),
                        p.f.dim()
                    ),
                ));
                continue;
            }
            let degree = mono.total_degree();
            if degree < 2 {
                issues.push(ValidationIssue::new(
                    MonomialDegreeLt2,
                    format!("{at}: total degree {degree} < 2"),
                ));
            }
            if degree > MAX_MONOMIAL_DEGREE {
                issues.push(ValidationIssue::new(
                    MonomialDegreeGtMax,
                    format!("{at}: total degree {degree} > {MAX_MONOMIAL_DEGREE}"),
                ));
            }
            if !mono.coefficient.is_finite() || mono.coefficient == T::zero() {
                issues.push(ValidationIssue::new(
                    MonomialCoefficientInvalid,
                    format!("{at}: coefficient must be finite and nonzero"),
                ));
            }
        }
    }

    issues
}

/// Validates and wraps all violations into an [`Error`].
pub(crate) fn require_valid<T: Real>(p: &OcpProblem<T>) -> Result<()> {
    let issues = validate(p);
    if issues.is_empty() {
        Ok(())
    } else {
        Err(Error::InvalidProblem(issues))
    }
}
