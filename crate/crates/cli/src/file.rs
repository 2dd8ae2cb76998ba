//! Problem files: a JSON document declaring the matrices, the polynomial
//! nonlinearity as `{component, coefficient, exponents}` records, the
//! boundary data, and optional solver overrides.
//!
//! Numbers are written with 17 significant digits so a written file
//! re-parses to bit-identical `f64` values.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use hpmoc::hpm::HpmConfig;
use hpmoc::numerics::Matrix;
use hpmoc::problem::{validate, Monomial, OcpProblem, PolyVectorField, ValidationCode};
use hpmoc::spacecraft;

use crate::CliError;

pub const DEFAULT_EPSILON: f64 = 1e-12;
pub const DEFAULT_MAX_ORDER: usize = 10;
pub const DEFAULT_GRID_INTERVALS: usize = 1000;

/// One monomial of the nonlinearity; `component` is 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonomialRecord {
    pub component: usize,
    pub coefficient: f64,
    pub exponents: Vec<u32>,
}

/// The on-disk problem document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub n: usize,
    pub m: usize,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    #[serde(rename = "Q")]
    pub q: Vec<Vec<f64>>,
    #[serde(rename = "R")]
    pub r: Vec<Vec<f64>>,
    pub nonlinearity: Vec<MonomialRecord>,
    pub x0: Vec<f64>,
    pub xf: Vec<f64>,
    pub t0: f64,
    pub tf: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_order: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_intervals: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jacobian_transpose: Option<bool>,
}

/// A fully validated problem plus the solver settings it came with.
#[derive(Debug, Clone)]
pub struct ParsedProblem {
    pub name: String,
    pub problem: OcpProblem<f64>,
    pub config: HpmConfig<f64>,
}

/// Reads and fully validates a problem file. All violations are reported
/// together, each addressed to the offending field or record.
pub fn parse_problem(path: &Path) -> Result<ParsedProblem, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let file: ProblemFile = serde_json::from_str(&text).map_err(|e| CliError::Syntax {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let name = file
        .name
        .clone()
        .or_else(|| path.file_stem().map(|s| s.to_string_lossy().into_owned()))
        .unwrap_or_else(|| "problem".to_string());
    let (problem, config) = file_to_problem(&file)?;
    Ok(ParsedProblem {
        name,
        problem,
        config,
    })
}

/// Converts the document into a validated problem and config.
pub fn file_to_problem(file: &ProblemFile) -> Result<(OcpProblem<f64>, HpmConfig<f64>), CliError> {
    let mut issues = Vec::new();
    let (n, m) = (file.n, file.m);
    if n == 0 {
        issues.push("n: state dimension must be positive".to_string());
    }
    if m == 0 {
        issues.push("m: control dimension must be positive".to_string());
    }

    let check_shape =
        |name: &str, rows: &[Vec<f64>], nr: usize, nc: usize, issues: &mut Vec<String>| {
            if rows.len() != nr {
                issues.push(format!("{name}: expected {nr} rows, found {}", rows.len()));
                return;
            }
            for (i, row) in rows.iter().enumerate() {
                if row.len() != nc {
                    issues.push(format!(
                        "{name}[{i}]: expected {nc} columns, found {}",
                        row.len()
                    ));
                }
            }
        };
    check_shape("A", &file.a, n, n, &mut issues);
    check_shape("B", &file.b, n, m, &mut issues);
    check_shape("Q", &file.q, n, n, &mut issues);
    check_shape("R", &file.r, m, m, &mut issues);
    if file.x0.len() != n {
        issues.push(format!("x0: expected {n} entries, found {}", file.x0.len()));
    }
    if file.xf.len() != n {
        issues.push(format!("xf: expected {n} entries, found {}", file.xf.len()));
    }
    for (i, record) in file.nonlinearity.iter().enumerate() {
        if record.component == 0 || record.component > n {
            issues.push(format!(
                "nonlinearity[{i}]: component {} out of range 1..={n}",
                record.component
            ));
        }
        if record.exponents.len() != n {
            issues.push(format!(
                "nonlinearity[{i}]: exponents length {} does not match n = {n}",
                record.exponents.len()
            ));
        }
    }
    if let Some(eps) = file.epsilon {
        if !(eps > 0.0) || !eps.is_finite() {
            issues.push(format!("epsilon: must be positive and finite, got {eps}"));
        }
    }
    if let Some(g) = file.grid_intervals {
        if g < 2 {
            issues.push(format!("grid_intervals: must be at least 2, got {g}"));
        }
    }
    if !issues.is_empty() {
        return Err(CliError::Invalid { issues });
    }

    let mut components: Vec<Vec<Monomial<f64>>> = vec![Vec::new(); n];
    let mut record_at: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, record) in file.nonlinearity.iter().enumerate() {
        components[record.component - 1]
            .push(Monomial::new(record.coefficient, record.exponents.clone()));
        record_at[record.component - 1].push(i);
    }
    let field = PolyVectorField::new(n, components).expect("component count checked");

    let problem = OcpProblem::new(
        matrix_from_rows(&file.a),
        matrix_from_rows(&file.b),
        matrix_from_rows(&file.q),
        matrix_from_rows(&file.r),
        field,
        file.t0,
        file.tf,
        file.x0.clone(),
        file.xf.clone(),
    )
    .with_jacobian_transpose(file.jacobian_transpose.unwrap_or(true));

    let core_issues = validate(&problem);
    if !core_issues.is_empty() {
        let issues = core_issues
            .iter()
            .map(|issue| {
                let field = match issue.code {
                    ValidationCode::QNotSymmetric | ValidationCode::QNotPsd => "Q",
                    ValidationCode::RNotSymmetric | ValidationCode::RNotPd => "R",
                    ValidationCode::HorizonNotPositive => "t0/tf",
                    ValidationCode::MonomialDegreeLt2
                    | ValidationCode::MonomialDegreeGtMax
                    | ValidationCode::MonomialCoefficientInvalid => "nonlinearity",
                    _ => "problem",
                };
                // Point monomial issues at their document record.
                let located = if field == "nonlinearity" {
                    locate_monomial(&issue.detail, &record_at)
                        .map(|idx| format!("nonlinearity[{idx}]"))
                        .unwrap_or_else(|| field.to_string())
                } else {
                    field.to_string()
                };
                format!("{located}: {issue}")
            })
            .collect();
        return Err(CliError::Invalid { issues });
    }

    let config = HpmConfig {
        epsilon: file.epsilon.unwrap_or(DEFAULT_EPSILON),
        max_order: file.max_order.unwrap_or(DEFAULT_MAX_ORDER),
        grid_intervals: file.grid_intervals.unwrap_or(DEFAULT_GRID_INTERVALS),
        jacobian_transpose: file.jacobian_transpose.unwrap_or(true),
    };
    Ok((problem, config))
}

/// Maps a core monomial-issue detail ("monomial k of f component c") back
/// to the originating document record index.
fn locate_monomial(detail: &str, record_at: &[Vec<usize>]) -> Option<usize> {
    let words: Vec<&str> = detail.split_whitespace().collect();
    let mono_idx: usize = words.get(1)?.parse().ok()?;
    let comp: usize = words.get(5)?.trim_end_matches(':').parse().ok()?;
    record_at.get(comp - 1)?.get(mono_idx).copied()
}

fn matrix_from_rows(rows: &[Vec<f64>]) -> Matrix<f64> {
    Matrix::from_rows(rows).expect("shape checked before construction")
}

/// Rebuilds a document from a problem, config, and name.
pub fn problem_to_file(name: &str, p: &OcpProblem<f64>, cfg: &HpmConfig<f64>) -> ProblemFile {
    let n = p.state_dim();
    let m = p.control_dim();
    let to_rows = |mat: &Matrix<f64>| -> Vec<Vec<f64>> {
        (0..mat.rows()).map(|i| mat.row(i).to_vec()).collect()
    };
    let mut nonlinearity = Vec::new();
    for (c, monos) in p.f.components().iter().enumerate() {
        for mono in monos {
            nonlinearity.push(MonomialRecord {
                component: c + 1,
                coefficient: mono.coefficient,
                exponents: mono.exponents.clone(),
            });
        }
    }
    ProblemFile {
        name: Some(name.to_string()),
        n,
        m,
        a: to_rows(&p.a),
        b: to_rows(&p.b),
        q: to_rows(&p.q),
        r: to_rows(&p.r),
        nonlinearity,
        x0: p.x0.clone(),
        xf: p.xf.clone(),
        t0: p.t0,
        tf: p.tf,
        epsilon: Some(cfg.epsilon),
        max_order: Some(cfg.max_order),
        grid_intervals: Some(cfg.grid_intervals),
        jacobian_transpose: Some(cfg.jacobian_transpose),
    }
}

/// The bundled benchmark document.
pub fn spacecraft_file() -> ProblemFile {
    problem_to_file(
        "spacecraft",
        &spacecraft::problem::<f64>(),
        &spacecraft::config::<f64>(),
    )
}

/// Writes the document with every number at 17 significant digits.
pub fn write_problem_file(file: &ProblemFile, path: &Path) -> Result<(), CliError> {
    let text = render_problem_file(file);
    std::fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_matrix(rows: &[Vec<f64>], indent: &str) -> String {
    let body = rows
        .iter()
        .map(|row| {
            let entries = row
                .iter()
                .map(|&v| fmt_f64(v))
                .collect::<Vec<_>>()
                .join(", ");
            format!("{indent}  [{entries}]")
        })
        .collect::<Vec<_>>()
        .join(",\n");
    format!("[\n{body}\n{indent}]")
}

/// Fixed-schema pretty printer; string content goes through the JSON
/// serializer so escaping stays correct.
fn render_problem_file(file: &ProblemFile) -> String {
    let mut s = String::new();
    s.push_str("{\n");
    if let Some(name) = &file.name {
        let _ = writeln!(
            s,
            "  \"name\": {},",
            serde_json::to_string(name).expect("string serializes")
        );
    }
    let _ = writeln!(s, "  \"n\": {},", file.n);
    let _ = writeln!(s, "  \"m\": {},", file.m);
    let _ = writeln!(s, "  \"A\": {},", fmt_matrix(&file.a, "  "));
    let _ = writeln!(s, "  \"B\": {},", fmt_matrix(&file.b, "  "));
    let _ = writeln!(s, "  \"Q\": {},", fmt_matrix(&file.q, "  "));
    let _ = writeln!(s, "  \"R\": {},", fmt_matrix(&file.r, "  "));
    if file.nonlinearity.is_empty() {
        s.push_str("  \"nonlinearity\": [],\n");
    } else {
        s.push_str("  \"nonlinearity\": [\n");
        let records = file
            .nonlinearity
            .iter()
            .map(|r| {
                let exps = r
                    .exponents
                    .iter()
                    .map(u32::to_string)
                    .collect::<Vec<_>>()
                    .join(", ");
                format!(
                    "    {{\"component\": {}, \"coefficient\": {}, \"exponents\": [{exps}]}}",
                    r.component,
                    fmt_f64(r.coefficient)
                )
            })
            .collect::<Vec<_>>()
            .join(",\n");
        s.push_str(&records);
        s.push_str("\n  ],\n");
    }
    let vec_line = |v: &[f64]| v.iter().map(|&x| fmt_f64(x)).collect::<Vec<_>>().join(", ");
    let _ = writeln!(s, "  \"x0\": [{}],", vec_line(&file.x0));
    let _ = writeln!(s, "  \"xf\": [{}],", vec_line(&file.xf));
    let _ = writeln!(s, "  \"t0\": {},", fmt_f64(file.t0));
    let _ = writeln!(s, "  \"tf\": {},", fmt_f64(file.tf));
    if let Some(eps) = file.epsilon {
        let _ = writeln!(s, "  \"epsilon\": {},", fmt_f64(eps));
    }
    if let Some(cap) = file.max_order {
        let _ = writeln!(s, "  \"max_order\": {cap},");
    }
    if let Some(g) = file.grid_intervals {
        let _ = writeln!(s, "  \"grid_intervals\": {g},");
    }
    if let Some(t) = file.jacobian_transpose {
        let _ = writeln!(s, "  \"jacobian_transpose\": {t}");
    }
    s.push_str("}\n");
    s
}
