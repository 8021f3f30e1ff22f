//! Full pipeline for a registry case.

use std::fmt::Write;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::determine::{self, AnsatzSpec, DetermineError, SpanComparison, SymmetryBasis};
use crate::frontend::registry::{self, CompareMode, LoadedCase, RegistryError};
use crate::frontend::report::{self, bracket_grid, GeneratorJson, SparseConstants, SCHEMA};
use crate::liealgebra::{classify, structure_constants, AlgebraReport, StructureConstants};
use crate::reduction::{self, ReductionError};
use crate::symcore::rational::format_rational;
use crate::symcore::SymExpr;
use crate::vectorfield::{OdeSystem, VectorField};
use crate::verifynum::{check_solution_mapping, MappingSetup};

/// Controls must miss the tolerance by this factor.
pub const CONTROL_MARGIN: f64 = 1e3;

#[derive(Clone, Copy, Debug)]
pub struct RunOptions {
    pub numeric: bool,
    pub reduce: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            numeric: true,
            reduce: true,
        }
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error("{case}: {source}")]
    Determine {
        case: String,
        source: DetermineError,
    },
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

fn check(name: &str, pass: bool, detail: impl Into<String>) -> Check {
    Check {
        name: name.into(),
        pass,
        detail: detail.into(),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AlgebraSection {
    pub structure_constants: SparseConstants,
    #[serde(flatten)]
    pub report: AlgebraReport,
    #[serde(skip)]
    pub table: StructureConstants,
}

impl AlgebraSection {
    pub fn new(sc: StructureConstants) -> Self {
        AlgebraSection {
            structure_constants: SparseConstants::new(&sc),
            report: classify(&sc),
            table: sc,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ReductionSection {
    pub pivot: usize,
    pub omega: Vec<String>,
    pub window: String,
    pub dim: usize,
    pub generators: Vec<GeneratorJson>,
    pub candidate: Option<String>,
    pub nonlocal: Option<String>,
    pub xi: Option<String>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct NumericCheck {
    pub field: String,
    pub pass: bool,
    pub max_deviation: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct NumericSection {
    pub epsilon: f64,
    pub step: f64,
    pub tol: f64,
    pub generators: Vec<NumericCheck>,
    pub controls: Vec<NumericCheck>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CaseReport {
    pub schema: &'static str,
    pub case: String,
    pub title: String,
    pub window: String,
    pub dim: usize,
    pub rank: usize,
    pub rows: usize,
    pub generators: Vec<GeneratorJson>,
    pub superposition_family: bool,
    pub comparison: String,
    /// Found generators completing the expected span to the found one.
    pub surplus: Vec<GeneratorJson>,
    pub expected_algebra: Option<AlgebraSection>,
    #[serde(serialize_with = "algebra_or_error")]
    pub found_algebra: Result<AlgebraSection, String>,
    pub reduction: Option<ReductionSection>,
    pub numeric: Option<NumericSection>,
    pub checks: Vec<Check>,
    pub pass: bool,
    pub notes: String,
}

/// Serializes a closure failure as `{"error": ..}`.
pub fn algebra_or_error<S: serde::Serializer>(
    value: &Result<AlgebraSection, String>,
    s: S,
) -> Result<S::Ok, S::Error> {
    #[derive(Serialize)]
    struct Failed<'a> {
        error: &'a str,
    }
    match value {
        Ok(a) => a.serialize(s),
        Err(e) => Failed { error: e }.serialize(s),
    }
}

fn surplus(basis: &SymmetryBasis, expected: &[VectorField]) -> Vec<VectorField> {
    let mut e = crate::linalg::Echelon::new(basis.ansatz.len());
    for f in expected {
        if let Ok(v) = basis.ansatz.project(f) {
            e.insert_dense(&v);
        }
    }
    basis
        .fields
        .iter()
        .zip(&basis.coeff_vectors)
        .filter(|(_, v)| e.insert_dense(v))
        .map(|(f, _)| f.clone())
        .collect()
}

/// Runs the solution-mapping check for each field.
pub fn numeric_checks(
    sys: &OdeSystem,
    fields: &[VectorField],
    setup: &MappingSetup,
    control: bool,
) -> Vec<NumericCheck> {
    fields
        .par_iter()
        .map(|f| match check_solution_mapping(sys, f, setup) {
            Ok(r) => NumericCheck {
                field: f.to_string(),
                pass: if control {
                    r.max_deviation >= CONTROL_MARGIN * setup.tol
                } else {
                    r.pass
                },
                max_deviation: Some(r.max_deviation),
                error: None,
            },
            Err(e) => NumericCheck {
                field: f.to_string(),
                pass: false,
                max_deviation: None,
                error: Some(e.to_string()),
            },
        })
        .collect()
}

/// Reduction pipeline with the registry window.
pub fn reduction_section(sys: &OdeSystem, pivot: usize, window: &str) -> ReductionSection {
    let mut out = ReductionSection {
        pivot,
        omega: vec![],
        window: window.into(),
        dim: 0,
        generators: vec![],
        candidate: None,
        nonlocal: None,
        xi: None,
        error: None,
    };
    let run = |out: &mut ReductionSection| -> Result<(), ReductionError> {
        let rs = reduction::reduce_order(sys, pivot)?;
        out.omega = vec![
            rs.omega(1).to_string(),
            rs.omega(2).to_string(),
            rs.omega6().to_string(),
        ];
        let spec = AnsatzSpec::parse(window, rs.ring())?;
        out.window = spec.describe(rs.ring());
        let basis = reduction::find_reduced_symmetries(&rs, &spec)?;
        out.dim = basis.dim();
        out.generators = report::generators(&basis.fields);
        let candidate = reduction::krause_candidate(&rs, &basis)?;
        out.candidate = Some(candidate.to_string());
        let generator = reduction::reconstruct_nonlocal(&rs, &candidate)?;
        out.nonlocal = Some(generator.to_string());
        out.xi = Some(format_rational(&generator.xi));
        Ok(())
    };
    if let Err(e) = run(&mut out) {
        out.error = Some(e.to_string());
    }
    out
}

pub fn run_case(name: &str, opts: RunOptions) -> Result<CaseReport, RunError> {
    let loaded = registry::lookup(name)?.load()?;
    run_loaded(&loaded, opts)
}

pub fn run_loaded(loaded: &LoadedCase, opts: RunOptions) -> Result<CaseReport, RunError> {
    let entry = &loaded.entry;
    let sys = &loaded.system;
    let ring = sys.ring();
    let basis =
        determine::find_symmetries(sys, &loaded.spec).map_err(|source| RunError::Determine {
            case: entry.name.into(),
            source,
        })?;
    let mut checks = Vec::new();

    let comparison = determine::span_compare(&basis, &loaded.expected);
    let comparison_text = match &comparison {
        Ok(c) => c.to_string(),
        Err(e) => format!("window too small: {e}"),
    };
    let span_ok = matches!(
        (&comparison, entry.compare),
        (Ok(SpanComparison::Equal), _)
            | (Ok(SpanComparison::Contains { .. }), CompareMode::Contains)
    );
    let mode = match entry.compare {
        CompareMode::Equal => "equal",
        CompareMode::Contains => "contains",
    };
    checks.push(check(
        &format!("span {mode}"),
        span_ok,
        comparison_text.clone(),
    ));
    if let Some(d) = entry.expected_dim {
        checks.push(check(
            "dimension",
            basis.dim() == d,
            format!("found {}, expected {d}", basis.dim()),
        ));
    }
    for f in &loaded.absent {
        let symmetric = f.residual(sys).iter().all(SymExpr::is_zero);
        let inside = basis.contains(f);
        let pass = !symmetric && matches!(inside, Ok(false));
        let detail = match inside {
            Ok(c) => format!("{f}: symmetry {symmetric}, in span {c}"),
            Err(e) => format!("{f}: {e}"),
        };
        checks.push(check("absent", pass, detail));
    }

    let expected_algebra = if entry.brackets.is_some() || entry.algebra.is_some() {
        match structure_constants(&loaded.expected) {
            Ok(sc) => {
                if let Some(table) = &entry.brackets {
                    let want = StructureConstants::from_brackets(
                        sc.dim(),
                        &table
                            .iter()
                            .map(|b| {
                                (
                                    b.i - 1,
                                    b.j - 1,
                                    b.result.iter().map(|(k, c)| (k - 1, c.clone())).collect(),
                                )
                            })
                            .collect::<Vec<_>>(),
                    );
                    checks.push(check(
                        "brackets",
                        want == sc,
                        if want == sc {
                            "match".to_string()
                        } else {
                            format!("computed {:?}", SparseConstants::new(&sc).0)
                        },
                    ));
                }
                let section = AlgebraSection::new(sc);
                if let Some(label) = entry.algebra {
                    let got = section.report.recognized.to_string();
                    checks.push(check(
                        "algebra",
                        got == label,
                        format!("{got} (expected {label})"),
                    ));
                }
                Some(section)
            }
            Err(e) => {
                checks.push(check("brackets", false, e.to_string()));
                None
            }
        }
    } else {
        None
    };
    let found_algebra = structure_constants(&basis.fields)
        .map(AlgebraSection::new)
        .map_err(|e| e.to_string());

    let reduction = match (&entry.xi, entry.reduction_window, opts.reduce) {
        (Some(xi), Some(window), true) => {
            let section = reduction_section(sys, 3, window);
            let want = format_rational(xi);
            let pass = section.xi.as_deref() == Some(want.as_str());
            let detail = match (&section.xi, &section.error) {
                (Some(got), _) => format!("xi = {got} (expected {want})"),
                (None, Some(e)) => e.clone(),
                _ => "no result".into(),
            };
            checks.push(check("xi", pass, detail));
            Some(section)
        }
        _ => None,
    };

    let numeric = match (&entry.numeric, opts.numeric) {
        (Some(fx), true) => {
            let setup = MappingSetup::new(fx.t0, &fx.x0, &fx.v0, fx.span, fx.epsilon);
            let generators = numeric_checks(sys, &basis.fields, &setup, false);
            let controls = numeric_checks(sys, &loaded.controls, &setup, true);
            let worst = generators
                .iter()
                .filter_map(|c| c.max_deviation)
                .fold(0.0f64, f64::max);
            checks.push(check(
                "numeric generators",
                generators.iter().all(|c| c.pass),
                format!(
                    "{} of {} pass, worst deviation {worst:.2e} (tol {:.0e})",
                    generators.iter().filter(|c| c.pass).count(),
                    generators.len(),
                    setup.tol
                ),
            ));
            if !controls.is_empty() {
                let least = controls
                    .iter()
                    .map(|c| c.max_deviation.unwrap_or(f64::NAN))
                    .fold(f64::INFINITY, f64::min);
                checks.push(check(
                    "numeric controls",
                    controls.iter().all(|c| c.pass),
                    format!("smallest control deviation {least:.2e}"),
                ));
            }
            Some(NumericSection {
                epsilon: setup.epsilon,
                step: setup.step,
                tol: setup.tol,
                generators,
                controls,
            })
        }
        _ => None,
    };

    let pass = checks.iter().all(|c| c.pass);
    Ok(CaseReport {
        schema: SCHEMA,
        case: entry.name.into(),
        title: entry.title.into(),
        window: loaded.spec.describe(ring),
        dim: basis.dim(),
        rank: basis.rank,
        rows: basis.rows,
        generators: report::generators(&basis.fields),
        superposition_family: basis.superposition_family,
        comparison: comparison_text,
        surplus: report::generators(&surplus(&basis, &loaded.expected)),
        expected_algebra,
        found_algebra,
        reduction,
        numeric,
        checks,
        pass,
        notes: entry.notes.into(),
    })
}

pub fn field_line(g: &GeneratorJson, names: &[String]) -> String {
    let mut parts = Vec::new();
    if g.tau != "0" {
        parts.push(format!("({}) d/d{}", g.tau, names[0]));
    }
    for (e, n) in g.eta.iter().zip(&names[1..]) {
        if e != "0" {
            parts.push(format!("({e}) d/d{n}"));
        }
    }
    if parts.is_empty() {
        "0".into()
    } else {
        parts.join(" + ")
    }
}

/// Human-readable rendering of a case report.
pub fn render_text(r: &CaseReport, names: &[String]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "case {}: {}", r.case, r.title);
    let _ = writeln!(out, "window {}", r.window);
    let _ = writeln!(
        out,
        "dimension {} (rank {}, {} equations)",
        r.dim, r.rank, r.rows
    );
    for (i, g) in r.generators.iter().enumerate() {
        let _ = writeln!(out, "  X{} = {}", i + 1, field_line(g, names));
    }
    if r.superposition_family {
        let _ = writeln!(
            out,
            "linear equation: infinite-dimensional superposition family exists"
        );
    }
    let _ = writeln!(out, "comparison: {}", r.comparison);
    for g in &r.surplus {
        let _ = writeln!(out, "  surplus {}", field_line(g, names));
    }
    if let Some(a) = &r.expected_algebra {
        let _ = writeln!(out, "expected generators: {}", a.report.recognized);
        out.push_str(&bracket_grid(&a.table));
    }
    match &r.found_algebra {
        Ok(a) => {
            let _ = writeln!(
                out,
                "found algebra: {} (derived series {:?}, center {}, Killing signature (+{}, -{}, 0:{}))",
                a.report.recognized,
                a.report.derived_series,
                a.report.center_dim,
                a.report.killing_signature.positive,
                a.report.killing_signature.negative,
                a.report.killing_signature.zero
            );
        }
        Err(e) => {
            let _ = writeln!(out, "found algebra: {e}");
        }
    }
    if let Some(red) = &r.reduction {
        let _ = writeln!(out, "reduction (pivot x{}):", red.pivot);
        for (name, w) in ["u1''", "u2''", "u6'"].iter().zip(&red.omega) {
            let _ = writeln!(out, "  {name} = {w}");
        }
        let _ = writeln!(out, "  reduced symmetries: {} in {}", red.dim, red.window);
        if let Some(c) = &red.candidate {
            let _ = writeln!(out, "  scaling: {c}");
        }
        if let Some(y) = &red.nonlocal {
            let _ = writeln!(out, "  nonlocal: {y}");
        }
        if let Some(e) = &red.error {
            let _ = writeln!(out, "  error: {e}");
        }
    }
    if let Some(n) = &r.numeric {
        let _ = writeln!(
            out,
            "numeric (eps {}, step {:e}, tol {:e}):",
            n.epsilon, n.step, n.tol
        );
        for (label, list) in [("generator", &n.generators), ("control", &n.controls)] {
            for c in list.iter() {
                let dev = c.max_deviation.map_or_else(
                    || c.error.clone().unwrap_or_default(),
                    |d| format!("{d:.2e}"),
                );
                let _ = writeln!(
                    out,
                    "  {} {label} {}: {dev}",
                    if c.pass { "ok  " } else { "FAIL" },
                    c.field
                );
            }
        }
    }
    for c in &r.checks {
        let _ = writeln!(
            out,
            "{} {}: {}",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    if !r.notes.is_empty() {
        let _ = writeln!(out, "note: {}", r.notes);
    }
    let _ = writeln!(out, "result: {}", if r.pass { "PASS" } else { "FAIL" });
    out
}

/// Variable names `t, x1, ..` (or `x, u`) used in text rendering.
pub fn slot_names(sys: &OdeSystem) -> Vec<String> {
    let ring = sys.ring();
    (0..=ring.n())
        .map(|s| ring.slot_name(s).to_string())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monopole_case() {
        let r = run_case("monopole", RunOptions::default()).unwrap();
        assert!(r.pass, "{:#?}", r.checks);
        assert_eq!(r.dim, 6);
        let a = r.expected_algebra.as_ref().unwrap();
        assert_eq!(a.report.recognized.to_string(), "direct_sum(so3, sl2R)");
        assert_eq!(r.reduction.as_ref().unwrap().xi.as_deref(), Some("2"));
    }

    #[test]
    fn unknown_case() {
        assert!(matches!(
            run_case("nope", RunOptions::default()),
            Err(RunError::Registry(RegistryError::Unknown(_)))
        ));
    }

    #[test]
    fn json_is_deterministic() {
        let opts = RunOptions {
            numeric: false,
            reduce: true,
        };
        let a = serde_json::to_string(&run_case("magnetic_linear", opts).unwrap()).unwrap();
        let b = serde_json::to_string(&run_case("magnetic_linear", opts).unwrap()).unwrap();
        assert_eq!(a, b);
        let v: serde_json::Value = serde_json::from_str(&a).unwrap();
        assert_eq!(v["schema"], SCHEMA);
        assert_eq!(
            v["expected_algebra"]["structure_constants"][0],
            serde_json::json!([1, 2, 3, "1"])
        );
    }
}
