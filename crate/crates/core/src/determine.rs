//! Ansatz construction, determining equations and their exact solution.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use num_traits::Zero;
use rayon::prelude::*;
use thiserror::Error;

use crate::linalg::{self, Echelon};
use crate::symcore::rational::{int, parse_rational, primitive_integer_vector};
use crate::symcore::{lcm_denominators, Monomial, Rational, Ring, SymExpr, VarId};
use crate::vectorfield::{OdeSystem, VectorField};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DetermineError {
    #[error("empty ansatz window for `{0}` (min > max)")]
    EmptyWindow(String),
    #[error("the ansatz window contains no monomials")]
    NoMonomials,
    #[error("radical monomials requested but the system has no radical")]
    NoRadical,
    #[error("window has {expected} entries, system needs {got}")]
    WindowArity { expected: usize, got: usize },
    #[error("cannot parse window `{0}`")]
    BadWindow(String),
    #[error("field component {component} term `{term}` lies outside the ansatz window")]
    OutsideWindow { component: String, term: String },
    #[error("solver produced a field with nonzero residual: {0}")]
    Unverified(String),
}

/// Exponent window for the ansatz monomials of `tau` and `eta`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnsatzSpec {
    /// `(min, max)` exponent of the independent variable then of each
    /// dependent variable.
    pub windows: Vec<(i32, i32)>,
    /// Cap on the total degree of a monomial.
    pub total_degree: Option<i32>,
    /// Also use each monomial multiplied by `r`.
    pub allow_radical: bool,
}

impl AnsatzSpec {
    /// Every point variable in `0..=2`, total degree at most 2.
    pub fn default_for(n: usize) -> Self {
        AnsatzSpec {
            windows: vec![(0, 2); n + 1],
            total_degree: Some(2),
            allow_radical: false,
        }
    }

    pub fn uniform(n: usize, min: i32, max: i32, total_degree: Option<i32>) -> Self {
        AnsatzSpec {
            windows: vec![(min, max); n + 1],
            total_degree,
            allow_radical: false,
        }
    }

    /// Parses `name:min..max` entries separated by commas, plus `total:N`
    /// and `radical`. `x` addresses every coordinate of an ode system.
    /// Variables not mentioned keep the window `0..2`; the total-degree cap
    /// applies only when given.
    pub fn parse(text: &str, ring: &Ring) -> Result<Self, DetermineError> {
        let n = ring.n();
        let mut spec = AnsatzSpec {
            windows: vec![(0, 2); n + 1],
            total_degree: None,
            allow_radical: false,
        };
        let bad = || DetermineError::BadWindow(text.to_string());
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            if item == "radical" {
                spec.allow_radical = true;
                continue;
            }
            let (name, value) = item.split_once(':').ok_or_else(bad)?;
            let (name, value) = (name.trim(), value.trim());
            if name == "total" {
                spec.total_degree = match value {
                    "none" => None,
                    v => Some(int_of(v).ok_or_else(bad)?),
                };
                continue;
            }
            let (lo, hi) = value.split_once("..").ok_or_else(bad)?;
            let range = (int_of(lo).ok_or_else(bad)?, int_of(hi).ok_or_else(bad)?);
            let slots: Vec<usize> = match ring.lookup(name) {
                Some(VarId::Indep) => vec![0],
                Some(VarId::Coord(a)) => vec![a],
                _ if name == "x" => (1..=n).collect(),
                _ => return Err(bad()),
            };
            for s in slots {
                spec.windows[s] = range;
            }
        }
        Ok(spec)
    }

    pub fn describe(&self, ring: &Ring) -> String {
        let mut parts: Vec<String> = self
            .windows
            .iter()
            .enumerate()
            .map(|(s, (lo, hi))| format!("{}:{lo}..{hi}", ring.slot_name(s)))
            .collect();
        if let Some(d) = self.total_degree {
            parts.push(format!("total:{d}"));
        }
        if self.allow_radical {
            parts.push("radical".into());
        }
        parts.join(",")
    }
}

fn int_of(s: &str) -> Option<i32> {
    let r = parse_rational(s.trim())?;
    r.is_integer().then(|| r.to_integer().try_into().ok())?
}

/// One unknown coefficient: component (0 = tau, a = eta_a) times monomial.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Unknown {
    pub component: usize,
    pub monomial: Monomial,
}

/// Parametric field: every component is a full combination of the window
/// monomials with distinct unknowns.
#[derive(Clone, Debug)]
pub struct Ansatz {
    ring: Arc<Ring>,
    monomials: Vec<Monomial>,
    unknowns: Vec<Unknown>,
}

impl Ansatz {
    pub fn build(spec: &AnsatzSpec, ring: &Arc<Ring>) -> Result<Self, DetermineError> {
        let n = ring.n();
        if spec.windows.len() != n + 1 {
            return Err(DetermineError::WindowArity {
                expected: spec.windows.len(),
                got: n + 1,
            });
        }
        for (s, (lo, hi)) in spec.windows.iter().enumerate() {
            if lo > hi {
                return Err(DetermineError::EmptyWindow(ring.slot_name(s).into()));
            }
        }
        if spec.allow_radical && !ring.has_radical() {
            return Err(DetermineError::NoRadical);
        }
        let nvars = ring.nvars();
        let mut set = BTreeSet::new();
        let mut exps = vec![0i32; n + 1];
        enumerate(&spec.windows, 0, &mut exps, &mut |e| {
            let deg: i32 = e.iter().sum();
            if spec.total_degree.is_some_and(|cap| deg > cap) {
                return;
            }
            let mut m = Monomial::one(nvars);
            for (s, &k) in e.iter().enumerate() {
                m.set_exp(s, k);
            }
            set.insert(m);
        });
        if spec.allow_radical {
            let rslot = ring.radical_slot().unwrap();
            let with_r: Vec<Monomial> = set
                .iter()
                .filter(|m| spec.total_degree.is_none_or(|cap| m.degree() < cap))
                .map(|m| {
                    let mut m = m.clone();
                    m.set_exp(rslot, 1);
                    m
                })
                .collect();
            set.extend(with_r);
        }
        if set.is_empty() {
            return Err(DetermineError::NoMonomials);
        }
        let monomials: Vec<Monomial> = set.into_iter().collect();
        let unknowns = (0..=n)
            .flat_map(|component| {
                monomials.iter().map(move |m| Unknown {
                    component,
                    monomial: m.clone(),
                })
            })
            .collect();
        Ok(Ansatz {
            ring: ring.clone(),
            monomials,
            unknowns,
        })
    }

    pub fn ring(&self) -> &Arc<Ring> {
        &self.ring
    }

    pub fn unknowns(&self) -> &[Unknown] {
        &self.unknowns
    }

    pub fn monomials(&self) -> &[Monomial] {
        &self.monomials
    }

    pub fn len(&self) -> usize {
        self.unknowns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.unknowns.is_empty()
    }

    /// The field whose only nonzero coefficient is unknown `k`.
    pub fn basis_field(&self, k: usize) -> VectorField {
        let u = &self.unknowns[k];
        let coeff = SymExpr::from_monomial(&self.ring, u.monomial.clone(), int(1));
        VectorField::component(&self.ring, u.component, coeff)
    }

    /// Renders a coefficient vector.
    pub fn render(&self, coeffs: &[Rational]) -> VectorField {
        assert_eq!(coeffs.len(), self.len());
        let n = self.ring.n();
        let mut comps: Vec<SymExpr> = (0..=n).map(|_| SymExpr::zero(&self.ring)).collect();
        for (u, c) in self.unknowns.iter().zip(coeffs) {
            if !c.is_zero() {
                comps[u.component] = &comps[u.component]
                    + SymExpr::from_monomial(&self.ring, u.monomial.clone(), c.clone());
            }
        }
        let tau = comps.remove(0);
        VectorField::new(tau, comps)
    }

    /// Coefficient vector of a field inside the window.
    pub fn project(&self, field: &VectorField) -> Result<Vec<Rational>, DetermineError> {
        let mut out = vec![Rational::zero(); self.len()];
        let per = self.monomials.len();
        for (component, expr) in field.components().enumerate() {
            let outside = |term: String| DetermineError::OutsideWindow {
                component: if component == 0 {
                    "tau".into()
                } else {
                    format!("eta{component}")
                },
                term,
            };
            if !expr.is_polynomial() {
                return Err(outside(expr.to_string()));
            }
            for (m, c) in expr.numerator().terms() {
                match self.monomials.binary_search(m) {
                    Ok(i) => out[component * per + i] = c.clone(),
                    Err(_) => {
                        let term = SymExpr::from_monomial(&self.ring, m.clone(), c.clone());
                        return Err(outside(term.to_string()));
                    }
                }
            }
        }
        Ok(out)
    }
}

fn enumerate(windows: &[(i32, i32)], i: usize, exps: &mut Vec<i32>, f: &mut impl FnMut(&[i32])) {
    if i == windows.len() {
        f(exps);
        return;
    }
    for k in windows[i].0..=windows[i].1 {
        exps[i] = k;
        enumerate(windows, i + 1, exps, f);
    }
}

/// One determining equation: the coefficient of `monomial` in the cleared
/// residual of equation `equation`.
#[derive(Clone, Debug)]
pub struct Row {
    pub equation: usize,
    pub monomial: Monomial,
    pub entries: Vec<(usize, Rational)>,
}

#[derive(Clone, Debug)]
pub struct DeterminingSystem {
    pub ansatz: Ansatz,
    pub rows: Vec<Row>,
}

impl DeterminingSystem {
    pub fn rank(&self) -> usize {
        self.echelon().rank()
    }

    fn echelon(&self) -> Echelon {
        let mut e = Echelon::new(self.ansatz.len());
        for row in &self.rows {
            e.insert(&row.entries);
        }
        e
    }
}

/// Assembles the linear homogeneous system for the ansatz coefficients
/// from per-unknown residual vectors.
pub fn assemble_rows(residuals: &[Vec<SymExpr>]) -> Vec<Row> {
    let neq = residuals.first().map_or(0, Vec::len);
    let mut rows = Vec::new();
    for a in 0..neq {
        let lcm = lcm_denominators(residuals.iter().map(|r| &r[a]));
        let mut table: std::collections::BTreeMap<Monomial, Vec<(usize, Rational)>> =
            std::collections::BTreeMap::new();
        for (k, r) in residuals.iter().enumerate() {
            if r[a].is_zero() {
                continue;
            }
            for (m, c) in r[a].numerator_over(&lcm).into_terms() {
                table.entry(m).or_default().push((k, c));
            }
        }
        rows.extend(table.into_iter().map(|(monomial, entries)| Row {
            equation: a,
            monomial,
            entries,
        }));
    }
    rows
}

pub fn determining_equations(sys: &OdeSystem, ansatz: &Ansatz) -> DeterminingSystem {
    let residuals: Vec<Vec<SymExpr>> = (0..ansatz.len())
        .into_par_iter()
        .map(|k| ansatz.basis_field(k).residual(sys))
        .collect();
    DeterminingSystem {
        ansatz: ansatz.clone(),
        rows: assemble_rows(&residuals),
    }
}

/// Basis of the symmetry generators found inside an ansatz window.
#[derive(Clone, Debug)]
pub struct SymmetryBasis {
    pub ansatz: Ansatz,
    pub fields: Vec<VectorField>,
    pub coeff_vectors: Vec<Vec<Rational>>,
    /// Rank of the determining system.
    pub rank: usize,
    pub rows: usize,
    /// The system is linear, so solutions of it generate an
    /// infinite-dimensional superposition family outside any finite window.
    pub superposition_family: bool,
}

impl SymmetryBasis {
    pub fn dim(&self) -> usize {
        self.fields.len()
    }

    pub fn contains(&self, field: &VectorField) -> Result<bool, DetermineError> {
        let v = self.ansatz.project(field)?;
        let mut e = Echelon::new(self.ansatz.len());
        for c in &self.coeff_vectors {
            e.insert_dense(c);
        }
        Ok(e.contains_dense(&v))
    }
}

/// Canonical presentation of a span of coefficient vectors: reduced row
/// echelon form ordered by leading unknown, each row scaled to a
/// primitive integer vector.
pub fn canonical_vectors(vectors: &[Vec<Rational>], ncols: usize) -> Vec<Vec<Rational>> {
    linalg::span_basis(vectors, ncols)
        .into_iter()
        .map(|v| {
            primitive_integer_vector(&v)
                .into_iter()
                .map(Rational::from_integer)
                .collect()
        })
        .collect()
}

pub fn solve_nullspace(
    ds: &DeterminingSystem,
    checker: impl Fn(&VectorField) -> bool + Sync,
    superposition_family: bool,
) -> Result<SymmetryBasis, DetermineError> {
    let ansatz = &ds.ansatz;
    let e = ds.echelon();
    let coeff_vectors = canonical_vectors(&e.nullspace(), ansatz.len());
    let fields: Vec<VectorField> = coeff_vectors.iter().map(|c| ansatz.render(c)).collect();
    if let Some(bad) = fields.par_iter().find_any(|f| !checker(f)) {
        return Err(DetermineError::Unverified(bad.to_string()));
    }
    Ok(SymmetryBasis {
        ansatz: ansatz.clone(),
        fields,
        coeff_vectors,
        rank: e.rank(),
        rows: ds.rows.len(),
        superposition_family,
    })
}

pub fn find_symmetries(
    sys: &OdeSystem,
    spec: &AnsatzSpec,
) -> Result<SymmetryBasis, DetermineError> {
    let ansatz = Ansatz::build(spec, sys.ring())?;
    let ds = determining_equations(sys, &ansatz);
    solve_nullspace(
        &ds,
        |f| f.residual(sys).iter().all(SymExpr::is_zero),
        sys.is_linear(),
    )
}

#[derive(Clone, Debug, PartialEq)]
pub enum SpanComparison {
    Equal,
    /// The found span strictly contains the expected one.
    Contains {
        surplus: usize,
    },
    /// `witness` is an expected field outside the found span.
    Differs {
        witness: VectorField,
    },
}

impl fmt::Display for SpanComparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpanComparison::Equal => f.write_str("equal"),
            SpanComparison::Contains { surplus } => write!(f, "contains (+{surplus})"),
            SpanComparison::Differs { witness } => write!(f, "differs: missing {witness}"),
        }
    }
}

pub fn span_compare(
    found: &SymmetryBasis,
    expected: &[VectorField],
) -> Result<SpanComparison, DetermineError> {
    let ansatz = &found.ansatz;
    let projected = expected
        .iter()
        .map(|f| ansatz.project(f))
        .collect::<Result<Vec<_>, _>>()?;
    let mut e = Echelon::new(ansatz.len());
    for v in &found.coeff_vectors {
        e.insert_dense(v);
    }
    if let Some(i) = projected.iter().position(|v| !e.contains_dense(v)) {
        return Ok(SpanComparison::Differs {
            witness: expected[i].clone(),
        });
    }
    let expected_rank = linalg::rank(&projected);
    Ok(if expected_rank == found.dim() {
        SpanComparison::Equal
    } else {
        SpanComparison::Contains {
            surplus: found.dim() - expected_rank,
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_system;

    #[test]
    fn small_window_enumeration() {
        let ring = Ring::ode(1, false);
        let spec = AnsatzSpec {
            windows: vec![(0, 1), (0, 0)],
            total_degree: None,
            allow_radical: false,
        };
        let a = Ansatz::build(&spec, &ring).unwrap();
        assert_eq!(a.len(), 4);
        let f = a.render(&[1, 2, 3, 4].map(int));
        assert_eq!(f.to_string(), "(2*t + 1) d/dt + (4*t + 3) d/dx1");
    }

    #[test]
    fn window_errors() {
        let ring = Ring::ode(1, false);
        let spec = AnsatzSpec {
            windows: vec![(1, 0), (0, 0)],
            total_degree: None,
            allow_radical: false,
        };
        assert!(matches!(
            Ansatz::build(&spec, &ring),
            Err(DetermineError::EmptyWindow(_))
        ));
        let mut spec = AnsatzSpec::default_for(1);
        spec.allow_radical = true;
        assert_eq!(
            Ansatz::build(&spec, &ring).unwrap_err(),
            DetermineError::NoRadical
        );
        let q = crate::symcore::Ring::quantum1d();
        let spec = AnsatzSpec::parse("x:\u{2212}2..2, u:0..2", &q).unwrap();
        assert_eq!(spec.windows, vec![(-2, 2), (0, 2)]);
        assert!(AnsatzSpec::parse("w:0..1", &q).is_err());
    }

    #[test]
    fn free_particle_rank() {
        let sys = parse_system("dim 1\nddot x1 = 0\n").unwrap();
        let spec = AnsatzSpec::default_for(1);
        let ansatz = Ansatz::build(&spec, sys.ring()).unwrap();
        let ds = determining_equations(&sys, &ansatz);
        assert_eq!(ansatz.len(), 12);
        assert_eq!(ds.rank(), ansatz.len() - 8);
    }

    #[test]
    fn empty_system_leaves_whole_window() {
        let sys = parse_system("dim 1\nddot x1 = v1^2\n").unwrap();
        let ansatz = Ansatz::build(&AnsatzSpec::uniform(1, 0, 1, None), sys.ring()).unwrap();
        let ds = DeterminingSystem {
            ansatz: ansatz.clone(),
            rows: assemble_rows(&[]),
        };
        let basis = solve_nullspace(&ds, |_| true, false).unwrap();
        assert_eq!(basis.dim(), ansatz.len());
    }
}
