//! Built-in systems with their expected symmetry data.

use std::sync::Arc;

use thiserror::Error;

use crate::determine::{AnsatzSpec, DetermineError};
use crate::frontend::parser::{parse_expr, parse_system, ParseError};
use crate::symcore::rational::int;
use crate::symcore::{Rational, Ring, SymExpr};
use crate::vectorfield::{OdeSystem, VectorField};

/// How the found span is compared with the expected generators.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CompareMode {
    Equal,
    Contains,
}

/// `[X_i, X_j] = sum c X_k`, 1-based indices into the expected list.
#[derive(Clone, Debug)]
pub struct Bracket {
    pub i: usize,
    pub j: usize,
    pub result: Vec<(usize, Rational)>,
}

/// Initial data and fields for the numerical check.
#[derive(Clone, Debug)]
pub struct NumericFixture {
    pub t0: f64,
    pub x0: Vec<f64>,
    pub v0: Vec<f64>,
    pub span: f64,
    pub epsilon: f64,
    /// Fields that must fail the solution-mapping check.
    pub controls: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct CaseEntry {
    pub name: &'static str,
    pub title: &'static str,
    pub source: String,
    pub window: Option<&'static str>,
    /// Generators as `tau; eta1; ...; etan`.
    pub expected: Vec<String>,
    pub compare: CompareMode,
    pub expected_dim: Option<usize>,
    /// Fields that must lie outside the found span.
    pub absent: Vec<String>,
    /// Complete bracket table of the expected fields; omitted pairs commute.
    pub brackets: Option<Vec<Bracket>>,
    /// Label of the algebra spanned by the expected fields.
    pub algebra: Option<&'static str>,
    pub xi: Option<Rational>,
    pub reduction_window: Option<&'static str>,
    pub numeric: Option<NumericFixture>,
    pub notes: &'static str,
}

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("unknown case `{0}`")]
    Unknown(String),
    #[error("case `{case}`: {source}")]
    Parse { case: String, source: ParseError },
    #[error("case `{case}`: generator `{field}` is malformed")]
    Field { case: String, field: String },
    #[error("case `{case}`: expected generator `{field}` is not a symmetry")]
    NotASymmetry { case: String, field: String },
    #[error("case `{case}`: {source}")]
    Window {
        case: String,
        source: DetermineError,
    },
}

/// A registry case with its system parsed and expected fields checked.
#[derive(Clone, Debug)]
pub struct LoadedCase {
    pub entry: CaseEntry,
    pub system: OdeSystem,
    pub spec: AnsatzSpec,
    pub expected: Vec<VectorField>,
    pub absent: Vec<VectorField>,
    pub controls: Vec<VectorField>,
}

/// Parses `tau; eta1; ...` into a field over `ring`.
pub fn parse_field(text: &str, ring: &Arc<Ring>) -> Option<VectorField> {
    let parts: Vec<&str> = text.split(';').map(str::trim).collect();
    if parts.len() != ring.n() + 1 {
        return None;
    }
    let comps = parts
        .iter()
        .map(|p| parse_expr(p, ring).ok())
        .collect::<Option<Vec<SymExpr>>>()?;
    let mut it = comps.into_iter();
    let tau = it.next()?;
    Some(VectorField::new(tau, it.collect()))
}

fn b(i: usize, j: usize, result: &[(usize, i64)]) -> Bracket {
    Bracket {
        i,
        j,
        result: result.iter().map(|&(k, c)| (k, int(c))).collect(),
    }
}

fn strs(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

/// Reduced-system window for the nonlocal constant: affine in `y, u1, u2, u6`.
pub const REDUCTION_WINDOW: &str = "y:0..1,u1:0..1,u2:0..1,u6:0..1,total:1";

const ROTATIONS: [&str; 3] = ["0; 0; x3; -x2", "0; -x3; 0; x1", "0; x2; -x1; 0"];

fn rotation_brackets() -> Vec<Bracket> {
    vec![b(1, 2, &[(3, 1)]), b(2, 3, &[(1, 1)]), b(3, 1, &[(2, 1)])]
}

fn with_rotations(extra: &[&str]) -> Vec<String> {
    ROTATIONS
        .iter()
        .chain(extra)
        .map(|s| s.to_string())
        .collect()
}

// Rotations plus time translation, dilation and the projective field.
fn conformal_case(
    name: &'static str,
    title: &'static str,
    source: &str,
    x0: [f64; 3],
    v0: [f64; 3],
) -> CaseEntry {
    let mut brackets = rotation_brackets();
    brackets.extend([b(4, 5, &[(4, 2)]), b(4, 6, &[(5, 1)]), b(5, 6, &[(6, 2)])]);
    CaseEntry {
        name,
        title,
        source: source.into(),
        window: None,
        expected: with_rotations(&["1; 0; 0; 0", "2*t; x1; x2; x3", "t^2; t*x1; t*x2; t*x3"]),
        compare: CompareMode::Equal,
        expected_dim: Some(6),
        absent: strs(&["0; x1; x2; x3"]),
        brackets: Some(brackets),
        algebra: Some("direct_sum(so3, sl2R)"),
        xi: None,
        reduction_window: None,
        numeric: Some(NumericFixture {
            t0: 0.0,
            x0: x0.to_vec(),
            v0: v0.to_vec(),
            span: 1.0,
            epsilon: 0.1,
            controls: strs(&["0; x1; x2; x3"]),
        }),
        notes: "",
    }
}

fn with_reduction(mut case: CaseEntry, xi: i64) -> CaseEntry {
    case.xi = Some(int(xi));
    case.reduction_window = Some(REDUCTION_WINDOW);
    case
}

fn free_particle_3d_fields() -> Vec<String> {
    let mut out = vec!["1; 0; 0; 0".to_string()];
    let comp = |k: usize, expr: &str| {
        let mut parts = vec!["0".to_string(); 4];
        parts[k] = expr.to_string();
        parts.join("; ")
    };
    for a in 1..=3 {
        out.push(comp(a, "1"));
        out.push(comp(a, "t"));
        out.push(comp(0, &format!("x{a}")));
    }
    out.push(comp(0, "t"));
    for a in 1..=3 {
        for c in 1..=3 {
            out.push(comp(a, &format!("x{c}")));
        }
    }
    out.push("t^2; t*x1; t*x2; t*x3".into());
    for a in 1..=3 {
        out.push(format!("t*x{a}; x{a}*x1; x{a}*x2; x{a}*x3"));
    }
    out
}

/// Every built-in case, in display order.
pub fn cases() -> Vec<CaseEntry> {
    let mut case_i_brackets = rotation_brackets();
    case_i_brackets.push(b(4, 5, &[(4, 1)]));
    let mut velocity_brackets = rotation_brackets();
    velocity_brackets.push(b(4, 5, &[(4, 2)]));

    vec![
        CaseEntry {
            name: "free_particle_1d",
            title: "free particle, one dimension",
            source: "dim 1\nddot x1 = 0\n".into(),
            window: None,
            expected: strs(&[
                "1; 0",
                "0; 1",
                "t; 0",
                "0; t",
                "x1; 0",
                "0; x1",
                "t^2; t*x1",
                "t*x1; x1^2",
            ]),
            compare: CompareMode::Equal,
            expected_dim: Some(8),
            absent: vec![],
            brackets: None,
            algebra: None,
            xi: None,
            reduction_window: None,
            numeric: Some(NumericFixture {
                t0: 0.0,
                x0: vec![1.0],
                v0: vec![0.5],
                span: 1.0,
                epsilon: 0.3,
                controls: strs(&["0; x1^2"]),
            }),
            notes: "projective algebra sl(3)",
        },
        CaseEntry {
            name: "free_particle_3d",
            title: "free particle, three dimensions",
            source: "dim 3\nddot x1 = 0\nddot x2 = 0\nddot x3 = 0\n".into(),
            window: None,
            expected: free_particle_3d_fields(),
            compare: CompareMode::Equal,
            expected_dim: Some(24),
            absent: vec![],
            brackets: None,
            algebra: None,
            xi: None,
            reduction_window: None,
            numeric: None,
            notes: "joint count frozen from the engine; projective algebra sl(5)",
        },
        CaseEntry {
            name: "magnetic_linear",
            title: "magnetic field proportional to the position vector",
            source: "dim 3\nddot x1 = v2*x3 - v3*x2\nddot x2 = v3*x1 - v1*x3\nddot x3 = v1*x2 - v2*x1\n"
                .into(),
            window: None,
            expected: with_rotations(&["1; 0; 0; 0", "t; -x1; -x2; -x3"]),
            compare: CompareMode::Equal,
            expected_dim: Some(5),
            absent: vec![],
            brackets: Some(case_i_brackets),
            algebra: Some("direct_sum(so3, g2_nonabelian)"),
            xi: Some(int(-1)),
            reduction_window: Some(REDUCTION_WINDOW),
            numeric: Some(NumericFixture {
                t0: 0.5,
                x0: vec![1.0, 0.2, 0.3],
                v0: vec![0.1, 0.4, -0.2],
                span: 1.0,
                epsilon: 0.3,
                controls: strs(&["t; x1; x2; x3"]),
            }),
            notes: "",
        },
        CaseEntry {
            name: "sphere_monopole",
            title: "particle on the unit sphere around a monopole",
            source: "dim 3\nddot x1 = v2*x3 - v3*x2 - x1*(v1^2 + v2^2 + v3^2)\nddot x2 = v3*x1 - v1*x3 - x2*(v1^2 + v2^2 + v3^2)\nddot x3 = v1*x2 - v2*x1 - x3*(v1^2 + v2^2 + v3^2)\n".into(),
            window: None,
            expected: with_rotations(&["1; 0; 0; 0"]),
            compare: CompareMode::Equal,
            expected_dim: Some(4),
            absent: vec![],
            brackets: Some(rotation_brackets()),
            algebra: Some("direct_sum(so3, abelian(1))"),
            xi: None,
            reduction_window: None,
            numeric: Some(NumericFixture {
                t0: 0.0,
                x0: vec![0.6, 0.0, 0.8],
                v0: vec![0.0, 0.5, 0.0],
                span: 1.0,
                epsilon: 0.3,
                controls: strs(&["t; 0; 0; 0"]),
            }),
            notes: "the sphere constraint is not imposed; exhaustiveness checked at the default window only",
        },
        conformal_case(
            "inverse_square_potential",
            "inverse-square potential",
            "dim 3\nradical\nddot x1 = x1/r^4\nddot x2 = x2/r^4\nddot x3 = x3/r^4\n",
            [1.0, 0.5, 0.2],
            [0.1, 0.3, -0.2],
        ),
        with_reduction(conformal_case(
            "monopole",
            "charge in a monopole field",
            "dim 3\nradical\nddot x1 = (v2*x3 - v3*x2)/r^3\nddot x2 = (v3*x1 - v1*x3)/r^3\nddot x3 = (v1*x2 - v2*x1)/r^3\n",
            [1.0, 0.5, 0.2],
            [0.1, 0.3, -0.2],
        ), 2),
        conformal_case(
            "zwanziger",
            "monopole field plus inverse-square potential",
            "dim 3\nradical\nddot x1 = (v2*x3 - v3*x2)/r^3 + x1/r^4\nddot x2 = (v3*x1 - v1*x3)/r^3 + x2/r^4\nddot x3 = (v1*x2 - v2*x1)/r^3 + x3/r^4\n",
            [1.0, 0.5, 0.2],
            [0.1, 0.3, -0.2],
        ),
        CaseEntry {
            name: "dyon",
            title: "charge in the field of a dyon",
            source: "dim 3\nradical\nddot x1 = (v2*x3 - v3*x2)/r^3 + x1/r^3\nddot x2 = (v3*x1 - v1*x3)/r^3 + x2/r^3\nddot x3 = (v1*x2 - v2*x1)/r^3 + x3/r^3\n".into(),
            window: None,
            expected: with_rotations(&["1; 0; 0; 0"]),
            compare: CompareMode::Equal,
            expected_dim: Some(4),
            absent: strs(&["2*t; x1; x2; x3"]),
            brackets: Some(rotation_brackets()),
            algebra: Some("direct_sum(so3, abelian(1))"),
            xi: None,
            reduction_window: None,
            numeric: Some(NumericFixture {
                t0: 0.0,
                x0: vec![1.0, 0.5, 0.2],
                v0: vec![0.1, 0.3, -0.2],
                span: 1.0,
                epsilon: 0.3,
                controls: strs(&["2*t; x1; x2; x3"]),
            }),
            notes: "",
        },
        CaseEntry {
            name: "velocity_coupling",
            title: "velocity-dependent force v |x|^2",
            source: "dim 3\nddot x1 = v1*(x1^2 + x2^2 + x3^2)\nddot x2 = v2*(x1^2 + x2^2 + x3^2)\nddot x3 = v3*(x1^2 + x2^2 + x3^2)\n".into(),
            window: None,
            expected: with_rotations(&["1; 0; 0; 0", "2*t; -x1; -x2; -x3"]),
            compare: CompareMode::Equal,
            expected_dim: Some(5),
            absent: vec![],
            brackets: Some(velocity_brackets),
            algebra: Some("direct_sum(so3, g2_nonabelian)"),
            xi: Some(int(-2)),
            reduction_window: Some(REDUCTION_WINDOW),
            numeric: Some(NumericFixture {
                t0: 0.5,
                x0: vec![0.8, 0.5, 0.4],
                v0: vec![0.1, -0.2, 0.1],
                span: 1.0,
                epsilon: 0.3,
                controls: strs(&["t; -x1; -x2; -x3"]),
            }),
            notes: "",
        },
        CaseEntry {
            name: "inverse_square_field",
            title: "magnetic field B_z = -1/x1^2",
            source: "dim 3\nddot x1 = -v2/x1^2\nddot x2 = v1/x1^2\nddot x3 = 0\n".into(),
            window: None,
            expected: strs(&["1; 0; 0; 0", "0; 0; 1; 0", "0; 0; 0; 1", "0; 0; 0; x3"]),
            compare: CompareMode::Contains,
            expected_dim: None,
            absent: vec![],
            brackets: Some(vec![b(3, 4, &[(3, 1)])]),
            algebra: Some("direct_sum(g2_nonabelian, abelian(2))"),
            xi: Some(int(2)),
            reduction_window: Some(REDUCTION_WINDOW),
            numeric: Some(NumericFixture {
                t0: 0.0,
                x0: vec![1.0, 0.5, 0.2],
                v0: vec![0.1, 0.3, -0.2],
                span: 1.0,
                epsilon: 0.3,
                controls: strs(&["0; x1; 0; 0"]),
            }),
            notes: "the free x3 equation adds generators the printed list omits; reported as surplus. \
                    The reduction example titled Landau in the source uses this field.",
        },
        CaseEntry {
            name: "landau",
            title: "constant magnetic field along x3",
            source: "dim 3\nddot x1 = v2\nddot x2 = -v1\nddot x3 = 0\n".into(),
            window: None,
            expected: strs(&["0; 1; 0; 0", "0; 0; 1; 0", "0; -x2; x1; 0", "1; 0; 0; 0"]),
            compare: CompareMode::Contains,
            expected_dim: None,
            absent: vec![],
            brackets: Some(vec![b(1, 3, &[(2, 1)]), b(2, 3, &[(1, -1)])]),
            algebra: Some("direct_sum(unclassified(3), abelian(1))"),
            xi: None,
            reduction_window: None,
            numeric: Some(NumericFixture {
                t0: 0.0,
                x0: vec![1.0, 0.5, 0.2],
                v0: vec![0.1, 0.3, -0.2],
                span: 1.0,
                epsilon: 0.3,
                controls: strs(&["0; x1; 0; 0"]),
            }),
            notes: "the free x3 equation adds generators the printed list omits; reported as surplus",
        },
        CaseEntry {
            name: "stern_gerlach",
            title: "idealized Stern-Gerlach field B = (-x1, 0, 1 + x3)",
            source: "dim 3\nddot x1 = v2*(1 + x3)\nddot x2 = -v3*x1 - v1*(1 + x3)\nddot x3 = v2*x1\n".into(),
            window: None,
            expected: strs(&["1; 0; 0; 0"]),
            compare: CompareMode::Contains,
            expected_dim: None,
            absent: vec![],
            brackets: None,
            algebra: None,
            xi: None,
            reduction_window: None,
            numeric: Some(NumericFixture {
                t0: 0.0,
                x0: vec![1.0, 0.5, 0.2],
                v0: vec![0.1, 0.3, -0.2],
                span: 1.0,
                epsilon: 0.3,
                controls: strs(&["0; 0; 0; 1"]),
            }),
            notes: "the printed generator list is ambiguous; only time translation is asserted",
        },
        CaseEntry {
            name: "quantum_g2",
            title: "u'' = 2u/x^2 (coupling g = 2)",
            source: "mode quantum1d\nddot u = 2*u/x^2\n".into(),
            window: Some("x:-2..2,u:0..2"),
            expected: strs(&["x; 0", "0; u", "u/x; -u^2/x^2"]),
            compare: CompareMode::Contains,
            expected_dim: None,
            absent: vec![],
            brackets: Some(vec![b(1, 3, &[(3, -2)]), b(2, 3, &[(3, 1)])]),
            algebra: Some("direct_sum(g2_nonabelian, abelian(1))"),
            xi: None,
            reduction_window: None,
            numeric: Some(NumericFixture {
                t0: 1.0,
                x0: vec![0.2],
                v0: vec![0.1],
                span: 1.0,
                epsilon: 0.3,
                controls: strs(&["u; 0"]),
            }),
            notes: "linear equation: solutions of it give an infinite superposition family, \
                    part of which lies in the window",
        },
        CaseEntry {
            name: "quantum_c_minus1",
            title: "u'' = u/x^2 (coupling g = 1)",
            source: "mode quantum1d\nddot u = u/x^2\n".into(),
            window: Some("x:-2..2,u:0..2"),
            expected: strs(&["x; 0", "0; u"]),
            compare: CompareMode::Contains,
            expected_dim: None,
            absent: strs(&["u/x; -u^2/x^2"]),
            brackets: Some(vec![]),
            algebra: Some("abelian(2)"),
            xi: None,
            reduction_window: None,
            numeric: None,
            notes: "the third field exists only at g = 2",
        },
    ]
}

pub fn names() -> Vec<&'static str> {
    cases().iter().map(|c| c.name).collect()
}

pub fn lookup(name: &str) -> Result<CaseEntry, RegistryError> {
    cases()
        .into_iter()
        .find(|c| c.name == name)
        .ok_or_else(|| RegistryError::Unknown(name.to_string()))
}

impl CaseEntry {
    /// Parses the system and fields and checks every expected generator
    /// against the symmetry condition.
    pub fn load(&self) -> Result<LoadedCase, RegistryError> {
        let system = parse_system(&self.source).map_err(|source| RegistryError::Parse {
            case: self.name.into(),
            source,
        })?;
        let ring = system.ring().clone();
        let field = |text: &String| {
            parse_field(text, &ring).ok_or_else(|| RegistryError::Field {
                case: self.name.into(),
                field: text.clone(),
            })
        };
        let expected = self
            .expected
            .iter()
            .map(field)
            .collect::<Result<Vec<_>, _>>()?;
        let absent = self
            .absent
            .iter()
            .map(field)
            .collect::<Result<Vec<_>, _>>()?;
        let controls = match &self.numeric {
            Some(n) => n
                .controls
                .iter()
                .map(field)
                .collect::<Result<Vec<_>, _>>()?,
            None => vec![],
        };
        for (text, f) in self.expected.iter().zip(&expected) {
            if !f.residual(&system).iter().all(SymExpr::is_zero) {
                return Err(RegistryError::NotASymmetry {
                    case: self.name.into(),
                    field: text.clone(),
                });
            }
        }
        let spec = match self.window {
            Some(w) => AnsatzSpec::parse(w, &ring).map_err(|source| RegistryError::Window {
                case: self.name.into(),
                source,
            })?,
            None => AnsatzSpec::default_for(ring.n()),
        };
        Ok(LoadedCase {
            entry: self.clone(),
            system,
            spec,
            expected,
            absent,
            controls,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_case_loads() {
        for case in cases() {
            case.load().unwrap_or_else(|e| panic!("{e}"));
        }
    }

    #[test]
    fn corrupted_fixture_fails_fast() {
        let mut case = lookup("magnetic_linear").unwrap();
        case.expected[4] = "t; x1; x2; x3".into();
        assert!(matches!(
            case.load(),
            Err(RegistryError::NotASymmetry { .. })
        ));
    }

    #[test]
    fn sources_round_trip() {
        for case in cases() {
            let sys = case.load().unwrap().system;
            for (a, w) in sys.rhs().iter().enumerate() {
                let again = parse_expr(&w.to_string(), sys.ring()).unwrap();
                assert_eq!(&again, w, "{} equation {}", case.name, a + 1);
            }
        }
    }
}
