//! Serializable report pieces and their text rendering.

use std::fmt::Write;

use num_traits::{One, Signed, Zero};
use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};

use crate::liealgebra::StructureConstants;
use crate::symcore::rational::format_rational;
use crate::symcore::Rational;
use crate::vectorfield::VectorField;

/// Version tag carried by every JSON report.
pub const SCHEMA: &str = "liesym.report/v1";

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GeneratorJson {
    pub tau: String,
    pub eta: Vec<String>,
}

impl From<&VectorField> for GeneratorJson {
    fn from(f: &VectorField) -> Self {
        GeneratorJson {
            tau: f.tau().to_string(),
            eta: f.eta().iter().map(ToString::to_string).collect(),
        }
    }
}

pub fn generators(fields: &[VectorField]) -> Vec<GeneratorJson> {
    fields.iter().map(GeneratorJson::from).collect()
}

/// Nonzero `c^k_ij` with `i < j`, 1-based, as `[i, j, k, "c"]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseConstants(pub Vec<(usize, usize, usize, Rational)>);

impl SparseConstants {
    pub fn new(sc: &StructureConstants) -> Self {
        let d = sc.dim();
        let mut out = Vec::new();
        for i in 0..d {
            for j in i + 1..d {
                for k in 0..d {
                    let c = sc.get(i, j, k);
                    if !c.is_zero() {
                        out.push((i + 1, j + 1, k + 1, c.clone()));
                    }
                }
            }
        }
        SparseConstants(out)
    }
}

impl Serialize for SparseConstants {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.0.len()))?;
        for (i, j, k, c) in &self.0 {
            seq.serialize_element(&(i, j, k, format_rational(c)))?;
        }
        seq.end()
    }
}

/// `2*X1 - X3` style linear combination; indices are 1-based.
pub fn combination(terms: &[(usize, Rational)]) -> String {
    let mut out = String::new();
    for (k, c) in terms.iter().filter(|(_, c)| !c.is_zero()) {
        let neg = c.is_negative();
        let mag = c.abs();
        if out.is_empty() {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        if !mag.is_one() {
            let _ = write!(out, "{}*", format_rational(&mag));
        }
        let _ = write!(out, "X{k}");
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

/// Commutator table `[X_i, X_j]` as a text grid.
pub fn bracket_grid(sc: &StructureConstants) -> String {
    let d = sc.dim();
    let cell = |i: usize, j: usize| {
        let terms: Vec<(usize, Rational)> =
            (0..d).map(|k| (k + 1, sc.get(i, j, k).clone())).collect();
        combination(&terms)
    };
    let cells: Vec<Vec<String>> = (0..d)
        .map(|i| (0..d).map(|j| cell(i, j)).collect())
        .collect();
    let width = cells
        .iter()
        .flatten()
        .map(String::len)
        .chain(std::iter::once(format!("X{d}").len()))
        .max()
        .unwrap_or(1);
    let mut out = String::new();
    let _ = write!(out, "{:>w$}", "", w = width + 2);
    for j in 0..d {
        let _ = write!(out, " {:>width$}", format!("X{}", j + 1));
    }
    out.push('\n');
    for (i, row) in cells.iter().enumerate() {
        let _ = write!(out, "{:>w$}", format!("X{}", i + 1), w = width + 2);
        for c in row {
            let _ = write!(out, " {c:>width$}");
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symcore::rational::{int, rat};

    #[test]
    fn combinations() {
        assert_eq!(combination(&[(1, int(2)), (3, int(-1))]), "2*X1 - X3");
        assert_eq!(combination(&[(2, rat(-3, 2))]), "-3/2*X2");
        assert_eq!(combination(&[(2, int(0))]), "0");
    }

    #[test]
    fn sparse_triplets_serialize_as_strings() {
        let sc = StructureConstants::from_brackets(2, &[(0, 1, vec![(0, rat(-3, 2))])]);
        let json = serde_json::to_string(&SparseConstants::new(&sc)).unwrap();
        assert_eq!(json, r#"[[1,2,1,"-3/2"]]"#);
        let grid = bracket_grid(&sc);
        assert!(grid.contains("-3/2*X1"));
        assert!(grid.contains("3/2*X1"));
    }
}
