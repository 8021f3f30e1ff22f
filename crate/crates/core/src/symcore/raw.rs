use std::sync::Arc;

use super::expr::{SymError, SymExpr};
use super::rational::Rational;
use super::ring::{Ring, VarId};

/// Unnormalized expression tree, as produced by the parser.
#[derive(Clone, Debug, PartialEq)]
pub enum RawExpr {
    Num(Rational),
    Var(VarId),
    Neg(Box<RawExpr>),
    Add(Box<RawExpr>, Box<RawExpr>),
    Sub(Box<RawExpr>, Box<RawExpr>),
    Mul(Box<RawExpr>, Box<RawExpr>),
    Div(Box<RawExpr>, Box<RawExpr>),
    Pow(Box<RawExpr>, i32),
}

/// Folds a raw tree into canonical form.
pub fn normalize(raw: &RawExpr, ring: &Arc<Ring>) -> Result<SymExpr, SymError> {
    Ok(match raw {
        RawExpr::Num(c) => SymExpr::constant(ring, c.clone()),
        RawExpr::Var(v) => SymExpr::var(ring, *v),
        RawExpr::Neg(a) => -normalize(a, ring)?,
        RawExpr::Add(a, b) => normalize(a, ring)? + normalize(b, ring)?,
        RawExpr::Sub(a, b) => normalize(a, ring)? - normalize(b, ring)?,
        RawExpr::Mul(a, b) => normalize(a, ring)? * normalize(b, ring)?,
        RawExpr::Div(a, b) => normalize(a, ring)?.checked_div(&normalize(b, ring)?)?,
        RawExpr::Pow(a, k) => normalize(a, ring)?.pow(*k)?,
    })
}
