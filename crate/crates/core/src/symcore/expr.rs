use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_traits::{One, Zero};
use thiserror::Error;

use super::monomial::Monomial;
use super::poly::Poly;
use super::rational::{format_rational, int, Rational};
use super::ring::{Ring, VarId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SymError {
    #[error("division by zero: {0}")]
    DivisionByZero(String),
    #[error("variable `{0}` has no binding in the target universe")]
    UnboundVariable(String),
    #[error("the radical r must be bound together with every coordinate it depends on")]
    RadicalBinding,
    #[error("binding for r is inconsistent with r^2 = sum of squares (difference {0})")]
    InconsistentRadical(String),
    #[error("denominator depends on collected variable `{0}`; clear denominators first")]
    NeedsClearing(String),
    #[error("the radical depends on collected variable `{0}`; collect over r as well")]
    RadicalInCollection(String),
}

/// Irreducible-by-construction denominator factor: an ordinary polynomial,
/// radical-free, without monomial content, monic in its leading term.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Atom(Arc<Poly>);

impl Atom {
    pub fn poly(&self) -> &Poly {
        &self.0
    }
}

type Denominator = BTreeMap<Atom, u32>;

/// Canonical exact expression `num / prod(atom^k)`.
///
/// The numerator is a Laurent polynomial whose radical exponent is 0 or 1;
/// monomial denominators live in the numerator as negative exponents.
/// Zero is decidable: an expression vanishes on `r > 0` iff its numerator
/// is empty.
#[derive(Clone, Debug)]
pub struct SymExpr {
    ring: Arc<Ring>,
    num: Poly,
    den: Denominator,
}

impl SymExpr {
    pub fn zero(ring: &Arc<Ring>) -> Self {
        SymExpr {
            ring: ring.clone(),
            num: Poly::zero(ring.nvars()),
            den: Denominator::new(),
        }
    }

    pub fn one(ring: &Arc<Ring>) -> Self {
        Self::constant(ring, Rational::one())
    }

    pub fn constant(ring: &Arc<Ring>, c: Rational) -> Self {
        SymExpr {
            ring: ring.clone(),
            num: Poly::constant(ring.nvars(), c),
            den: Denominator::new(),
        }
    }

    pub fn integer(ring: &Arc<Ring>, c: i64) -> Self {
        Self::constant(ring, int(c))
    }

    pub fn var(ring: &Arc<Ring>, var: VarId) -> Self {
        let m = Monomial::var(ring.nvars(), ring.slot(var), 1);
        Self::from_monomial(ring, m, Rational::one())
    }

    pub fn from_monomial(ring: &Arc<Ring>, m: Monomial, c: Rational) -> Self {
        Self::build(ring.clone(), Poly::monomial(m, c), Denominator::new())
    }

    pub fn from_poly(ring: &Arc<Ring>, poly: Poly) -> Self {
        assert_eq!(poly.nvars(), ring.nvars());
        Self::build(ring.clone(), poly, Denominator::new())
    }

    pub fn ring(&self) -> &Arc<Ring> {
        &self.ring
    }

    pub fn numerator(&self) -> &Poly {
        &self.num
    }

    pub fn denominator_atoms(&self) -> impl Iterator<Item = (&Atom, u32)> {
        self.den.iter().map(|(a, k)| (a, *k))
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// No denominator atoms: a Laurent polynomial (possibly with `r`).
    pub fn is_polynomial(&self) -> bool {
        self.den.is_empty()
    }

    pub fn as_constant(&self) -> Option<Rational> {
        if self.den.is_empty() {
            self.num.as_constant()
        } else {
            None
        }
    }

    pub fn mentions(&self, var: VarId) -> bool {
        let slot = self.ring.slot(var);
        self.num.mentions(slot) || self.den.keys().any(|a| a.0.mentions(slot))
    }

    /// Slots appearing anywhere in the expression.
    pub fn support(&self) -> BTreeSet<usize> {
        (0..self.ring.nvars())
            .filter(|&s| self.num.mentions(s) || self.den.keys().any(|a| a.0.mentions(s)))
            .collect()
    }

    fn same_ring(&self, other: &SymExpr) {
        debug_assert!(
            Arc::ptr_eq(&self.ring, &other.ring) || *self.ring == *other.ring,
            "expressions from different variable universes"
        );
    }

    /// Establishes the canonical form: radical reduction, then cancellation
    /// of denominator atoms that divide the numerator.
    fn build(ring: Arc<Ring>, num: Poly, den: Denominator) -> SymExpr {
        let (mut num, mut den) = (num, den);
        if let Some(rslot) = ring.radical_slot() {
            reduce_radical(&ring, rslot, &mut num, &mut den);
        }
        if num.is_zero() {
            den.clear();
        } else if !den.is_empty() {
            cancel(&ring, &mut num, &mut den);
        }
        SymExpr { ring, num, den }
    }

    pub fn scale(&self, c: &Rational) -> SymExpr {
        if c.is_zero() {
            return SymExpr::zero(&self.ring);
        }
        SymExpr {
            ring: self.ring.clone(),
            num: self.num.scale(c),
            den: self.den.clone(),
        }
    }

    fn add_impl(&self, other: &SymExpr) -> SymExpr {
        self.same_ring(other);
        if other.is_zero() {
            return self.clone();
        }
        if self.is_zero() {
            return other.clone();
        }
        if self.den == other.den {
            return Self::build(
                self.ring.clone(),
                self.num.add(&other.num),
                self.den.clone(),
            );
        }
        let mut lcm = self.den.clone();
        for (atom, k) in &other.den {
            let e = lcm.entry(atom.clone()).or_insert(0);
            *e = (*e).max(*k);
        }
        let lhs = self
            .num
            .mul(&expand_quotient(self.ring.nvars(), &lcm, &self.den));
        let rhs = other
            .num
            .mul(&expand_quotient(self.ring.nvars(), &lcm, &other.den));
        Self::build(self.ring.clone(), lhs.add(&rhs), lcm)
    }

    fn mul_impl(&self, other: &SymExpr) -> SymExpr {
        self.same_ring(other);
        if self.is_zero() || other.is_zero() {
            return SymExpr::zero(&self.ring);
        }
        let mut den = self.den.clone();
        for (atom, k) in &other.den {
            *den.entry(atom.clone()).or_insert(0) += k;
        }
        Self::build(self.ring.clone(), self.num.mul(&other.num), den)
    }

    pub fn inv(&self) -> Result<SymExpr, SymError> {
        if self.is_zero() {
            return Err(SymError::DivisionByZero(self.to_string()));
        }
        let nvars = self.ring.nvars();
        let den_poly = expand(nvars, &self.den);
        match self.ring.radical_slot() {
            Some(rslot) if self.num.mentions(rslot) => {
                // (a + b r)^{-1} = (a - b r) / (a^2 - b^2 S)
                let (a, b) = self.num.split_binary(rslot);
                let s = self.ring.radical_square().expect("radical ring");
                let r = Poly::monomial(Monomial::var(nvars, rslot, 1), Rational::one());
                let conj = a.sub(&b.mul(&r));
                let norm = a.mul(&a).sub(&b.mul(&b).mul(&s));
                divide_by_poly(&self.ring, den_poly.mul(&conj), norm)
            }
            _ => divide_by_poly(&self.ring, den_poly, self.num.clone()),
        }
    }

    pub fn checked_div(&self, other: &SymExpr) -> Result<SymExpr, SymError> {
        Ok(self * &other.inv()?)
    }

    pub fn pow(&self, k: i32) -> Result<SymExpr, SymError> {
        if k < 0 {
            return self.inv()?.pow(-k);
        }
        if k == 0 {
            return Ok(SymExpr::one(&self.ring));
        }
        let k = k as u32;
        let den = self.den.iter().map(|(a, e)| (a.clone(), e * k)).collect();
        Ok(Self::build(self.ring.clone(), self.num.pow(k), den))
    }

    /// Exact partial derivative. The chain rule `dr/dx_a = x_a / r` is
    /// applied for coordinates in the radical; differentiating in `r`
    /// itself treats it as an independent symbol.
    pub fn diff(&self, var: VarId) -> SymExpr {
        let ring = &self.ring;
        let slot = ring.slot(var);
        let nvars = ring.nvars();
        let mut result = Self::build(ring.clone(), self.num.diff_slot(slot), self.den.clone());
        if let Some(rslot) = ring.radical_slot() {
            if ring.in_radical(slot) && self.num.mentions(rslot) {
                let (_, p1) = self.num.split_binary(rslot);
                let mut m = Monomial::var(nvars, rslot, 1);
                m.set_exp(slot, 1);
                let s_atom = Atom(Arc::new(ring.radical_square().unwrap()));
                let mut den = self.den.clone();
                *den.entry(s_atom).or_insert(0) += 1;
                let extra = Self::build(ring.clone(), p1.mul_monomial(&m, &Rational::one()), den);
                result = result + extra;
            }
        }
        for (atom, k) in &self.den {
            let df = atom.0.diff_slot(slot);
            if df.is_zero() {
                continue;
            }
            let mut den = self.den.clone();
            *den.get_mut(atom).unwrap() += 1;
            let num = self.num.mul(&df).scale(&int(-i64::from(*k)));
            result = result + Self::build(ring.clone(), num, den);
        }
        result
    }

    /// Simultaneous substitution into the universe `target`.
    ///
    /// When `target` equals the expression's own universe, unbound variables
    /// map to themselves. The radical may only be bound together with the
    /// coordinates it depends on, and its binding must square to their sum
    /// of squares.
    pub fn substitute(
        &self,
        bindings: &BTreeMap<VarId, SymExpr>,
        target: &Arc<Ring>,
    ) -> Result<SymExpr, SymError> {
        let same = Arc::ptr_eq(&self.ring, target) || *self.ring == **target;
        let support = self.support();
        let mut values: HashMap<usize, SymExpr> = HashMap::new();
        for &slot in &support {
            let var = self.ring.var(slot);
            let value = match bindings.get(&var) {
                Some(v) => v.clone(),
                None if same => SymExpr::var(target, var),
                None => return Err(SymError::UnboundVariable(self.ring.slot_name(slot).into())),
            };
            values.insert(slot, value);
        }
        if let Some(rslot) = self.ring.radical_slot() {
            if support.contains(&rslot) {
                let radical_bound = bindings.contains_key(&VarId::Radical);
                let any_coord_bound = self
                    .ring
                    .radical_vars()
                    .iter()
                    .any(|v| bindings.contains_key(v));
                if !radical_bound && any_coord_bound {
                    return Err(SymError::RadicalBinding);
                }
                if radical_bound {
                    let mut check = values[&rslot].pow(2)?;
                    for v in self.ring.radical_vars() {
                        let value = match bindings.get(v) {
                            Some(b) => b.clone(),
                            None if same => SymExpr::var(target, *v),
                            None => {
                                return Err(SymError::UnboundVariable(self.ring.name(*v).into()))
                            }
                        };
                        check = check - value.pow(2)?;
                    }
                    if !check.is_zero() {
                        return Err(SymError::InconsistentRadical(check.to_string()));
                    }
                }
            }
        }
        let mut powers: HashMap<(usize, i32), SymExpr> = HashMap::new();
        let mut eval_poly = |poly: &Poly| -> Result<SymExpr, SymError> {
            let mut acc = SymExpr::zero(target);
            for (m, c) in poly.terms() {
                let mut term = SymExpr::constant(target, c.clone());
                for (slot, &e) in m.exponents().iter().enumerate() {
                    if e == 0 {
                        continue;
                    }
                    let p = match powers.get(&(slot, e)) {
                        Some(p) => p.clone(),
                        None => {
                            let p = values[&slot].pow(e)?;
                            powers.insert((slot, e), p.clone());
                            p
                        }
                    };
                    term = term * p;
                }
                acc = acc + term;
            }
            Ok(acc)
        };
        let num = eval_poly(&self.num)?;
        let mut den = SymExpr::one(target);
        for (atom, k) in &self.den {
            let value = eval_poly(&atom.0)?;
            if value.is_zero() {
                return Err(SymError::DivisionByZero(format!(
                    "({}) vanishes under the substitution",
                    fmt_poly(&self.ring, &atom.0)
                )));
            }
            den = den * value.pow(*k as i32)?;
        }
        num.checked_div(&den)
    }

    /// Groups the expression by monomials in `vars`. Coefficients are free
    /// of `vars`; the denominator must not involve them.
    pub fn collect(&self, vars: &[VarId]) -> Result<BTreeMap<Monomial, SymExpr>, SymError> {
        let slots: BTreeSet<usize> = vars.iter().map(|v| self.ring.slot(*v)).collect();
        for atom in self.den.keys() {
            if let Some(s) = slots.iter().find(|&&s| atom.0.mentions(s)) {
                return Err(SymError::NeedsClearing(self.ring.slot_name(*s).into()));
            }
        }
        if let Some(rslot) = self.ring.radical_slot() {
            if self.num.mentions(rslot) && !slots.contains(&rslot) {
                if let Some(s) = slots.iter().find(|&&s| self.ring.in_radical(s)) {
                    return Err(SymError::RadicalInCollection(
                        self.ring.slot_name(*s).into(),
                    ));
                }
            }
        }
        let nvars = self.ring.nvars();
        let mut groups: BTreeMap<Monomial, Poly> = BTreeMap::new();
        for (m, c) in self.num.terms() {
            let key = m.restrict(|s| slots.contains(&s));
            let rest = m.restrict(|s| !slots.contains(&s));
            groups
                .entry(key)
                .or_insert_with(|| Poly::zero(nvars))
                .add_term(rest, c.clone());
        }
        Ok(groups
            .into_iter()
            .map(|(k, p)| (k, Self::build(self.ring.clone(), p, self.den.clone())))
            .collect())
    }

    /// Returns `(p, d)` with `self = p / d`, both ordinary polynomials:
    /// `d` is a monomial times the product of the denominator atoms.
    pub fn clear_denominators(&self) -> (SymExpr, SymExpr) {
        let nvars = self.ring.nvars();
        let shift = self.num.min_exponents().meet(&Monomial::one(nvars)).inv();
        let p = self.num.mul_monomial(&shift, &Rational::one());
        let d = expand(nvars, &self.den).mul_monomial(&shift, &Rational::one());
        let wrap = |poly| SymExpr {
            ring: self.ring.clone(),
            num: poly,
            den: Denominator::new(),
        };
        (wrap(p), wrap(d))
    }

    /// Product of all denominator atoms with multiplicity.
    pub fn denominator_poly(&self) -> Poly {
        expand(self.ring.nvars(), &self.den)
    }

    /// Numerator multiplied by `lcm / den(self)`, for a denominator `lcm`
    /// that is a multiple of this expression's denominator.
    pub fn numerator_over(&self, lcm: &BTreeMap<Atom, u32>) -> Poly {
        self.num
            .mul(&expand_quotient(self.ring.nvars(), lcm, &self.den))
    }

    pub fn denominator_map(&self) -> &BTreeMap<Atom, u32> {
        &self.den
    }
}

/// Least common multiple of factored denominators.
pub fn lcm_denominators<'a>(exprs: impl IntoIterator<Item = &'a SymExpr>) -> BTreeMap<Atom, u32> {
    let mut lcm = Denominator::new();
    for e in exprs {
        for (atom, k) in &e.den {
            let slot = lcm.entry(atom.clone()).or_insert(0);
            *slot = (*slot).max(*k);
        }
    }
    lcm
}

fn expand(nvars: usize, den: &Denominator) -> Poly {
    den.iter()
        .fold(Poly::one(nvars), |acc, (atom, k)| acc.mul(&atom.0.pow(*k)))
}

fn expand_quotient(nvars: usize, lcm: &Denominator, den: &Denominator) -> Poly {
    lcm.iter().fold(Poly::one(nvars), |acc, (atom, k)| {
        let have = den.get(atom).copied().unwrap_or(0);
        acc.mul(&atom.0.pow(k - have))
    })
}

/// Rewrites `r^e` as `r^(e mod 2) * S^(e div 2)`, moving negative powers of
/// `S` into the denominator.
fn reduce_radical(ring: &Ring, rslot: usize, num: &mut Poly, den: &mut Denominator) {
    if num.terms().all(|(m, _)| matches!(m.exp(rslot), 0 | 1)) {
        return;
    }
    let nvars = ring.nvars();
    let s = ring.radical_square().unwrap();
    let mut by_power: BTreeMap<i32, Poly> = BTreeMap::new();
    for (m, c) in num.terms() {
        let e = m.exp(rslot);
        let k = e.div_euclid(2);
        let mut mm = m.clone();
        mm.set_exp(rslot, e.rem_euclid(2));
        by_power
            .entry(k)
            .or_insert_with(|| Poly::zero(nvars))
            .add_term(mm, c.clone());
    }
    let kmin = (*by_power.keys().next().unwrap()).min(0);
    let mut out = Poly::zero(nvars);
    for (k, p) in by_power {
        out = out.add(&p.mul(&s.pow((k - kmin) as u32)));
    }
    if kmin < 0 {
        *den.entry(Atom(Arc::new(s))).or_insert(0) += (-kmin) as u32;
    }
    *num = out;
}

fn divides(ring: &Ring, num: &Poly, atom: &Poly) -> Option<Poly> {
    match ring.radical_slot() {
        Some(rslot) if num.mentions(rslot) => {
            let (p0, p1) = num.split_binary(rslot);
            let q0 = p0.exact_div(atom)?;
            let q1 = p1.exact_div(atom)?;
            let r = Monomial::var(ring.nvars(), rslot, 1);
            Some(q0.add(&q1.mul_monomial(&r, &Rational::one())))
        }
        _ => num.exact_div(atom),
    }
}

fn cancel(ring: &Ring, num: &mut Poly, den: &mut Denominator) {
    let atoms: Vec<Atom> = den.keys().cloned().collect();
    for atom in atoms {
        let k = den.get_mut(&atom).unwrap();
        while *k > 0 {
            match divides(ring, num, &atom.0) {
                Some(q) => {
                    *num = q;
                    *k -= 1;
                }
                None => break,
            }
        }
        if *k == 0 {
            den.remove(&atom);
        }
    }
}

/// `num / p` for a radical-free Laurent polynomial `p`.
fn divide_by_poly(ring: &Arc<Ring>, num: Poly, p: Poly) -> Result<SymExpr, SymError> {
    if p.is_zero() {
        return Err(SymError::DivisionByZero(fmt_poly(ring, &p)));
    }
    let nvars = ring.nvars();
    let content = p.min_exponents();
    let mut q = p.mul_monomial(&content.inv(), &Rational::one());
    let lc = q.leading_term().unwrap().1.clone();
    q = q.scale(&(Rational::one() / &lc));
    let num = num.mul_monomial(&content.inv(), &(Rational::one() / lc));
    let mut den = Denominator::new();
    if q.as_constant().is_none() {
        if let Some(s) = ring.radical_square() {
            while let Some(rest) = q.exact_div(&s) {
                *den.entry(Atom(Arc::new(s.clone()))).or_insert(0) += 1;
                q = rest;
                if q.as_constant().is_some() {
                    break;
                }
            }
        }
        if q.as_constant().is_none() {
            *den.entry(Atom(Arc::new(q))).or_insert(0) += 1;
        }
    }
    debug_assert!(den.keys().all(|a| a.0.leading_term().unwrap().1.is_one()));
    debug_assert!(nvars == ring.nvars());
    Ok(SymExpr::build(ring.clone(), num, den))
}

fn fmt_monomial(ring: &Ring, m: &Monomial) -> String {
    let parts: Vec<String> = m
        .exponents()
        .iter()
        .enumerate()
        .filter(|(_, &e)| e != 0)
        .map(|(slot, &e)| {
            let name = ring.slot_name(slot);
            if e == 1 {
                name.to_string()
            } else {
                format!("{name}^{e}")
            }
        })
        .collect();
    parts.join("*")
}

pub(crate) fn fmt_poly(ring: &Ring, poly: &Poly) -> String {
    if poly.is_zero() {
        return "0".into();
    }
    let mut out = String::new();
    for (i, (m, c)) in poly.terms().rev().enumerate() {
        let term = if m.is_one() {
            format_rational(c)
        } else if c.is_one() {
            fmt_monomial(ring, m)
        } else if *c == -Rational::one() {
            format!("-{}", fmt_monomial(ring, m))
        } else {
            format!("{}*{}", format_rational(c), fmt_monomial(ring, m))
        };
        if i == 0 {
            out.push_str(&term);
        } else if let Some(rest) = term.strip_prefix('-') {
            out.push_str(" - ");
            out.push_str(rest);
        } else {
            out.push_str(" + ");
            out.push_str(&term);
        }
    }
    out
}

impl fmt::Display for SymExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let num = fmt_poly(&self.ring, &self.num);
        if self.den.is_empty() {
            return f.write_str(&num);
        }
        let factors: Vec<String> = self
            .den
            .iter()
            .map(|(atom, k)| {
                let body = fmt_poly(&self.ring, &atom.0);
                let body = if atom.0.len() > 1 || body.contains('*') {
                    format!("({body})")
                } else {
                    body
                };
                if *k == 1 {
                    body
                } else {
                    format!("{body}^{k}")
                }
            })
            .collect();
        let den = factors.join("*");
        let den = if self.den.len() > 1 {
            format!("({den})")
        } else {
            den
        };
        write!(f, "({num})/{den}")
    }
}

impl PartialEq for SymExpr {
    fn eq(&self, other: &Self) -> bool {
        if self.num == other.num && self.den == other.den {
            return true;
        }
        (self - other).is_zero()
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $impl_fn:ident) => {
        impl $trait<&SymExpr> for &SymExpr {
            type Output = SymExpr;
            fn $method(self, rhs: &SymExpr) -> SymExpr {
                self.$impl_fn(rhs)
            }
        }
        impl $trait<SymExpr> for SymExpr {
            type Output = SymExpr;
            fn $method(self, rhs: SymExpr) -> SymExpr {
                (&self).$impl_fn(&rhs)
            }
        }
        impl $trait<&SymExpr> for SymExpr {
            type Output = SymExpr;
            fn $method(self, rhs: &SymExpr) -> SymExpr {
                (&self).$impl_fn(rhs)
            }
        }
        impl $trait<SymExpr> for &SymExpr {
            type Output = SymExpr;
            fn $method(self, rhs: SymExpr) -> SymExpr {
                self.$impl_fn(&rhs)
            }
        }
    };
}

impl SymExpr {
    fn sub_impl(&self, other: &SymExpr) -> SymExpr {
        self.add_impl(&-other)
    }
}

binop!(Add, add, add_impl);
binop!(Sub, sub, sub_impl);
binop!(Mul, mul, mul_impl);

impl Neg for &SymExpr {
    type Output = SymExpr;
    fn neg(self) -> SymExpr {
        SymExpr {
            ring: self.ring.clone(),
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }
}

impl Neg for SymExpr {
    type Output = SymExpr;
    fn neg(self) -> SymExpr {
        -&self
    }
}

impl std::iter::Sum for SymExpr {
    fn sum<I: Iterator<Item = SymExpr>>(mut iter: I) -> SymExpr {
        let first = iter
            .next()
            .expect("sum of an empty iterator has no universe");
        iter.fold(first, |acc, e| acc + e)
    }
}
