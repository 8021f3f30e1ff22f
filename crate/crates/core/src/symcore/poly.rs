use std::collections::BTreeMap;

use num_traits::{One, Zero};

use super::monomial::Monomial;
use super::rational::Rational;

/// Sparse Laurent polynomial with exact rational coefficients.
///
/// Radical reduction is not applied here; `SymExpr` owns that invariant.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Poly {
    nvars: usize,
    terms: BTreeMap<Monomial, Rational>,
}

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        Poly {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: Rational) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(Monomial::one(nvars), c);
        p
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, Rational::one())
    }

    pub fn monomial(m: Monomial, c: Rational) -> Self {
        let mut p = Self::zero(m.nvars());
        p.add_term(m, c);
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn into_terms(self) -> impl Iterator<Item = (Monomial, Rational)> {
        self.terms.into_iter()
    }

    pub fn coefficient(&self, m: &Monomial) -> Option<&Rational> {
        self.terms.get(m)
    }

    /// The constant value when the polynomial has no variable part.
    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                m.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn add_term(&mut self, m: Monomial, c: Rational) {
        debug_assert_eq!(m.nvars(), self.nvars);
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }

    pub fn neg(&self) -> Poly {
        Poly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }

    pub fn scale(&self, c: &Rational) -> Poly {
        if c.is_zero() {
            return Poly::zero(self.nvars);
        }
        Poly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(m, v)| (m.clone(), v * c)).collect(),
        }
    }

    pub fn mul_monomial(&self, m: &Monomial, c: &Rational) -> Poly {
        if c.is_zero() {
            return Poly::zero(self.nvars);
        }
        Poly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(k, v)| (k.mul(m), v * c)).collect(),
        }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero(self.nvars);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> Poly {
        let mut result = Poly::one(self.nvars);
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                result = result.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    /// Formal partial derivative in one slot (Laurent exponents allowed).
    pub fn diff_slot(&self, slot: usize) -> Poly {
        let mut out = Poly::zero(self.nvars);
        for (m, c) in &self.terms {
            let e = m.exp(slot);
            if e != 0 {
                let mut dm = m.clone();
                dm.set_exp(slot, e - 1);
                out.add_term(dm, c * Rational::from_integer(e.into()));
            }
        }
        out
    }

    pub fn leading_term(&self) -> Option<(&Monomial, &Rational)> {
        self.terms.last_key_value()
    }

    /// Componentwise minimum exponent over all terms.
    pub fn min_exponents(&self) -> Monomial {
        let mut iter = self.terms.keys();
        match iter.next() {
            None => Monomial::one(self.nvars),
            Some(first) => iter.fold(first.clone(), |acc, m| acc.meet(m)),
        }
    }

    pub fn max_exp(&self, slot: usize) -> i32 {
        self.terms.keys().map(|m| m.exp(slot)).max().unwrap_or(0)
    }

    pub fn mentions(&self, slot: usize) -> bool {
        self.terms.keys().any(|m| m.exp(slot) != 0)
    }

    /// Splits `self = p0 + s * p1` where `s` is the variable in `slot`.
    /// Every exponent in `slot` must be 0 or 1.
    pub fn split_binary(&self, slot: usize) -> (Poly, Poly) {
        let mut p0 = Poly::zero(self.nvars);
        let mut p1 = Poly::zero(self.nvars);
        for (m, c) in &self.terms {
            match m.exp(slot) {
                0 => p0.add_term(m.clone(), c.clone()),
                1 => {
                    let mut mm = m.clone();
                    mm.set_exp(slot, 0);
                    p1.add_term(mm, c.clone());
                }
                e => panic!("split_binary: exponent {e} in slot {slot}"),
            }
        }
        (p0, p1)
    }

    /// Exact quotient `self / divisor` in the Laurent ring, if it exists.
    ///
    /// `divisor` must be an ordinary polynomial without monomial content.
    pub fn exact_div(&self, divisor: &Poly) -> Option<Poly> {
        if self.is_zero() {
            return Some(self.clone());
        }
        let shift = self.min_exponents().meet(&Monomial::one(self.nvars)).inv();
        let mut rem = self.mul_monomial(&shift, &Rational::one());
        let (lm, lc) = divisor.leading_term()?;
        let (lm, lc) = (lm.clone(), lc.clone());
        let mut quotient = Poly::zero(self.nvars);
        while let Some((m, c)) = rem.leading_term() {
            if !lm.divides(m) {
                return None;
            }
            let qm = m.div(&lm);
            let qc = c / &lc;
            rem = rem.sub(&divisor.mul_monomial(&qm, &qc));
            quotient.add_term(qm, qc);
        }
        Some(quotient.mul_monomial(&shift.inv(), &Rational::one()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symcore::rational::int;

    fn x(e: &[i32]) -> Monomial {
        Monomial::from_exponents(e)
    }

    #[test]
    fn exact_division() {
        // (a + b)^2 / (a + b)
        let mut s = Poly::zero(2);
        s.add_term(x(&[1, 0]), int(1));
        s.add_term(x(&[0, 1]), int(1));
        let sq = s.mul(&s);
        assert_eq!(sq.exact_div(&s), Some(s.clone()));
        // Laurent numerator: (a + b) / a^2 divided by (a + b)
        let laurent = s.mul_monomial(&x(&[-2, 0]), &int(1));
        assert_eq!(
            laurent.exact_div(&s),
            Some(Poly::monomial(x(&[-2, 0]), int(1)))
        );
        let mut other = Poly::zero(2);
        other.add_term(x(&[1, 0]), int(1));
        other.add_term(x(&[0, 0]), int(1));
        assert_eq!(sq.exact_div(&other), None);
    }

    #[test]
    fn pow_and_diff() {
        let mut s = Poly::zero(1);
        s.add_term(x(&[1]), int(1));
        s.add_term(x(&[0]), int(1));
        let cube = s.pow(3);
        assert_eq!(cube.len(), 4);
        assert_eq!(cube.diff_slot(0), s.pow(2).scale(&int(3)));
    }
}
