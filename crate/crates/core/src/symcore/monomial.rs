use std::cmp::Ordering;

use smallvec::SmallVec;

/// Laurent monomial: one signed exponent per slot of the owning ring.
///
/// Ordered graded-lexicographically (total degree first, then the exponent
/// vector), so the last key of a sorted map is the leading term.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Monomial(SmallVec<[i32; 8]>);

impl Monomial {
    pub fn one(nvars: usize) -> Self {
        Monomial(SmallVec::from_elem(0, nvars))
    }

    pub fn var(nvars: usize, slot: usize, exp: i32) -> Self {
        let mut m = Self::one(nvars);
        m.0[slot] = exp;
        m
    }

    pub fn from_exponents(exps: &[i32]) -> Self {
        Monomial(SmallVec::from_slice(exps))
    }

    pub fn nvars(&self) -> usize {
        self.0.len()
    }

    pub fn exp(&self, slot: usize) -> i32 {
        self.0[slot]
    }

    pub fn set_exp(&mut self, slot: usize, exp: i32) {
        self.0[slot] = exp;
    }

    pub fn exponents(&self) -> &[i32] {
        &self.0
    }

    pub fn degree(&self) -> i32 {
        self.0.iter().sum()
    }

    pub fn is_one(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// Laurent quotient; always defined.
    pub fn div(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn inv(&self) -> Monomial {
        Monomial(self.0.iter().map(|a| -a).collect())
    }

    /// Divisibility among ordinary (non-negative) monomials.
    pub fn divides(&self, other: &Monomial) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn meet(&self, other: &Monomial) -> Monomial {
        Monomial(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| *a.min(b))
                .collect(),
        )
    }

    /// Keeps only the listed slots, zeroing the rest.
    pub fn restrict(&self, keep: impl Fn(usize) -> bool) -> Monomial {
        Monomial(
            self.0
                .iter()
                .enumerate()
                .map(|(i, e)| if keep(i) { *e } else { 0 })
                .collect(),
        )
    }

    pub fn is_nonnegative(&self) -> bool {
        self.0.iter().all(|&e| e >= 0)
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
