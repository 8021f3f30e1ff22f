//! Exact sparse linear algebra over the rationals.
//!
//! Rows are scaled to primitive integer vectors and eliminated fraction-free;
//! after every combination the row is divided by the gcd of its entries.

use std::collections::{BTreeMap, HashSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::symcore::rational::primitive_integer_vector;
use crate::symcore::Rational;

type IntRow = BTreeMap<usize, BigInt>;

/// Incrementally maintained row echelon form.
#[derive(Clone, Debug, Default)]
pub struct Echelon {
    ncols: usize,
    // leading column -> row whose first nonzero entry is at that column
    pivots: BTreeMap<usize, IntRow>,
    seen: HashSet<Vec<(usize, BigInt)>>,
}

fn normalize(row: &mut IntRow) {
    let mut g = BigInt::zero();
    for v in row.values() {
        g = g.gcd(v);
        if g.is_one() {
            break;
        }
    }
    let negate = row.values().next().is_some_and(|v| v.is_negative());
    if g > BigInt::one() || negate {
        let g = if negate { -g } else { g };
        for v in row.values_mut() {
            *v = &*v / &g;
        }
    }
}

fn to_int_row(row: &[(usize, Rational)]) -> IntRow {
    let values: Vec<Rational> = row.iter().map(|(_, v)| v.clone()).collect();
    let ints = primitive_integer_vector(&values);
    row.iter()
        .map(|(c, _)| *c)
        .zip(ints)
        .filter(|(_, v)| !v.is_zero())
        .collect()
}

// row <- (a/g) row - (b/g) pivot, eliminating `col`
fn eliminate(row: &mut IntRow, pivot: &IntRow, col: usize) {
    let a = &pivot[&col];
    let b = row[&col].clone();
    let g = a.gcd(&b);
    let (ma, mb) = (a / &g, &b / &g);
    if !ma.is_one() {
        for v in row.values_mut() {
            *v *= &ma;
        }
    }
    for (c, v) in pivot {
        let entry = row.entry(*c).or_insert_with(BigInt::zero);
        *entry -= &mb * v;
        if entry.is_zero() {
            row.remove(c);
        }
    }
    normalize(row);
}

impl Echelon {
    pub fn new(ncols: usize) -> Self {
        Echelon {
            ncols,
            ..Default::default()
        }
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    fn reduce(&self, mut row: IntRow) -> IntRow {
        let mut cursor = 0;
        while let Some(c) = row.range(cursor..).next().map(|(c, _)| *c) {
            match self.pivots.get(&c) {
                Some(p) => eliminate(&mut row, p, c),
                None => cursor = c + 1,
            }
        }
        row
    }

    /// Adds a row; returns whether the rank grew.
    pub fn insert(&mut self, row: &[(usize, Rational)]) -> bool {
        debug_assert!(row.iter().all(|(c, _)| *c < self.ncols));
        let row = to_int_row(row);
        if row.is_empty() {
            return false;
        }
        let key: Vec<(usize, BigInt)> = row.iter().map(|(c, v)| (*c, v.clone())).collect();
        if !self.seen.insert(key) {
            return false;
        }
        let mut reduced = self.reduce(row);
        if reduced.is_empty() {
            return false;
        }
        normalize(&mut reduced);
        let lead = *reduced.keys().next().unwrap();
        self.pivots.insert(lead, reduced);
        true
    }

    pub fn insert_dense(&mut self, row: &[Rational]) -> bool {
        let sparse: Vec<(usize, Rational)> = row
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_zero())
            .map(|(c, v)| (c, v.clone()))
            .collect();
        self.insert(&sparse)
    }

    /// Whether `row` lies in the row space.
    pub fn contains_dense(&self, row: &[Rational]) -> bool {
        let sparse: Vec<(usize, Rational)> = row
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_zero())
            .map(|(c, v)| (c, v.clone()))
            .collect();
        self.reduce(to_int_row(&sparse)).is_empty()
    }

    /// Reduced row echelon form: monic pivots, rows sorted by pivot column.
    pub fn rref(&self) -> Vec<(usize, Vec<(usize, Rational)>)> {
        let mut rows: BTreeMap<usize, IntRow> = self.pivots.clone();
        let cols: Vec<usize> = rows.keys().copied().collect();
        for &c in cols.iter().rev() {
            let pivot = rows[&c].clone();
            for (_, row) in rows.range_mut(..c) {
                if row.contains_key(&c) {
                    eliminate(row, &pivot, c);
                }
            }
        }
        rows.into_iter()
            .map(|(c, row)| {
                let lead = Rational::from_integer(row[&c].clone());
                let entries = row
                    .into_iter()
                    .map(|(k, v)| (k, Rational::from_integer(v) / &lead))
                    .collect();
                (c, entries)
            })
            .collect()
    }

    /// Basis of `{x : row . x = 0 for every row}`, one vector per free
    /// column in increasing order, each with a 1 at its free column.
    pub fn nullspace(&self) -> Vec<Vec<Rational>> {
        let rref = self.rref();
        (0..self.ncols)
            .filter(|c| !self.pivots.contains_key(c))
            .map(|free| {
                let mut v = vec![Rational::zero(); self.ncols];
                v[free] = Rational::one();
                for (c, row) in &rref {
                    if let Some((_, entry)) = row.iter().find(|(k, _)| *k == free) {
                        v[*c] = -entry.clone();
                    }
                }
                v
            })
            .collect()
    }
}

/// Rank of a set of dense vectors.
pub fn rank(vectors: &[Vec<Rational>]) -> usize {
    let ncols = vectors.first().map_or(0, Vec::len);
    let mut e = Echelon::new(ncols);
    for v in vectors {
        e.insert_dense(v);
    }
    e.rank()
}

/// Canonical basis of the span of `vectors`: the nonzero rows of its
/// reduced row echelon form, ordered by leading column.
pub fn span_basis(vectors: &[Vec<Rational>], ncols: usize) -> Vec<Vec<Rational>> {
    let mut e = Echelon::new(ncols);
    for v in vectors {
        e.insert_dense(v);
    }
    e.rref()
        .into_iter()
        .map(|(_, row)| {
            let mut dense = vec![Rational::zero(); ncols];
            for (k, v) in row {
                dense[k] = v;
            }
            dense
        })
        .collect()
}

/// Coefficients `c` with `sum_k c_k basis[k] = target`, if any.
/// `basis` must be linearly independent.
pub fn solve_in_span(basis: &[Vec<Rational>], target: &[Rational]) -> Option<Vec<Rational>> {
    let m = basis.len();
    let mut e = Echelon::new(m + 1);
    for j in 0..target.len() {
        let mut row: Vec<(usize, Rational)> = (0..m)
            .filter(|&k| !basis[k][j].is_zero())
            .map(|k| (k, basis[k][j].clone()))
            .collect();
        if !target[j].is_zero() {
            row.push((m, -target[j].clone()));
        }
        e.insert(&row);
    }
    let rref = e.rref();
    if rref.iter().any(|(c, _)| *c == m) {
        return None;
    }
    assert_eq!(rref.len(), m, "basis is not linearly independent");
    let mut out = vec![Rational::zero(); m];
    for (c, row) in rref {
        if let Some((_, v)) = row.iter().find(|(k, _)| *k == m) {
            out[c] = -v.clone();
        }
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symcore::rational::{int, rat};
    use proptest::prelude::*;

    fn dense(rows: &[&[i64]]) -> Vec<Vec<Rational>> {
        rows.iter()
            .map(|r| r.iter().map(|&v| int(v)).collect())
            .collect()
    }

    #[test]
    fn small_nullspace() {
        let mut e = Echelon::new(3);
        e.insert_dense(&[int(1), int(2), int(3)]);
        e.insert_dense(&[int(2), int(4), int(6)]);
        assert_eq!(e.rank(), 1);
        let ns = e.nullspace();
        assert_eq!(ns, dense(&[&[-2, 1, 0], &[-3, 0, 1]]));
        e.insert_dense(&[int(0), int(1), int(1)]);
        assert_eq!(e.nullspace(), dense(&[&[-1, -1, 1]]));
    }

    #[test]
    fn rref_with_fractions() {
        let mut e = Echelon::new(2);
        e.insert_dense(&[int(2), int(3)]);
        let rref = e.rref();
        assert_eq!(rref[0].1, vec![(0, int(1)), (1, rat(3, 2))]);
    }

    #[test]
    fn span_solution() {
        let basis = dense(&[&[1, 0, 1], &[0, 1, 1]]);
        assert_eq!(
            solve_in_span(&basis, &[int(2), int(-3), int(-1)]),
            Some(vec![int(2), int(-3)])
        );
        assert_eq!(solve_in_span(&basis, &[int(1), int(0), int(0)]), None);
    }

    fn matrix() -> impl Strategy<Value = Vec<Vec<i64>>> {
        (1usize..6, 1usize..7).prop_flat_map(|(m, n)| {
            proptest::collection::vec(proptest::collection::vec(-3i64..=3, n), m)
        })
    }

    proptest! {
        #[test]
        fn nullspace_vectors_annihilate(rows in matrix()) {
            let n = rows[0].len();
            let mut e = Echelon::new(n);
            for r in &rows {
                e.insert_dense(&r.iter().map(|&v| int(v)).collect::<Vec<_>>());
            }
            let ns = e.nullspace();
            prop_assert_eq!(ns.len() + e.rank(), n);
            for v in &ns {
                for r in &rows {
                    let dot: Rational = r.iter().zip(v).map(|(&a, b)| int(a) * b).sum();
                    prop_assert!(dot.is_zero());
                }
            }
        }

        #[test]
        fn rank_ignores_row_and_column_order(rows in matrix(), seed in any::<u64>()) {
            let n = rows[0].len();
            let as_rat = |r: &Vec<i64>| r.iter().map(|&v| int(v)).collect::<Vec<_>>();
            let base = rank(&rows.iter().map(as_rat).collect::<Vec<_>>());
            let mut perm: Vec<usize> = (0..n).collect();
            let mut s = seed;
            for i in (1..n).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1);
                perm.swap(i, (s >> 33) as usize % (i + 1));
            }
            let permuted: Vec<Vec<Rational>> = rows
                .iter()
                .rev()
                .map(|r| perm.iter().map(|&c| int(r[c])).collect())
                .collect();
            prop_assert_eq!(rank(&permuted), base);
        }
    }
}
