//! Structure constants of finite sets of generators and a best-effort
//! identification of the algebra they span.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::linalg::{self, Echelon};
use crate::symcore::rational::int;
use crate::symcore::{Monomial, Rational};
use crate::vectorfield::VectorField;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClosureError {
    #[error("[X{i}, X{j}] = {bracket} is not in the span of the basis")]
    NotClosed { i: usize, j: usize, bracket: String },
    #[error("generator X{0} has a non-polynomial component")]
    NotPolynomial(usize),
    #[error("the generators are linearly dependent")]
    Dependent,
    #[error("structure constants violate the Jacobi identity")]
    Jacobi,
}

/// `[X_i, X_j] = sum c X_k` as `(i, j, [(k, c)])`.
pub type BracketEntry = (usize, usize, Vec<(usize, Rational)>);

/// `[X_i, X_j] = sum_k c[i][j][k] X_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct StructureConstants {
    dim: usize,
    c: Vec<Vec<Vec<Rational>>>,
}

type Matrix = Vec<Vec<Rational>>;

impl StructureConstants {
    pub fn zero(dim: usize) -> Self {
        StructureConstants {
            dim,
            c: vec![vec![vec![Rational::zero(); dim]; dim]; dim],
        }
    }

    /// Builds the table from `(i, j, [(k, c)])` entries (0-based), filling
    /// in antisymmetry.
    pub fn from_brackets(dim: usize, entries: &[BracketEntry]) -> Self {
        let mut sc = Self::zero(dim);
        for (i, j, res) in entries {
            for (k, v) in res {
                sc.c[*i][*j][*k] = v.clone();
                sc.c[*j][*i][*k] = -v.clone();
            }
        }
        sc
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> &Rational {
        &self.c[i][j][k]
    }

    /// `[x, y]` for coordinate vectors.
    pub fn bracket(&self, x: &[Rational], y: &[Rational]) -> Vec<Rational> {
        let mut out = vec![Rational::zero(); self.dim];
        for (i, xi) in x.iter().enumerate() {
            if xi.is_zero() {
                continue;
            }
            for (j, yj) in y.iter().enumerate() {
                if yj.is_zero() || i == j {
                    continue;
                }
                let w = xi * yj;
                for (k, c) in self.c[i][j].iter().enumerate() {
                    if !c.is_zero() {
                        out[k] += &w * c;
                    }
                }
            }
        }
        out
    }

    pub fn is_abelian(&self) -> bool {
        self.c.iter().flatten().flatten().all(Zero::is_zero)
    }

    pub fn is_antisymmetric(&self) -> bool {
        (0..self.dim).all(|i| {
            (0..self.dim)
                .all(|j| (0..self.dim).all(|k| self.c[i][j][k] == -self.c[j][i][k].clone()))
        })
    }

    pub fn satisfies_jacobi(&self) -> bool {
        let e = |i: usize| unit(self.dim, i);
        for i in 0..self.dim {
            for j in i + 1..self.dim {
                for k in j + 1..self.dim {
                    let a = self.bracket(&e(i), &self.bracket(&e(j), &e(k)));
                    let b = self.bracket(&e(j), &self.bracket(&e(k), &e(i)));
                    let c = self.bracket(&e(k), &self.bracket(&e(i), &e(j)));
                    if a.iter()
                        .zip(&b)
                        .zip(&c)
                        .any(|((a, b), c)| !(a + b + c).is_zero())
                    {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Structure constants in the basis given by the rows of `basis`,
    /// which must span a subalgebra.
    pub fn restrict(&self, basis: &[Vec<Rational>]) -> Option<StructureConstants> {
        let m = basis.len();
        let mut sc = Self::zero(m);
        for a in 0..m {
            for b in a + 1..m {
                let br = self.bracket(&basis[a], &basis[b]);
                let coeffs = linalg::solve_in_span(basis, &br)?;
                for (k, v) in coeffs.into_iter().enumerate() {
                    sc.c[b][a][k] = -v.clone();
                    sc.c[a][b][k] = v;
                }
            }
        }
        Some(sc)
    }

    /// Matrix of `ad(e_i)`: column `l` holds `[e_i, e_l]`.
    fn ad(&self, i: usize) -> Matrix {
        let d = self.dim;
        let mut m = vec![vec![Rational::zero(); d]; d];
        for (l, row) in self.c[i].iter().enumerate() {
            for (k, v) in row.iter().enumerate() {
                m[k][l] = v.clone();
            }
        }
        m
    }

    pub fn killing_form(&self) -> Matrix {
        let ads: Vec<Matrix> = (0..self.dim).map(|i| self.ad(i)).collect();
        let d = self.dim;
        let mut k = vec![vec![Rational::zero(); d]; d];
        for i in 0..d {
            for j in i..d {
                let mut tr = Rational::zero();
                for p in 0..d {
                    for q in 0..d {
                        if !ads[i][p][q].is_zero() && !ads[j][q][p].is_zero() {
                            tr += &ads[i][p][q] * &ads[j][q][p];
                        }
                    }
                }
                k[i][j] = tr.clone();
                k[j][i] = tr;
            }
        }
        k
    }

    fn derived_basis(&self, basis: &[Vec<Rational>]) -> Vec<Vec<Rational>> {
        let mut brackets = Vec::new();
        for a in 0..basis.len() {
            for b in a + 1..basis.len() {
                brackets.push(self.bracket(&basis[a], &basis[b]));
            }
        }
        linalg::span_basis(&brackets, self.dim)
    }

    pub fn derived_series(&self) -> Vec<usize> {
        let mut current: Vec<Vec<Rational>> = (0..self.dim).map(|i| unit(self.dim, i)).collect();
        let mut dims = vec![current.len()];
        loop {
            let next = self.derived_basis(&current);
            if next.len() == current.len() {
                break;
            }
            dims.push(next.len());
            if next.is_empty() {
                break;
            }
            current = next;
        }
        dims
    }

    pub fn center(&self) -> Vec<Vec<Rational>> {
        let d = self.dim;
        let mut e = Echelon::new(d);
        for j in 0..d {
            for k in 0..d {
                let row: Vec<(usize, Rational)> = (0..d)
                    .filter(|&i| !self.c[i][j][k].is_zero())
                    .map(|i| (i, self.c[i][j][k].clone()))
                    .collect();
                e.insert(&row);
            }
        }
        e.nullspace()
    }

    /// Linear maps commuting with every `ad(x)`.
    fn centroid(&self) -> Vec<Matrix> {
        let d = self.dim;
        let idx = |k: usize, m: usize| k * d + m;
        let mut e = Echelon::new(d * d);
        for i in 0..d {
            let a = self.ad(i);
            for k in 0..d {
                for l in 0..d {
                    // (T A - A T)[k][l]
                    let mut row: BTreeMap<usize, Rational> = BTreeMap::new();
                    for m in 0..d {
                        if !a[m][l].is_zero() {
                            *row.entry(idx(k, m)).or_insert_with(Rational::zero) += &a[m][l];
                        }
                        if !a[k][m].is_zero() {
                            *row.entry(idx(m, l)).or_insert_with(Rational::zero) -= &a[k][m];
                        }
                    }
                    let row: Vec<(usize, Rational)> =
                        row.into_iter().filter(|(_, v)| !v.is_zero()).collect();
                    e.insert(&row);
                }
            }
        }
        e.nullspace()
            .into_iter()
            .map(|v| v.chunks(d).map(<[Rational]>::to_vec).collect())
            .collect()
    }
}

/// Computes `[X_i, X_j]` for every pair and expresses it in the basis.
pub fn structure_constants(fields: &[VectorField]) -> Result<StructureConstants, ClosureError> {
    let mut keys: BTreeMap<(usize, Monomial), usize> = BTreeMap::new();
    let mut vectorize = |f: &VectorField| -> Option<BTreeMap<usize, Rational>> {
        let mut out = BTreeMap::new();
        for (comp, e) in f.components().enumerate() {
            if !e.is_polynomial() {
                return None;
            }
            for (m, c) in e.numerator().terms() {
                let n = keys.len();
                let k = *keys.entry((comp, m.clone())).or_insert(n);
                out.insert(k, c.clone());
            }
        }
        Some(out)
    };
    let d = fields.len();
    let mut sparse = Vec::new();
    for (i, f) in fields.iter().enumerate() {
        sparse.push(vectorize(f).ok_or(ClosureError::NotPolynomial(i + 1))?);
    }
    let mut brackets = BTreeMap::new();
    for i in 0..d {
        for j in i + 1..d {
            let br = fields[i].commutator(&fields[j]);
            let v = vectorize(&br).ok_or_else(|| ClosureError::NotClosed {
                i: i + 1,
                j: j + 1,
                bracket: br.to_string(),
            })?;
            brackets.insert((i, j), (br, v));
        }
    }
    let width = keys.len();
    let densify = |s: &BTreeMap<usize, Rational>| {
        let mut v = vec![Rational::zero(); width];
        for (k, c) in s {
            v[*k] = c.clone();
        }
        v
    };
    let basis: Vec<Vec<Rational>> = sparse.iter().map(densify).collect();
    if linalg::rank(&basis) != d {
        return Err(ClosureError::Dependent);
    }
    let mut sc = StructureConstants::zero(d);
    for ((i, j), (br, v)) in &brackets {
        let coeffs =
            linalg::solve_in_span(&basis, &densify(v)).ok_or_else(|| ClosureError::NotClosed {
                i: i + 1,
                j: j + 1,
                bracket: br.to_string(),
            })?;
        for (k, c) in coeffs.into_iter().enumerate() {
            sc.c[*j][*i][k] = -c.clone();
            sc.c[*i][*j][k] = c;
        }
    }
    if !sc.satisfies_jacobi() {
        return Err(ClosureError::Jacobi);
    }
    Ok(sc)
}

/// Recognized isomorphism type (over the reals) of a real Lie algebra.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Recognized {
    So3,
    Sl2R,
    G2Nonabelian,
    Unclassified(usize),
    Abelian(usize),
    DirectSum(Vec<Recognized>),
}

impl Recognized {
    fn sort_key(&self) -> (u8, std::cmp::Reverse<usize>) {
        match self {
            Recognized::So3 => (0, std::cmp::Reverse(3)),
            Recognized::Sl2R => (1, std::cmp::Reverse(3)),
            Recognized::G2Nonabelian => (2, std::cmp::Reverse(2)),
            Recognized::Unclassified(d) => (3, std::cmp::Reverse(*d)),
            Recognized::Abelian(d) => (4, std::cmp::Reverse(*d)),
            Recognized::DirectSum(_) => (5, std::cmp::Reverse(0)),
        }
    }

    /// Flattens nested sums, merges abelian summands, sorts.
    fn direct_sum(parts: Vec<Recognized>) -> Recognized {
        let mut flat = Vec::new();
        let mut abelian = 0;
        let mut stack = parts;
        while let Some(p) = stack.pop() {
            match p {
                Recognized::DirectSum(inner) => stack.extend(inner),
                Recognized::Abelian(d) => abelian += d,
                other => flat.push(other),
            }
        }
        if abelian > 0 {
            flat.push(Recognized::Abelian(abelian));
        }
        flat.sort_by_key(Recognized::sort_key);
        if flat.len() == 1 {
            flat.pop().unwrap()
        } else {
            Recognized::DirectSum(flat)
        }
    }
}

impl fmt::Display for Recognized {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Recognized::So3 => f.write_str("so3"),
            Recognized::Sl2R => f.write_str("sl2R"),
            Recognized::G2Nonabelian => f.write_str("g2_nonabelian"),
            Recognized::Unclassified(d) => write!(f, "unclassified({d})"),
            Recognized::Abelian(d) => write!(f, "abelian({d})"),
            Recognized::DirectSum(parts) => {
                let inner: Vec<String> = parts.iter().map(ToString::to_string).collect();
                write!(f, "direct_sum({})", inner.join(", "))
            }
        }
    }
}

impl Serialize for Recognized {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Signature `(positive, negative, zero)` of a symmetric form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Signature {
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
}

/// Exact signature by symmetric Gaussian elimination (congruence).
pub fn signature(form: &Matrix) -> Signature {
    let mut s = form.clone();
    let mut alive: Vec<usize> = (0..s.len()).collect();
    let mut sig = Signature {
        positive: 0,
        negative: 0,
        zero: 0,
    };
    while !alive.is_empty() {
        let pivot = alive.iter().copied().find(|&i| !s[i][i].is_zero());
        let p = match pivot {
            Some(p) => p,
            None => {
                let pair = alive
                    .iter()
                    .flat_map(|&i| alive.iter().map(move |&j| (i, j)))
                    .find(|&(i, j)| i != j && !s[i][j].is_zero());
                match pair {
                    Some((i, j)) => {
                        // e_i <- e_i + e_j
                        for &k in &alive {
                            let v = s[j][k].clone();
                            s[i][k] += v;
                        }
                        for &k in &alive {
                            let v = s[k][j].clone();
                            s[k][i] += v;
                        }
                        i
                    }
                    None => {
                        sig.zero += alive.len();
                        break;
                    }
                }
            }
        };
        let d = s[p][p].clone();
        if d.is_positive() {
            sig.positive += 1;
        } else {
            sig.negative += 1;
        }
        alive.retain(|&i| i != p);
        for &j in &alive {
            if s[j][p].is_zero() {
                continue;
            }
            let f = &s[j][p] / &d;
            for &k in &alive {
                let v = &f * &s[p][k];
                s[j][k] -= v;
            }
        }
    }
    sig
}

#[derive(Clone, Debug, Serialize)]
pub struct AlgebraReport {
    pub dim: usize,
    pub abelian: bool,
    pub derived_series: Vec<usize>,
    pub center_dim: usize,
    pub killing_signature: Signature,
    pub recognized: Recognized,
}

pub fn classify(sc: &StructureConstants) -> AlgebraReport {
    AlgebraReport {
        dim: sc.dim(),
        abelian: sc.is_abelian(),
        derived_series: sc.derived_series(),
        center_dim: sc.center().len(),
        killing_signature: signature(&sc.killing_form()),
        recognized: recognize(sc),
    }
}

fn unit(d: usize, i: usize) -> Vec<Rational> {
    let mut v = vec![Rational::zero(); d];
    v[i] = Rational::one();
    v
}

fn recognize(sc: &StructureConstants) -> Recognized {
    let d = sc.dim();
    if sc.is_abelian() {
        return Recognized::Abelian(d);
    }
    if let Some((a, b)) = split_central(sc) {
        return Recognized::direct_sum(vec![Recognized::Abelian(a), recognize(&b)]);
    }
    if let Some((k, i)) = split_by_centroid(sc) {
        return Recognized::direct_sum(vec![recognize(&k), recognize(&i)]);
    }
    indecomposable(sc)
}

// Central elements outside the derived algebra split off as an abelian
// summand; the complement is chosen to contain the derived algebra.
fn split_central(sc: &StructureConstants) -> Option<(usize, StructureConstants)> {
    let d = sc.dim();
    let all: Vec<Vec<Rational>> = (0..d).map(|i| unit(d, i)).collect();
    let derived = sc.derived_basis(&all);
    let mut e = Echelon::new(d);
    for v in &derived {
        e.insert_dense(v);
    }
    let mut central = 0;
    for z in sc.center() {
        if e.insert_dense(&z) {
            central += 1;
        }
    }
    if central == 0 {
        return None;
    }
    let mut w = derived.clone();
    for u in all {
        if w.len() == d - central {
            break;
        }
        if e.insert_dense(&u) {
            w.push(u);
        }
    }
    Some((
        central,
        sc.restrict(&w)
            .expect("complement contains the derived algebra"),
    ))
}

fn mat_mul(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.len();
    let mut out = vec![vec![Rational::zero(); n]; n];
    for i in 0..n {
        for k in 0..n {
            if a[i][k].is_zero() {
                continue;
            }
            for j in 0..n {
                if !b[k][j].is_zero() {
                    out[i][j] += &a[i][k] * &b[k][j];
                }
            }
        }
    }
    out
}

/// Characteristic polynomial coefficients `c_0..c_n` (monic, `c_n = 1`)
/// by the Faddeev-LeVerrier recursion.
pub fn char_poly(a: &Matrix) -> Vec<Rational> {
    let n = a.len();
    let mut coeffs = vec![Rational::zero(); n + 1];
    coeffs[n] = Rational::one();
    let mut m: Matrix = vec![vec![Rational::zero(); n]; n];
    for k in 1..=n {
        // M_k = A M_{k-1} + c_{n-k+1} I
        let mut next = mat_mul(a, &m);
        for (i, row) in next.iter_mut().enumerate() {
            row[i] += &coeffs[n - k + 1];
        }
        m = next;
        let am = mat_mul(a, &m);
        let tr: Rational = (0..n).map(|i| am[i][i].clone()).sum();
        coeffs[n - k] = -tr / int(k as i64);
    }
    coeffs
}

fn divisors(v: &num_bigint::BigInt) -> Option<Vec<num_bigint::BigInt>> {
    use num_bigint::BigInt;
    let v: u64 = v.abs().try_into().ok()?;
    if v > 1 << 50 {
        return None;
    }
    let mut out = Vec::new();
    let mut i = 1u64;
    while i * i <= v {
        if v.is_multiple_of(i) {
            out.push(BigInt::from(i));
            out.push(BigInt::from(v / i));
        }
        i += 1;
    }
    Some(out)
}

fn trim(mut p: Vec<Rational>) -> Vec<Rational> {
    while p.last().is_some_and(Zero::is_zero) {
        p.pop();
    }
    p
}

// remainder of a by b (b nonzero, both trimmed)
fn poly_rem(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    let mut r = a.to_vec();
    let lead = b.last().unwrap();
    while r.len() >= b.len() {
        let f = r.last().unwrap() / lead;
        let shift = r.len() - b.len();
        for (i, c) in b.iter().enumerate() {
            r[shift + i] -= &f * c;
        }
        r.pop();
        r = trim(r);
    }
    r
}

fn poly_quo(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    let mut r = a.to_vec();
    let mut q = vec![Rational::zero(); a.len().saturating_sub(b.len()) + 1];
    let lead = b.last().unwrap();
    while r.len() >= b.len() && !r.is_empty() {
        let f = r.last().unwrap() / lead;
        let shift = r.len() - b.len();
        for (i, c) in b.iter().enumerate() {
            r[shift + i] -= &f * c;
        }
        q[shift] = f;
        r.pop();
    }
    trim(q)
}

fn poly_gcd(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    let (mut a, mut b) = (trim(a.to_vec()), trim(b.to_vec()));
    while !b.is_empty() {
        let r = poly_rem(&a, &b);
        a = b;
        b = r;
    }
    a
}

/// Rational roots of a polynomial given by coefficients `c_0..c_n`.
fn rational_roots(coeffs: &[Rational]) -> Vec<Rational> {
    let p = trim(coeffs.to_vec());
    if p.len() < 2 {
        return Vec::new();
    }
    // squarefree part: distinct roots only, much smaller coefficients
    let dp: Vec<Rational> = p
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, c)| c * int(i as i64))
        .collect();
    let g = poly_gcd(&p, &dp);
    let s = poly_quo(&p, &g);
    let ints = crate::symcore::rational::primitive_integer_vector(&s);
    let mut roots = Vec::new();
    let low = ints.iter().position(|c| !c.is_zero()).unwrap_or(0);
    if low > 0 {
        roots.push(Rational::zero());
    }
    let high = ints.len() - 1;
    if high == low {
        return roots;
    }
    let (Some(ps), Some(qs)) = (divisors(&ints[low]), divisors(&ints[high])) else {
        return roots;
    };
    let eval = |x: &Rational| -> Rational {
        ints.iter().rev().fold(Rational::zero(), |acc, c| {
            acc * x + Rational::from_integer(c.clone())
        })
    };
    for p in &ps {
        for q in &qs {
            for sign in [1, -1] {
                let x = Rational::new(p * sign, q.clone());
                if !roots.contains(&x) && eval(&x).is_zero() {
                    roots.push(x);
                }
            }
        }
    }
    roots.sort();
    roots
}

fn kernel(m: &Matrix) -> Vec<Vec<Rational>> {
    let mut e = Echelon::new(m.len());
    for row in m {
        e.insert_dense(row);
    }
    e.nullspace()
}

fn image(m: &Matrix) -> Vec<Vec<Rational>> {
    let n = m.len();
    let cols: Vec<Vec<Rational>> = (0..n)
        .map(|j| (0..n).map(|i| m[i][j].clone()).collect())
        .collect();
    linalg::span_basis(&cols, n)
}

// A centroid element with a rational eigenvalue of partial multiplicity
// gives the Fitting decomposition into two ideals.
fn split_by_centroid(sc: &StructureConstants) -> Option<(StructureConstants, StructureConstants)> {
    let d = sc.dim();
    let centroid = sc.centroid();
    if centroid.len() <= 1 {
        return None;
    }
    let mut candidates = centroid.clone();
    // a fixed pseudo-generic combination as a fallback
    let mut combo = vec![vec![Rational::zero(); d]; d];
    for (n, t) in centroid.iter().enumerate() {
        let w = int(((n as i64) * 7919 + 13) % 97 + 1);
        for i in 0..d {
            for j in 0..d {
                combo[i][j] += &w * &t[i][j];
            }
        }
    }
    candidates.push(combo);
    for t in candidates {
        for lambda in rational_roots(&char_poly(&t)) {
            let mut shifted = t.clone();
            for (i, row) in shifted.iter_mut().enumerate() {
                row[i] -= &lambda;
            }
            let mut power = shifted.clone();
            for _ in 1..d {
                power = mat_mul(&power, &shifted);
            }
            let k = kernel(&power);
            if k.is_empty() || k.len() == d {
                continue;
            }
            let i = image(&power);
            let (ka, ia) = (sc.restrict(&k)?, sc.restrict(&i)?);
            return Some((ka, ia));
        }
    }
    None
}

fn indecomposable(sc: &StructureConstants) -> Recognized {
    match sc.dim() {
        1 => Recognized::Abelian(1),
        2 => Recognized::G2Nonabelian,
        3 => {
            let sig = signature(&sc.killing_form());
            let perfect = sc.derived_series() == vec![3];
            match (perfect, sig.positive, sig.negative) {
                (true, 0, 3) => Recognized::So3,
                (true, 2, 1) => Recognized::Sl2R,
                _ => Recognized::Unclassified(3),
            }
        }
        d => Recognized::Unclassified(d),
    }
}

#[cfg(test)]
mod tests;
