//! Reduction of order for autonomous three-dimensional systems: one
//! coordinate becomes the independent variable `y`, the others `u1, u2`
//! stay second order, and the pivot velocity `u6` satisfies a first-order
//! equation. Symmetries of the reduced system of the shape
//! `y d/dy + u1 d/du1 + u2 d/du2 + c u6 d/du6` give the constant `xi = 1 - c`
//! of the nonlocal generator `(int xi dt) d/dt + eta_k d/dx_k`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_traits::{One, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::determine::{
    self, Ansatz, AnsatzSpec, DetermineError, DeterminingSystem, SymmetryBasis,
};
use crate::linalg::Echelon;
use crate::symcore::rational::int;
use crate::symcore::{Monomial, Rational, Ring, SymError, SymExpr, VarId};
use crate::vectorfield::{point_total_derivative, prolongation_residual, OdeSystem, VectorField};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReductionError {
    #[error("reduction needs an autonomous system; the right-hand side of equation {0} depends on the independent variable")]
    NotAutonomous(usize),
    #[error("reduction is implemented for three coordinates, got {0}")]
    Dimension(usize),
    #[error("pivot {0} is not a coordinate index in 1..3")]
    Pivot(usize),
    #[error(transparent)]
    Symbolic(#[from] SymError),
    #[error(transparent)]
    Determine(#[from] DetermineError),
    #[error(
        "no reduced symmetry of the form y d/dy + u1 d/du1 + u2 d/du2 + c u6 d/du6 in the window"
    )]
    NoCandidate,
    #[error("the coefficient c of u6 d/du6 is not determined by the reduced symmetries")]
    Ambiguous,
    #[error(transparent)]
    Shape(#[from] ShapeError),
}

/// The reduced symmetry does not have the shape `zeta = y`, `eta6 = c u6`.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("expected zeta = y and eta6 = c*u6, got zeta = {zeta}, eta6 = {eta6}")]
pub struct ShapeError {
    pub zeta: String,
    pub eta6: String,
}

/// `u_j'' = Omega_j`, `u6' = Omega_6` in the variables `y, u1, u2, u6` and
/// the derivatives `du1, du2`.
#[derive(Clone, Debug)]
pub struct ReducedSystem {
    original: Arc<Ring>,
    pivot: usize,
    others: [usize; 2],
    ring: Arc<Ring>,
    omega: [SymExpr; 3],
}

const Y: VarId = VarId::Indep;
const U6: VarId = VarId::Coord(3);

/// Ring of the reduced system. The radical, when present, is
/// `r^2 = u1^2 + u2^2 + y^2`.
pub fn reduced_ring(radical: bool) -> Arc<Ring> {
    let mut names: Vec<String> = ["y", "u1", "u2", "u6", "du1", "du2", "du6"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let radical_vars = radical.then(|| {
        names.push("r".into());
        vec![VarId::Coord(1), VarId::Coord(2), VarId::Indep]
    });
    Ring::custom(3, radical_vars, names)
}

pub fn reduce_order(sys: &OdeSystem, pivot: usize) -> Result<ReducedSystem, ReductionError> {
    if sys.n() != 3 {
        return Err(ReductionError::Dimension(sys.n()));
    }
    if !(1..=3).contains(&pivot) {
        return Err(ReductionError::Pivot(pivot));
    }
    if let Some(a) = sys.rhs().iter().position(|w| w.mentions(VarId::Indep)) {
        return Err(ReductionError::NotAutonomous(a + 1));
    }
    let original = sys.ring().clone();
    let ring = reduced_ring(original.has_radical());
    let others: Vec<usize> = (1..=3).filter(|&a| a != pivot).collect();
    let others = [others[0], others[1]];
    let u6 = SymExpr::var(&ring, U6);
    let mut bindings = BTreeMap::new();
    for (j, &a) in others.iter().enumerate() {
        bindings.insert(VarId::Coord(a), SymExpr::var(&ring, VarId::Coord(j + 1)));
        bindings.insert(
            VarId::Velocity(a),
            &u6 * SymExpr::var(&ring, VarId::Velocity(j + 1)),
        );
    }
    bindings.insert(VarId::Coord(pivot), SymExpr::var(&ring, Y));
    bindings.insert(VarId::Velocity(pivot), u6.clone());
    if original.has_radical() {
        bindings.insert(VarId::Radical, SymExpr::var(&ring, VarId::Radical));
    }
    let f = |a: usize| sys.rhs()[a - 1].substitute(&bindings, &ring);
    let fk = f(pivot)?;
    let u6_sq = u6.pow(2)?;
    let mut omega = Vec::with_capacity(3);
    for (j, &a) in others.iter().enumerate() {
        let du = SymExpr::var(&ring, VarId::Velocity(j + 1));
        omega.push((f(a)? - &fk * du).checked_div(&u6_sq)?);
    }
    omega.push(fk.checked_div(&u6)?);
    let omega: [SymExpr; 3] = omega.try_into().unwrap();
    Ok(ReducedSystem {
        original,
        pivot,
        others,
        ring,
        omega,
    })
}

/// A point symmetry `zeta d/dy + eta1 d/du1 + eta2 d/du2 + eta6 d/du6` of the
/// reduced system.
#[derive(Clone, Debug, PartialEq)]
pub struct MixedSymmetry {
    pub field: VectorField,
}

impl MixedSymmetry {
    pub fn new(zeta: SymExpr, eta1: SymExpr, eta2: SymExpr, eta6: SymExpr) -> Self {
        MixedSymmetry {
            field: VectorField::new(zeta, vec![eta1, eta2, eta6]),
        }
    }

    pub fn zeta(&self) -> &SymExpr {
        self.field.tau()
    }

    /// `eta1`, `eta2` for `j = 1, 2`; `eta6` for `j = 3`.
    pub fn eta(&self, j: usize) -> &SymExpr {
        &self.field.eta()[j - 1]
    }

    pub fn eta6(&self) -> &SymExpr {
        self.eta(3)
    }
}

impl fmt::Display for MixedSymmetry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.field.fmt(f)
    }
}

impl ReducedSystem {
    pub fn ring(&self) -> &Arc<Ring> {
        &self.ring
    }

    pub fn original_ring(&self) -> &Arc<Ring> {
        &self.original
    }

    pub fn pivot(&self) -> usize {
        self.pivot
    }

    pub fn others(&self) -> [usize; 2] {
        self.others
    }

    /// `Omega_1`, `Omega_2`.
    pub fn omega(&self, j: usize) -> &SymExpr {
        &self.omega[j - 1]
    }

    pub fn omega6(&self) -> &SymExpr {
        &self.omega[2]
    }

    /// `pr X(Omega) - eta^(k)` for the two second-order equations and the
    /// first-order one, with `u6'` replaced by `Omega_6`.
    pub fn residuals(&self, ms: &MixedSymmetry) -> Vec<SymExpr> {
        prolongation_residual(&ms.field, &[2, 2, 1], &self.omega)
    }

    // u_i' for i = 1, 2, 6 with u6' on shell
    fn primes(&self) -> [SymExpr; 3] {
        [
            SymExpr::var(&self.ring, VarId::Velocity(1)),
            SymExpr::var(&self.ring, VarId::Velocity(2)),
            self.omega6().clone(),
        ]
    }

    /// First prolongation `eta_l,y - zeta_y u_l' + (eta_l,u_i - u_l' zeta,u_i) u_i'`.
    fn eta_prime(&self, ms: &MixedSymmetry, l: usize) -> SymExpr {
        let primes = self.primes();
        let (zeta, eta) = (ms.zeta(), ms.eta(l));
        let ul = &primes[l - 1];
        let mut acc = eta.diff(Y) - zeta.diff(Y) * ul;
        for (i, ui) in primes.iter().enumerate() {
            let u = VarId::Coord(i + 1);
            acc = acc + (eta.diff(u) - ul * zeta.diff(u)) * ui;
        }
        acc
    }

    /// `X Omega_6 - [eta6,y + (eta6,u_i - zeta,u_i Omega_6) u_i' - zeta_y u6']`
    /// with `X` carrying the first prolongation on `u1', u2'`.
    pub fn first_order_condition(&self, ms: &MixedSymmetry) -> SymExpr {
        let primes = self.primes();
        let w = self.omega6();
        let mut lhs = ms.field.apply(w);
        for l in 1..=2 {
            let d = w.diff(VarId::Velocity(l));
            if !d.is_zero() {
                lhs = lhs + self.eta_prime(ms, l) * d;
            }
        }
        let (zeta, eta6) = (ms.zeta(), ms.eta6());
        let mut rhs = eta6.diff(Y) - zeta.diff(Y) * &primes[2];
        for (i, ui) in primes.iter().enumerate() {
            let u = VarId::Coord(i + 1);
            rhs = rhs + (eta6.diff(u) - zeta.diff(u) * w) * ui;
        }
        lhs - rhs
    }

    /// The second-order condition for `u_l'' = Omega_l` in the
    /// one-dimensional expanded form, sums over `i, j` running through
    /// `u1, u2, u6`. Agrees with the corresponding entry of
    /// [`ReducedSystem::residuals`] when `zeta` depends on `y` only and
    /// `eta_l` on `(y, u_l)` only; it lacks the cross terms otherwise.
    pub fn second_order_condition(&self, ms: &MixedSymmetry, l: usize) -> SymExpr {
        let primes = self.primes();
        let omegas = [self.omega(1), self.omega(2), self.omega6()];
        let w = self.omega(l);
        let (zeta, eta) = (ms.zeta(), ms.eta(l));
        let u = |i: usize| VarId::Coord(i + 1);
        let ul = &primes[l - 1];
        let mut acc = ms.field.apply(w);
        for m in 1..=2 {
            let d = w.diff(VarId::Velocity(m));
            if !d.is_zero() {
                acc = acc + self.eta_prime(ms, m) * d;
            }
        }
        let mut bracket = eta.diff(u(l - 1)) - zeta.diff(Y).scale(&int(2));
        for (i, ui) in primes.iter().enumerate() {
            bracket = bracket - (zeta.diff(u(i)) * ui).scale(&int(3));
        }
        acc = acc - bracket * w;
        let eta_y = eta.diff(Y);
        let zeta_y = zeta.diff(Y);
        acc = acc - eta_y.diff(Y);
        for (i, ui) in primes.iter().enumerate() {
            acc = acc - (eta_y.diff(u(i)).scale(&int(2)) - zeta_y.diff(u(i))) * ui;
        }
        acc = acc + zeta_y.diff(Y) * ul;
        for (i, ui) in primes.iter().enumerate() {
            let zi = zeta.diff(u(i));
            acc = acc + &zi * ul * omegas[i];
            acc = acc + zeta_y.diff(u(i)) * ul * ui;
            for (j, uj) in primes.iter().enumerate() {
                acc = acc - eta.diff(u(j)).diff(u(i)) * ui * uj;
                acc = acc + zi.diff(u(j)) * ul * ui * uj;
            }
        }
        acc
    }

    /// Whether every reduced condition vanishes identically.
    pub fn is_symmetry(&self, ms: &MixedSymmetry) -> bool {
        self.residuals(ms).iter().all(SymExpr::is_zero) && self.first_order_condition(ms).is_zero()
    }
}

/// Symmetries of the reduced system inside the window.
pub fn find_reduced_symmetries(
    rs: &ReducedSystem,
    spec: &AnsatzSpec,
) -> Result<SymmetryBasis, ReductionError> {
    let ansatz = Ansatz::build(spec, rs.ring())?;
    let residuals: Vec<Vec<SymExpr>> = (0..ansatz.len())
        .into_par_iter()
        .map(|k| {
            let ms = MixedSymmetry {
                field: ansatz.basis_field(k),
            };
            let mut r = rs.residuals(&ms);
            r.push(rs.first_order_condition(&ms));
            r
        })
        .collect();
    let ds = DeterminingSystem {
        ansatz,
        rows: determine::assemble_rows(&residuals),
    };
    let basis = determine::solve_nullspace(
        &ds,
        |f| rs.is_symmetry(&MixedSymmetry { field: f.clone() }),
        false,
    )?;
    Ok(basis)
}

/// Picks the element `y d/dy + u1 d/du1 + u2 d/du2 + c u6 d/du6` of the
/// found span; `c` must be unique.
pub fn krause_candidate(
    rs: &ReducedSystem,
    basis: &SymmetryBasis,
) -> Result<MixedSymmetry, ReductionError> {
    let ansatz = &basis.ansatz;
    let ring = rs.ring();
    let v = |var: VarId| SymExpr::var(ring, var);
    let target = VectorField::new(
        v(Y),
        vec![v(VarId::Coord(1)), v(VarId::Coord(2)), SymExpr::zero(ring)],
    );
    let target = ansatz
        .project(&target)
        .map_err(|_| ReductionError::NoCandidate)?;
    let mut u6 = Monomial::one(ring.nvars());
    u6.set_exp(ring.slot(U6), 1);
    let per = ansatz.monomials().len();
    let free = ansatz
        .monomials()
        .binary_search(&u6)
        .map(|i| 3 * per + i)
        .map_err(|_| ReductionError::NoCandidate)?;
    // unknowns: basis weights a_k, then c, then the constant term
    let m = basis.coeff_vectors.len();
    let mut e = Echelon::new(m + 2);
    for (col, t) in target.iter().enumerate() {
        let mut row: Vec<(usize, Rational)> = basis
            .coeff_vectors
            .iter()
            .enumerate()
            .filter(|(_, b)| !b[col].is_zero())
            .map(|(k, b)| (k, b[col].clone()))
            .collect();
        if col == free {
            row.push((m, -Rational::one()));
        }
        if !t.is_zero() {
            row.push((m + 1, -t.clone()));
        }
        e.insert(&row);
    }
    let pairs: Vec<[Rational; 2]> = e
        .nullspace()
        .into_iter()
        .map(|n| [n[m].clone(), n[m + 1].clone()])
        .collect();
    let solvable = pairs.iter().any(|p| !p[1].is_zero());
    if !solvable {
        return Err(ReductionError::NoCandidate);
    }
    if crate::linalg::rank(&pairs.iter().map(|p| p.to_vec()).collect::<Vec<_>>()) > 1 {
        return Err(ReductionError::Ambiguous);
    }
    let p = pairs.iter().find(|p| !p[1].is_zero()).unwrap();
    let c = &p[0] / &p[1];
    Ok(MixedSymmetry::new(
        v(Y),
        v(VarId::Coord(1)),
        v(VarId::Coord(2)),
        v(U6).scale(&c),
    ))
}

/// `(int xi dt) d/dt + eta_k d/dx_k` in the original variables.
#[derive(Clone, Debug, PartialEq)]
pub struct NonlocalGenerator {
    pub xi: Rational,
    pub eta: Vec<SymExpr>,
}

impl fmt::Display for NonlocalGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(int {} dt) d/dt",
            crate::symcore::rational::format_rational(&self.xi)
        )?;
        for (k, e) in self.eta.iter().enumerate() {
            if !e.is_zero() {
                let name = e.ring().name(VarId::Coord(k + 1)).to_string();
                write!(f, " + ({e}) d/d{name}")?;
            }
        }
        Ok(())
    }
}

pub fn reconstruct_nonlocal(
    rs: &ReducedSystem,
    ms: &MixedSymmetry,
) -> Result<NonlocalGenerator, ShapeError> {
    let ring = rs.ring();
    let shape = || ShapeError {
        zeta: ms.zeta().to_string(),
        eta6: ms.eta6().to_string(),
    };
    if *ms.zeta() != SymExpr::var(ring, Y) {
        return Err(shape());
    }
    let u6 = SymExpr::var(ring, U6);
    let c = ms
        .eta6()
        .checked_div(&u6)
        .ok()
        .and_then(|q| q.as_constant())
        .ok_or_else(shape)?;
    let xi = Rational::one() - &c;

    let original = &rs.original;
    let mut back = BTreeMap::new();
    back.insert(Y, SymExpr::var(original, VarId::Coord(rs.pivot)));
    for (j, &a) in rs.others.iter().enumerate() {
        back.insert(VarId::Coord(j + 1), SymExpr::var(original, VarId::Coord(a)));
    }
    back.insert(U6, SymExpr::var(original, VarId::Velocity(rs.pivot)));
    if ring.has_radical() {
        back.insert(VarId::Radical, SymExpr::var(original, VarId::Radical));
    }
    let map = |e: &SymExpr| e.substitute(&back, original).map_err(|_| shape());
    let mut eta = vec![SymExpr::zero(original); 3];
    eta[rs.pivot - 1] = map(ms.zeta())?;
    for (j, &a) in rs.others.iter().enumerate() {
        eta[a - 1] = map(ms.eta(j + 1))?;
    }
    // d eta_pivot / dt - xi * v_pivot must reproduce eta6
    let g6 = map(ms.eta6())?;
    let v = SymExpr::var(original, VarId::Velocity(rs.pivot));
    let check = point_total_derivative(&eta[rs.pivot - 1]) - v.scale(&xi) - g6;
    if !check.is_zero() {
        return Err(shape());
    }
    Ok(NonlocalGenerator { xi, eta })
}

/// Outcome of the whole reduction pipeline for one system.
#[derive(Clone, Debug)]
pub struct KrauseResult {
    pub reduced: ReducedSystem,
    pub basis: SymmetryBasis,
    pub candidate: MixedSymmetry,
    pub generator: NonlocalGenerator,
}

pub fn krause_xi(
    sys: &OdeSystem,
    pivot: usize,
    spec: &AnsatzSpec,
) -> Result<KrauseResult, ReductionError> {
    let reduced = reduce_order(sys, pivot)?;
    let basis = find_reduced_symmetries(&reduced, spec)?;
    let candidate = krause_candidate(&reduced, &basis)?;
    let generator = reconstruct_nonlocal(&reduced, &candidate)?;
    Ok(KrauseResult {
        reduced,
        basis,
        candidate,
        generator,
    })
}

#[cfg(test)]
mod tests;
