//! Point-symmetry generators of second-order systems: first prolongation,
//! Lie bracket, and the symbolic residual of the symmetry condition.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::symcore::{Rational, Ring, SymExpr, VarId};

/// How the independent and dependent variables are read.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// `t`, `x1..xn`, `v1..vn`.
    Ode,
    /// Independent `x`, one dependent `u` with derivative `du`.
    Quantum1d,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Ode => "ode",
            Mode::Quantum1d => "quantum1d",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "ode" => Ok(Mode::Ode),
            "quantum1d" => Ok(Mode::Quantum1d),
            other => Err(format!(
                "unknown mode `{other}` (expected ode or quantum1d)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SystemError {
    #[error("expected {expected} right-hand sides, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("right-hand side {0} belongs to a different variable universe")]
    ForeignUniverse(usize),
}

/// `d^2 x_a / dt^2 = w_a(t, x, v)` for `a = 1..n`.
#[derive(Clone, Debug)]
pub struct OdeSystem {
    ring: Arc<Ring>,
    mode: Mode,
    rhs: Vec<SymExpr>,
    autonomous: bool,
    // d w_a / d x_b, d w_a / d v_b, d w_a / dt
    d_coord: Vec<Vec<SymExpr>>,
    d_vel: Vec<Vec<SymExpr>>,
    d_indep: Vec<SymExpr>,
}

impl OdeSystem {
    pub fn new(ring: Arc<Ring>, mode: Mode, rhs: Vec<SymExpr>) -> Result<Self, SystemError> {
        let n = ring.n();
        if rhs.len() != n {
            return Err(SystemError::Arity {
                expected: n,
                got: rhs.len(),
            });
        }
        if let Some(i) = rhs.iter().position(|e| **e.ring() != *ring) {
            return Err(SystemError::ForeignUniverse(i + 1));
        }
        let d_coord = rhs
            .iter()
            .map(|w| ring.coords().map(|x| w.diff(x)).collect())
            .collect();
        let d_vel = rhs
            .iter()
            .map(|w| ring.velocities().map(|v| w.diff(v)).collect())
            .collect();
        let d_indep: Vec<SymExpr> = rhs.iter().map(|w| w.diff(VarId::Indep)).collect();
        let autonomous = d_indep.iter().all(SymExpr::is_zero);
        Ok(OdeSystem {
            ring,
            mode,
            rhs,
            autonomous,
            d_coord,
            d_vel,
            d_indep,
        })
    }

    pub fn n(&self) -> usize {
        self.ring.n()
    }

    pub fn ring(&self) -> &Arc<Ring> {
        &self.ring
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn rhs(&self) -> &[SymExpr] {
        &self.rhs
    }

    pub fn is_autonomous(&self) -> bool {
        self.autonomous
    }

    /// Linear homogeneous in the dependent variables and their derivatives,
    /// with coefficients depending on the independent variable only.
    pub fn is_linear(&self) -> bool {
        let ring = &self.ring;
        if ring.has_radical() && self.rhs.iter().any(|w| w.mentions(VarId::Radical)) {
            return false;
        }
        let dependent: Vec<usize> = ring
            .coords()
            .chain(ring.velocities())
            .map(|v| ring.slot(v))
            .collect();
        self.rhs.iter().all(|w| {
            let den_ok = w
                .denominator_atoms()
                .all(|(a, _)| dependent.iter().all(|&s| !a.poly().mentions(s)));
            let num_ok = w.numerator().terms().all(|(m, _)| {
                dependent.iter().map(|&s| m.exp(s)).all(|e| e >= 0)
                    && dependent.iter().map(|&s| m.exp(s)).sum::<i32>() == 1
            });
            den_ok && num_ok
        })
    }

    /// Names of the right-hand sides in the file syntax (`ddot x1`, `ddot u`).
    pub fn lhs_name(&self, a: usize) -> String {
        format!("ddot {}", self.ring.name(VarId::Coord(a)))
    }
}

/// `X = tau d/dt + eta_a d/dx_a` with coefficients over `(t, x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    tau: SymExpr,
    eta: Vec<SymExpr>,
}

/// First prolongation: `etadot_a = D eta_a - v_a D tau`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProlongedField {
    pub base: VectorField,
    pub etadot: Vec<SymExpr>,
}

impl VectorField {
    pub fn new(tau: SymExpr, eta: Vec<SymExpr>) -> Self {
        assert_eq!(eta.len(), tau.ring().n(), "one eta per dependent variable");
        VectorField { tau, eta }
    }

    pub fn zero(ring: &Arc<Ring>) -> Self {
        VectorField {
            tau: SymExpr::zero(ring),
            eta: (0..ring.n()).map(|_| SymExpr::zero(ring)).collect(),
        }
    }

    /// Field with a single nonzero component; component 0 is `tau`.
    pub fn component(ring: &Arc<Ring>, index: usize, coefficient: SymExpr) -> Self {
        let mut field = Self::zero(ring);
        if index == 0 {
            field.tau = coefficient;
        } else {
            field.eta[index - 1] = coefficient;
        }
        field
    }

    pub fn ring(&self) -> &Arc<Ring> {
        self.tau.ring()
    }

    pub fn dim(&self) -> usize {
        self.eta.len()
    }

    pub fn tau(&self) -> &SymExpr {
        &self.tau
    }

    pub fn eta(&self) -> &[SymExpr] {
        &self.eta
    }

    /// `tau` followed by the `eta_a`.
    pub fn components(&self) -> impl Iterator<Item = &SymExpr> {
        std::iter::once(&self.tau).chain(self.eta.iter())
    }

    pub fn is_zero(&self) -> bool {
        self.components().all(SymExpr::is_zero)
    }

    pub fn scale(&self, c: &Rational) -> VectorField {
        VectorField {
            tau: self.tau.scale(c),
            eta: self.eta.iter().map(|e| e.scale(c)).collect(),
        }
    }

    pub fn add(&self, other: &VectorField) -> VectorField {
        VectorField {
            tau: &self.tau + &other.tau,
            eta: self
                .eta
                .iter()
                .zip(&other.eta)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &VectorField) -> VectorField {
        self.add(&other.scale(&-Rational::from_integer(1.into())))
    }

    /// `X(f) = tau f_t + eta_a f_{x_a}`.
    pub fn apply(&self, f: &SymExpr) -> SymExpr {
        let mut acc = if self.tau.is_zero() {
            SymExpr::zero(self.ring())
        } else {
            &self.tau * f.diff(VarId::Indep)
        };
        for (a, eta) in self.eta.iter().enumerate() {
            if !eta.is_zero() {
                acc = acc + eta * f.diff(VarId::Coord(a + 1));
            }
        }
        acc
    }

    /// Lie bracket `[X, Y]` with components `X(Y^i) - Y(X^i)`.
    pub fn commutator(&self, other: &VectorField) -> VectorField {
        VectorField {
            tau: self.apply(&other.tau) - other.apply(&self.tau),
            eta: self
                .eta
                .iter()
                .zip(&other.eta)
                .map(|(own, theirs)| self.apply(theirs) - other.apply(own))
                .collect(),
        }
    }

    pub fn prolong1(&self) -> ProlongedField {
        let dtau = point_total_derivative(&self.tau);
        let ring = self.ring();
        let etadot = self
            .eta
            .iter()
            .enumerate()
            .map(|(a, eta)| {
                point_total_derivative(eta) - SymExpr::var(ring, VarId::Velocity(a + 1)) * &dtau
            })
            .collect();
        ProlongedField {
            base: self.clone(),
            etadot,
        }
    }

    /// Left side of the expanded symmetry condition, one entry per equation.
    /// `X` is a symmetry iff every entry vanishes identically.
    pub fn residual(&self, sys: &OdeSystem) -> Vec<SymExpr> {
        let ring = sys.ring();
        let n = sys.n();
        assert_eq!(self.dim(), n, "field dimension does not match system");
        let t = VarId::Indep;
        let x = VarId::Coord;
        let vel: Vec<SymExpr> = ring.velocities().map(|v| SymExpr::var(ring, v)).collect();
        let zero = SymExpr::zero(ring);

        let tau = &self.tau;
        let tau_t = tau.diff(t);
        let tau_tt = tau_t.diff(t);
        let tau_x: Vec<SymExpr> = (1..=n).map(|b| tau.diff(x(b))).collect();
        let tau_tx: Vec<SymExpr> = tau_x.iter().map(|d| d.diff(t)).collect();
        let tau_xx: Vec<Vec<SymExpr>> = tau_x
            .iter()
            .map(|d| (1..=n).map(|c| d.diff(x(c))).collect())
            .collect();
        let eta_t: Vec<SymExpr> = self.eta.iter().map(|e| e.diff(t)).collect();
        let eta_tt: Vec<SymExpr> = eta_t.iter().map(|e| e.diff(t)).collect();
        let eta_x: Vec<Vec<SymExpr>> = self
            .eta
            .iter()
            .map(|e| (1..=n).map(|b| e.diff(x(b))).collect())
            .collect();
        let eta_tx: Vec<Vec<SymExpr>> = eta_t
            .iter()
            .map(|e| (1..=n).map(|b| e.diff(x(b))).collect())
            .collect();

        // v_b tau_b, v_b v_c tau_bc, v_c tau_tc
        let v_tau_x: SymExpr = sum(ring, (0..n).map(|b| &vel[b] * &tau_x[b]));
        let vv_tau_xx: SymExpr = sum(
            ring,
            (0..n).flat_map(|b| {
                let vel = &vel;
                let tau_xx = &tau_xx;
                (0..n).map(move |c| &vel[b] * &vel[c] * &tau_xx[b][c])
            }),
        );
        let v_tau_tx: SymExpr = sum(ring, (0..n).map(|c| &vel[c] * &tau_tx[c]));
        let dtau = &tau_t + &v_tau_x;

        // D eta_b - v_b D tau
        let etadot: Vec<SymExpr> = (0..n)
            .map(|b| {
                let d_eta = &eta_t[b] + sum(ring, (0..n).map(|c| &vel[c] * &eta_x[b][c]));
                d_eta - &vel[b] * &dtau
            })
            .collect();

        let w = sys.rhs();
        (0..n)
            .map(|a| {
                let mut r = zero.clone();
                for b in 0..n {
                    if !self.eta[b].is_zero() {
                        r = r + &self.eta[b] * &sys.d_coord[a][b];
                    }
                    if !etadot[b].is_zero() {
                        r = r + &etadot[b] * &sys.d_vel[a][b];
                    }
                }
                if !tau.is_zero() {
                    r = r + tau * &sys.d_indep[a];
                }
                r = r + (&w[a] * &dtau).scale(&Rational::from_integer(2.into()));
                for b in 0..n {
                    let bracket = &vel[a] * &tau_x[b] - &eta_x[a][b];
                    if !bracket.is_zero() {
                        r = r + &w[b] * bracket;
                    }
                }
                r = r + &vel[a] * &vv_tau_xx;
                r = r + &vel[a] * &tau_tt;
                r = r + (&vel[a] * &v_tau_tx).scale(&Rational::from_integer(2.into()));
                for b in 0..n {
                    let row = &eta_x[a][b];
                    if row.is_zero() {
                        continue;
                    }
                    for c in 0..n {
                        let d2 = row.diff(x(c + 1));
                        if !d2.is_zero() {
                            r = r - &vel[c] * &vel[b] * d2;
                        }
                    }
                }
                r = r - sum(ring, (0..n).map(|b| &vel[b] * &eta_tx[a][b]))
                    .scale(&Rational::from_integer(2.into()));
                r - &eta_tt[a]
            })
            .collect()
    }
}

fn sum(ring: &Arc<Ring>, terms: impl Iterator<Item = SymExpr>) -> SymExpr {
    terms.fold(
        SymExpr::zero(ring),
        |acc, e| if e.is_zero() { acc } else { acc + e },
    )
}

/// `D f = f_t + v_b f_{x_b}` for functions of `(t, x)`.
pub fn point_total_derivative(f: &SymExpr) -> SymExpr {
    let ring = f.ring();
    let mut acc = f.diff(VarId::Indep);
    for a in 1..=ring.n() {
        let d = f.diff(VarId::Coord(a));
        if !d.is_zero() {
            acc = acc + SymExpr::var(ring, VarId::Velocity(a)) * d;
        }
    }
    acc
}

/// Symmetry condition of a mixed-order system `u_a^(k_a) = rhs_a`
/// (`k_a` in {1, 2}) computed from the prolongation formula:
/// `pr X (rhs_a) - eta_a^(k_a)` on solutions.
///
/// Velocities of first-order variables are replaced by their right-hand
/// sides; their velocity slots must not occur.
pub fn prolongation_residual(field: &VectorField, orders: &[u8], rhs: &[SymExpr]) -> Vec<SymExpr> {
    let ring = field.ring().clone();
    let n = ring.n();
    assert_eq!(orders.len(), n);
    assert_eq!(rhs.len(), n);
    let vel: Vec<SymExpr> = (0..n)
        .map(|b| match orders[b] {
            1 => rhs[b].clone(),
            2 => SymExpr::var(&ring, VarId::Velocity(b + 1)),
            k => panic!("unsupported order {k}"),
        })
        .collect();
    let total = |f: &SymExpr| -> SymExpr {
        let mut acc = f.diff(VarId::Indep);
        for b in 0..n {
            let d = f.diff(VarId::Coord(b + 1));
            if !d.is_zero() {
                acc = acc + &vel[b] * d;
            }
            if orders[b] == 2 {
                let d = f.diff(VarId::Velocity(b + 1));
                if !d.is_zero() {
                    acc = acc + &rhs[b] * d;
                }
            }
        }
        acc
    };
    let dzeta = total(field.tau());
    let eta1: Vec<SymExpr> = (0..n)
        .map(|b| total(&field.eta()[b]) - &vel[b] * &dzeta)
        .collect();
    let prolonged_apply = |f: &SymExpr| -> SymExpr {
        let mut acc = field.apply(f);
        for b in 0..n {
            if orders[b] == 2 {
                let d = f.diff(VarId::Velocity(b + 1));
                if !d.is_zero() {
                    acc = acc + &eta1[b] * d;
                }
            }
        }
        acc
    };
    (0..n)
        .map(|a| {
            let top = if orders[a] == 2 {
                total(&eta1[a]) - &rhs[a] * &dzeta
            } else {
                eta1[a].clone()
            };
            prolonged_apply(&rhs[a]) - top
        })
        .collect()
}

impl fmt::Display for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ring = self.ring();
        let mut parts = Vec::new();
        for (i, c) in self.components().enumerate() {
            if c.is_zero() {
                continue;
            }
            let var = if i == 0 {
                VarId::Indep
            } else {
                VarId::Coord(i)
            };
            let coeff = c.to_string();
            let name = ring.name(var);
            if coeff == "1" {
                parts.push(format!("d/d{name}"));
            } else {
                parts.push(format!("({coeff}) d/d{name}"));
            }
        }
        if parts.is_empty() {
            f.write_str("0")
        } else {
            f.write_str(&parts.join(" + "))
        }
    }
}
