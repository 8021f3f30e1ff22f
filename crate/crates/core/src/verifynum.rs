//! Floating-point checks: fixed-step RK4 trajectories, finite flows of
//! generators, and the solution-mapping test.

use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::symcore::rational::to_f64;
use crate::symcore::{Poly, Ring, SymExpr, VarId};
use crate::vectorfield::{OdeSystem, VectorField};

/// Denominators and negative-power bases smaller than this count as a
/// singularity.
pub const SINGULAR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumError {
    #[error("singular evaluation at {location}")]
    Singular { location: String },
    #[error("non-finite value at {location}")]
    NonFinite { location: String },
    #[error("flowed times are not increasing at sample {index} ({before} then {after})")]
    NonMonotone {
        index: usize,
        before: f64,
        after: f64,
    },
    #[error("trajectory truncated at t = {at}: {reason}")]
    Truncated { at: f64, reason: String },
    #[error("initial state has {got} coordinates, the system has {expected}")]
    Arity { expected: usize, got: usize },
}

#[derive(Clone, Debug)]
struct Term {
    coeff: f64,
    factors: Vec<(usize, i32)>,
}

fn compile_poly(p: &Poly) -> Vec<Term> {
    p.terms()
        .map(|(m, c)| Term {
            coeff: to_f64(c),
            factors: m
                .exponents()
                .iter()
                .enumerate()
                .filter(|(_, &e)| e != 0)
                .map(|(s, &e)| (s, e))
                .collect(),
        })
        .collect()
}

/// A `SymExpr` prepared for repeated f64 evaluation.
#[derive(Clone, Debug)]
pub struct Compiled {
    num: Vec<Term>,
    den: Vec<(Vec<Term>, i32)>,
}

fn eval_terms(terms: &[Term], point: &[f64]) -> Result<f64, usize> {
    let mut acc = 0.0;
    for t in terms {
        let mut v = t.coeff;
        for &(s, e) in &t.factors {
            let base = point[s];
            if e < 0 && base.abs() < SINGULAR {
                return Err(s);
            }
            v *= base.powi(e);
        }
        acc += v;
    }
    Ok(acc)
}

impl Compiled {
    pub fn new(e: &SymExpr) -> Self {
        Compiled {
            num: compile_poly(e.numerator()),
            den: e
                .denominator_atoms()
                .map(|(a, k)| (compile_poly(a.poly()), k as i32))
                .collect(),
        }
    }

    /// Evaluates at a full slot vector (radical slot already filled).
    pub fn eval(&self, point: &[f64], ring: &Ring) -> Result<f64, NumError> {
        let location = || describe(point, ring);
        let num = eval_terms(&self.num, point).map_err(|_| NumError::Singular {
            location: location(),
        })?;
        let mut den = 1.0;
        for (terms, k) in &self.den {
            let v = eval_terms(terms, point).map_err(|_| NumError::Singular {
                location: location(),
            })?;
            if v.abs() < SINGULAR {
                return Err(NumError::Singular {
                    location: location(),
                });
            }
            den *= v.powi(*k);
        }
        let out = num / den;
        if !out.is_finite() {
            return Err(NumError::NonFinite {
                location: location(),
            });
        }
        Ok(out)
    }
}

fn describe(point: &[f64], ring: &Ring) -> String {
    point
        .iter()
        .enumerate()
        .map(|(s, v)| format!("{}={v:.6}", ring.slot_name(s)))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Slot vector for `(t, x, v)`, filling the radical when present.
fn slots(ring: &Ring, t: f64, x: &[f64], v: &[f64]) -> Vec<f64> {
    let mut p = vec![0.0; ring.nvars()];
    p[ring.slot(VarId::Indep)] = t;
    for a in 0..ring.n() {
        p[ring.slot(VarId::Coord(a + 1))] = x[a];
        if let Some(va) = v.get(a) {
            p[ring.slot(VarId::Velocity(a + 1))] = *va;
        }
    }
    if let Some(rs) = ring.radical_slot() {
        let sq: f64 = ring
            .radical_vars()
            .iter()
            .map(|var| p[ring.slot(*var)].powi(2))
            .sum();
        p[rs] = sq.sqrt();
    }
    p
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub step: f64,
    pub method: &'static str,
    /// Set when the integration stopped early at a singularity.
    pub truncated: Option<String>,
}

/// Right-hand sides compiled once.
#[derive(Clone, Debug)]
pub struct NumSystem {
    ring: Arc<Ring>,
    rhs: Vec<Compiled>,
}

impl NumSystem {
    pub fn new(sys: &OdeSystem) -> Self {
        NumSystem {
            ring: sys.ring().clone(),
            rhs: sys.rhs().iter().map(Compiled::new).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.ring.n()
    }

    pub fn accel(&self, t: f64, x: &[f64], v: &[f64]) -> Result<Vec<f64>, NumError> {
        let p = slots(&self.ring, t, x, v);
        self.rhs.iter().map(|c| c.eval(&p, &self.ring)).collect()
    }

    fn rk4_step(&self, s: &Sample, h: f64) -> Result<Sample, NumError> {
        let n = self.n();
        let add = |a: &[f64], b: &[f64], k: f64| -> Vec<f64> {
            a.iter().zip(b).map(|(x, y)| x + k * y).collect()
        };
        let (t, x, v) = (s.t, &s.x, &s.v);
        let k1x = v.clone();
        let k1v = self.accel(t, x, v)?;
        let (x2, v2) = (add(x, &k1x, h / 2.0), add(v, &k1v, h / 2.0));
        let k2x = v2.clone();
        let k2v = self.accel(t + h / 2.0, &x2, &v2)?;
        let (x3, v3) = (add(x, &k2x, h / 2.0), add(v, &k2v, h / 2.0));
        let k3x = v3.clone();
        let k3v = self.accel(t + h / 2.0, &x3, &v3)?;
        let (x4, v4) = (add(x, &k3x, h), add(v, &k3v, h));
        let k4x = v4.clone();
        let k4v = self.accel(t + h, &x4, &v4)?;
        let comb = |y: &[f64], a: &[f64], b: &[f64], c: &[f64], d: &[f64]| -> Vec<f64> {
            (0..n)
                .map(|i| y[i] + h / 6.0 * (a[i] + 2.0 * b[i] + 2.0 * c[i] + d[i]))
                .collect()
        };
        Ok(Sample {
            t: t + h,
            x: comb(x, &k1x, &k2x, &k3x, &k4x),
            v: comb(v, &k1v, &k2v, &k3v, &k4v),
        })
    }

    /// Classical RK4 with `steps` equal steps over `span`.
    pub fn integrate(
        &self,
        t0: f64,
        x0: &[f64],
        v0: &[f64],
        span: f64,
        steps: usize,
    ) -> Result<Trajectory, NumError> {
        let n = self.n();
        if x0.len() != n || v0.len() != n {
            return Err(NumError::Arity {
                expected: n,
                got: x0.len().max(v0.len()),
            });
        }
        let h = span / steps as f64;
        let mut samples = Vec::with_capacity(steps + 1);
        samples.push(Sample {
            t: t0,
            x: x0.to_vec(),
            v: v0.to_vec(),
        });
        let mut truncated = None;
        for i in 0..steps {
            match self.rk4_step(&samples[i], h) {
                Ok(mut s) => {
                    // keep grid times exact
                    s.t = t0 + (i + 1) as f64 * h;
                    samples.push(s);
                }
                Err(e) => {
                    truncated = Some(e.to_string());
                    break;
                }
            }
        }
        Ok(Trajectory {
            samples,
            step: h,
            method: "rk4",
            truncated,
        })
    }
}

pub fn integrate(
    sys: &OdeSystem,
    t0: f64,
    x0: &[f64],
    v0: &[f64],
    span: f64,
    steps: usize,
) -> Result<Trajectory, NumError> {
    NumSystem::new(sys).integrate(t0, x0, v0, span, steps)
}

/// A generator compiled for flowing points, optionally with its first
/// prolongation for velocities.
#[derive(Clone, Debug)]
pub struct NumField {
    ring: Arc<Ring>,
    tau: Compiled,
    eta: Vec<Compiled>,
    etadot: Vec<Compiled>,
}

impl NumField {
    pub fn new(field: &VectorField) -> Self {
        let pr = field.prolong1();
        NumField {
            ring: field.ring().clone(),
            tau: Compiled::new(field.tau()),
            eta: field.eta().iter().map(Compiled::new).collect(),
            etadot: pr.etadot.iter().map(Compiled::new).collect(),
        }
    }

    // d/d eps of (t, x[, v])
    fn rate(&self, z: &[f64], with_velocity: bool) -> Result<Vec<f64>, NumError> {
        let n = self.ring.n();
        let v: &[f64] = if with_velocity { &z[1 + n..] } else { &[] };
        let p = slots(&self.ring, z[0], &z[1..1 + n], v);
        let mut out = Vec::with_capacity(z.len());
        out.push(self.tau.eval(&p, &self.ring)?);
        for e in &self.eta {
            out.push(e.eval(&p, &self.ring)?);
        }
        if with_velocity {
            for e in &self.etadot {
                out.push(e.eval(&p, &self.ring)?);
            }
        }
        Ok(out)
    }

    fn integrate(
        &self,
        z0: &[f64],
        epsilon: f64,
        substeps: usize,
        vel: bool,
    ) -> Result<Vec<f64>, NumError> {
        let h = epsilon / substeps as f64;
        let mut z = z0.to_vec();
        let add = |a: &[f64], b: &[f64], k: f64| -> Vec<f64> {
            a.iter().zip(b).map(|(x, y)| x + k * y).collect()
        };
        for _ in 0..substeps {
            let k1 = self.rate(&z, vel)?;
            let k2 = self.rate(&add(&z, &k1, h / 2.0), vel)?;
            let k3 = self.rate(&add(&z, &k2, h / 2.0), vel)?;
            let k4 = self.rate(&add(&z, &k3, h), vel)?;
            for i in 0..z.len() {
                z[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        Ok(z)
    }

    /// `exp(epsilon X)` applied to `(t, x)`.
    pub fn flow(
        &self,
        t: f64,
        x: &[f64],
        epsilon: f64,
        substeps: usize,
    ) -> Result<(f64, Vec<f64>), NumError> {
        let mut z = vec![t];
        z.extend_from_slice(x);
        let z = self.integrate(&z, epsilon, substeps, false)?;
        Ok((z[0], z[1..].to_vec()))
    }

    /// Prolonged flow of `(t, x, v)`.
    pub fn flow_prolonged(
        &self,
        s: &Sample,
        epsilon: f64,
        substeps: usize,
    ) -> Result<Sample, NumError> {
        let n = self.ring.n();
        let mut z = vec![s.t];
        z.extend_from_slice(&s.x);
        z.extend_from_slice(&s.v);
        let z = self.integrate(&z, epsilon, substeps, true)?;
        Ok(Sample {
            t: z[0],
            x: z[1..1 + n].to_vec(),
            v: z[1 + n..].to_vec(),
        })
    }
}

/// Flows `(t, x)` along `X` to parameter `epsilon` (RK4 in `epsilon`).
pub fn flow(
    field: &VectorField,
    t: f64,
    x: &[f64],
    epsilon: f64,
    substeps: usize,
) -> Result<(f64, Vec<f64>), NumError> {
    NumField::new(field).flow(t, x, epsilon, substeps)
}

/// Cubic Hermite interpolation of the positions at time `t`.
pub fn hermite(traj: &Trajectory, t: f64) -> Option<Vec<f64>> {
    let s = &traj.samples;
    let (first, last) = (s.first()?.t, s.last()?.t);
    let tol = 1e-12 * (1.0 + t.abs());
    if t < first.min(last) - tol || t > first.max(last) + tol {
        return None;
    }
    let h = traj.step;
    let i = (((t - first) / h).floor().max(0.0) as usize).min(s.len().saturating_sub(2));
    if s.len() == 1 {
        return Some(s[0].x.clone());
    }
    let (a, b) = (&s[i], &s[i + 1]);
    let dt = b.t - a.t;
    let u = (t - a.t) / dt;
    let (h00, h10, h01, h11) = (
        2.0 * u.powi(3) - 3.0 * u.powi(2) + 1.0,
        u.powi(3) - 2.0 * u.powi(2) + u,
        -2.0 * u.powi(3) + 3.0 * u.powi(2),
        u.powi(3) - u.powi(2),
    );
    Some(
        (0..a.x.len())
            .map(|k| h00 * a.x[k] + h10 * dt * a.v[k] + h01 * b.x[k] + h11 * dt * b.v[k])
            .collect(),
    )
}

/// Parameters of a solution-mapping check.
#[derive(Clone, Debug)]
pub struct MappingSetup {
    pub t0: f64,
    pub x0: Vec<f64>,
    pub v0: Vec<f64>,
    pub span: f64,
    pub step: f64,
    pub epsilon: f64,
    pub tol: f64,
    pub flow_substeps: usize,
}

impl MappingSetup {
    pub fn new(t0: f64, x0: &[f64], v0: &[f64], span: f64, epsilon: f64) -> Self {
        MappingSetup {
            t0,
            x0: x0.to_vec(),
            v0: v0.to_vec(),
            span,
            step: 1e-3,
            epsilon,
            tol: 1e-6,
            flow_substeps: 200,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MappingReport {
    pub pass: bool,
    pub max_deviation: f64,
    pub samples: usize,
    pub flowed_interval: (f64, f64),
    pub epsilon: f64,
    pub tol: f64,
}

/// Maps a numerical solution through `exp(epsilon X)` and compares it with
/// a fresh solution started from the mapped initial state.
pub fn check_solution_mapping(
    sys: &OdeSystem,
    field: &VectorField,
    setup: &MappingSetup,
) -> Result<MappingReport, NumError> {
    let ns = NumSystem::new(sys);
    let nf = NumField::new(field);
    let steps = (setup.span / setup.step).round().max(1.0) as usize;
    let traj = ns.integrate(setup.t0, &setup.x0, &setup.v0, setup.span, steps)?;
    if let Some(reason) = &traj.truncated {
        return Err(NumError::Truncated {
            at: traj.samples.last().unwrap().t,
            reason: reason.clone(),
        });
    }
    let mapped: Vec<(f64, Vec<f64>)> = traj
        .samples
        .iter()
        .map(|s| nf.flow(s.t, &s.x, setup.epsilon, setup.flow_substeps))
        .collect::<Result<_, _>>()?;
    for (i, w) in mapped.windows(2).enumerate() {
        if w[1].0.partial_cmp(&w[0].0) != Some(std::cmp::Ordering::Greater) {
            return Err(NumError::NonMonotone {
                index: i + 1,
                before: w[0].0,
                after: w[1].0,
            });
        }
    }
    let start = nf.flow_prolonged(&traj.samples[0], setup.epsilon, setup.flow_substeps)?;
    let (t_start, t_end) = (mapped[0].0, mapped.last().unwrap().0);
    let span = t_end - t_start;
    let fresh_steps = (span / setup.step).ceil().max(1.0) as usize;
    let fresh = ns.integrate(start.t, &start.x, &start.v, span, fresh_steps)?;
    if let Some(reason) = &fresh.truncated {
        return Err(NumError::Truncated {
            at: fresh.samples.last().unwrap().t,
            reason: reason.clone(),
        });
    }
    let mut max_deviation: f64 = 0.0;
    for (t, x) in &mapped {
        let y = hermite(&fresh, *t).expect("mapped times lie in the fresh interval");
        for (a, b) in x.iter().zip(&y) {
            max_deviation = max_deviation.max((a - b).abs());
        }
    }
    Ok(MappingReport {
        pass: max_deviation < setup.tol,
        max_deviation,
        samples: mapped.len(),
        flowed_interval: (t_start, t_end),
        epsilon: setup.epsilon,
        tol: setup.tol,
    })
}
