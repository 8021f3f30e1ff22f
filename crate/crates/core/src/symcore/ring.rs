//! Variable universes: which symbols an expression may mention and how the
//! radical `r` is tied to them.

use std::fmt;
use std::sync::Arc;

use super::monomial::Monomial;
use super::poly::Poly;
use super::rational::int;

/// A symbol of a variable universe. Indices of `Coord` and `Velocity` are 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarId {
    Indep,
    Coord(usize),
    Velocity(usize),
    Radical,
}

/// Layout of a variable universe.
///
/// Slot 0 is the independent variable, slots `1..=n` the dependent
/// variables, `n+1..=2n` their first derivatives and, when enabled, slot
/// `2n+1` the radical `r` with `r^2 = sum of squares of radical_vars`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ring {
    n: usize,
    radical_vars: Option<Vec<VarId>>,
    names: Vec<String>,
}

impl Ring {
    /// Equations of motion in `t`, `x1..xn`, `v1..vn` and optionally `r`.
    pub fn ode(n: usize, radical: bool) -> Arc<Ring> {
        let mut names = vec!["t".to_string()];
        names.extend((1..=n).map(|a| format!("x{a}")));
        names.extend((1..=n).map(|a| format!("v{a}")));
        let radical_vars = radical.then(|| (1..=n).map(VarId::Coord).collect());
        if radical {
            names.push("r".to_string());
        }
        Arc::new(Ring {
            n,
            radical_vars,
            names,
        })
    }

    /// Single linear-type equation `u'' = w(x, u, u')` with independent
    /// variable `x`; the derivative `u'` is spelled `du`.
    pub fn quantum1d() -> Arc<Ring> {
        Arc::new(Ring {
            n: 1,
            radical_vars: None,
            names: vec!["x".into(), "u".into(), "du".into()],
        })
    }

    /// Arbitrary layout. `names` must list every slot in order.
    pub fn custom(n: usize, radical_vars: Option<Vec<VarId>>, names: Vec<String>) -> Arc<Ring> {
        let ring = Ring {
            n,
            radical_vars,
            names,
        };
        assert_eq!(ring.names.len(), ring.nvars(), "one name per slot");
        if let Some(vars) = &ring.radical_vars {
            assert!(vars
                .iter()
                .all(|v| matches!(v, VarId::Indep | VarId::Coord(_))));
        }
        Arc::new(ring)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn has_radical(&self) -> bool {
        self.radical_vars.is_some()
    }

    pub fn radical_vars(&self) -> &[VarId] {
        self.radical_vars.as_deref().unwrap_or(&[])
    }

    pub fn nvars(&self) -> usize {
        2 * self.n + 1 + usize::from(self.has_radical())
    }

    pub fn slot(&self, var: VarId) -> usize {
        match var {
            VarId::Indep => 0,
            VarId::Coord(a) => {
                assert!(
                    (1..=self.n).contains(&a),
                    "coordinate index {a} out of range"
                );
                a
            }
            VarId::Velocity(a) => {
                assert!((1..=self.n).contains(&a), "velocity index {a} out of range");
                self.n + a
            }
            VarId::Radical => {
                assert!(self.has_radical(), "ring has no radical");
                2 * self.n + 1
            }
        }
    }

    pub fn radical_slot(&self) -> Option<usize> {
        self.has_radical().then_some(2 * self.n + 1)
    }

    pub fn var(&self, slot: usize) -> VarId {
        if slot == 0 {
            VarId::Indep
        } else if slot <= self.n {
            VarId::Coord(slot)
        } else if slot <= 2 * self.n {
            VarId::Velocity(slot - self.n)
        } else {
            assert!(self.has_radical() && slot == 2 * self.n + 1);
            VarId::Radical
        }
    }

    pub fn name(&self, var: VarId) -> &str {
        &self.names[self.slot(var)]
    }

    pub fn slot_name(&self, slot: usize) -> &str {
        &self.names[slot]
    }

    pub fn lookup(&self, name: &str) -> Option<VarId> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|slot| self.var(slot))
    }

    pub fn coords(&self) -> impl Iterator<Item = VarId> {
        (1..=self.n).map(VarId::Coord)
    }

    pub fn velocities(&self) -> impl Iterator<Item = VarId> {
        (1..=self.n).map(VarId::Velocity)
    }

    /// Whether `slot` enters the radical relation.
    pub fn in_radical(&self, slot: usize) -> bool {
        self.radical_vars().iter().any(|v| self.slot(*v) == slot)
    }

    /// `sum of squares of the radical variables`, i.e. the value of `r^2`.
    pub fn radical_square(&self) -> Option<Poly> {
        let vars = self.radical_vars.as_ref()?;
        let mut s = Poly::zero(self.nvars());
        for v in vars {
            s.add_term(Monomial::var(self.nvars(), self.slot(*v), 2), int(1));
        }
        Some(s)
    }
}

impl fmt::Display for Ring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self.names.join(", "))?;
        if let Some(vars) = &self.radical_vars {
            let parts: Vec<String> = vars
                .iter()
                .map(|v| format!("{}^2", self.name(*v)))
                .collect();
            write!(f, " with r^2 = {}", parts.join(" + "))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ode_layout() {
        let ring = Ring::ode(3, true);
        assert_eq!(ring.nvars(), 8);
        assert_eq!(ring.slot(VarId::Velocity(2)), 5);
        assert_eq!(ring.var(7), VarId::Radical);
        assert_eq!(ring.lookup("v3"), Some(VarId::Velocity(3)));
        assert_eq!(ring.lookup("w"), None);
        assert_eq!(ring.radical_square().unwrap().len(), 3);
    }

    #[test]
    fn quantum_layout_has_no_radical() {
        let ring = Ring::quantum1d();
        assert_eq!(ring.nvars(), 3);
        assert_eq!(ring.lookup("u"), Some(VarId::Coord(1)));
        assert!(ring.radical_square().is_none());
    }
}
