//! Exact symbolic arithmetic over the rationals: Laurent polynomials in the
//! independent variable, coordinates and velocities, fractions with
//! factored denominators, and a radical `r` reduced by `r^2 = sum x_a^2`.

mod expr;
mod monomial;
mod poly;
pub mod rational;
mod raw;
mod ring;

pub use expr::{lcm_denominators, Atom, SymError, SymExpr};
pub use monomial::Monomial;
pub use poly::Poly;
pub use rational::Rational;
pub use raw::{normalize, RawExpr};
pub use ring::{Ring, VarId};
