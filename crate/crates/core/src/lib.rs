//! Lie point symmetries of systems of second-order ODEs with exact
//! arithmetic, Lie-algebra identification, order reduction and numerical
//! verification.

pub mod determine;
pub mod frontend;
pub mod liealgebra;
pub mod linalg;
pub mod reduction;
pub mod symcore;
pub mod vectorfield;
pub mod verifynum;
