//! Input syntax, built-in cases and reports.

pub mod parser;
pub mod registry;
pub mod report;
pub mod runner;

pub use parser::{parse_expr, parse_system, ParseError, ParseErrorKind};
