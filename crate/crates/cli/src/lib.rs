//! Program language and command runner for odeprog.

pub mod dsl;
pub mod run;
pub mod scenarios;
