//! Expressions over generable primitives and polynomial initial value problems.

mod closure;
mod expr;
pub mod lower;
mod pivp;
pub mod smooth;

pub use closure::OdeClosure;
pub use expr::{eval_prim, Expr, ExprError, Prim};
pub use lower::{gradient_realization, lower_system, lower_to_pivp, LowerError, LowerOptions, LoweringCert, Realization};
pub use pivp::{as_poly, ExprSystem, Pivp, SystemError};
