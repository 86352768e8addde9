//! ODE programming gadgets: reach, periodic low-integral-low,
//! sample-and-hold and slow-stop.
//!
//! Every gadget has a closed-form evaluator and an expression builder
//! producing the same formula for lowering.

mod plil;
mod reach;
mod slowstop;

pub use plil::{Interval, PlilSpec, PlilValue, SampleSpec};
pub use reach::{reach, reach_bound, reach_expr, reach_rational, ReachBound, ReachBoundKind};
pub use slowstop::{build_slowstop, SlowStop, SlowStopSystem};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GadgetError {
    #[error("invalid gadget parameters: {0}")]
    Spec(String),
    #[error("no reach bound applies: {0}")]
    Inapplicable(String),
    #[error(transparent)]
    Lower(#[from] crate::circuit::LowerError),
    #[error(transparent)]
    System(#[from] crate::circuit::SystemError),
}
