//! Polynomial initial value problems, generable circuits and the
//! computability pipelines built on them.

pub mod poly;
pub mod circuit;
pub mod gadgets;
pub mod sim;
pub mod par;
pub mod bounds;
pub mod pipelines;
