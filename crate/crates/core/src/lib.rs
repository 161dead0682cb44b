//! Economic evaluation of construction projects over an event algebra.
//!
//! Composite events expand into basic events; user-defined evaluation
//! methods compile to suffix expressions that a stack machine executes.
//! Built-in indicators cover net present value, internal rate of return,
//! static payback and investment profit ratio.

pub mod api;
pub mod envelope;
pub mod events;
pub mod expr;
pub mod finance;
pub mod format;
pub mod project;
pub mod registry;
pub mod sensitivity;
pub mod status;

pub use status::{CalcError, CalcResult, Status};
