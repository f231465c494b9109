//! Linear solvers used by the time steppers.

pub mod minres;
pub mod separable;

pub use minres::{minres, MinresOutcome};
pub use separable::{Closure1D, Operator1D, SeparableSolver};
