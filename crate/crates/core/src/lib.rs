//! Quantum Heisenberg manifold numerics.
//!
//! Truncated elements of the smooth algebra, its deformed product, the
//! Heisenberg group action, the sup-sum norm and derivations, the fiberwise
//! representation, and lower bounds for the state metric induced by the Lip
//! seminorm.

pub mod algebra;
pub mod config;
pub mod element;
pub mod metric;
pub mod error;
pub mod numeric;
pub mod params;
pub mod report;
pub mod representation;
pub mod suites;
pub mod testkit;

pub use element::{fold_evaluate, Element, Flavor};
pub use error::{QhmError, Result};
pub use params::{unit_phase, ModelParams, Truncation};
