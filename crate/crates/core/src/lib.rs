//! Hybrid quantum-classical dynamics in the operator formulation of
//! classical mechanics.

pub mod dynamics;
pub mod error;
pub mod hybrid;
pub mod numeric;
pub mod phase_space;
pub mod quantum;
pub mod scenario;

pub use error::{Error, Result};
