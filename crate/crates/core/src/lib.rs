//! Phase-plane analysis of umbilic hypersurfaces with constant `sigma_{i,n}`
//! curvature in the Heisenberg group `H_n`.

pub mod conserved;
pub mod error;
pub mod flow;
pub mod format;
pub mod geometry;
pub mod model;
pub mod portrait;
pub mod quadrature;
pub mod selftest;

pub use error::{Error, Result};
pub use model::{PhasePoint, SigmaParams};
