//! Compactly supported, uniformly rotating solutions of the 2D Euler
//! equations: construction by gluing radial pieces to rigid rotation,
//! static residual checks, pseudo-spectral evolution and rigidity
//! diagnostics.

pub mod error;
pub mod flow_composer;
pub mod pipeline;
pub mod radial_profile;
pub mod rigidity;
pub mod spectral_solver;

pub use error::{Error, Result};
