//! Linearized Green's functions, heat kernels and a Picard solver for the
//! one-dimensional reacting compressible Navier-Stokes system in Lagrangian
//! coordinates.

pub mod diagnostics;
pub mod error;
pub mod heatkernel;
pub mod params;
pub mod solver;
pub mod spectral;
mod tridiag;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
