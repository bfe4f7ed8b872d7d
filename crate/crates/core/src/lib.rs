//! Numerical laboratory for the flattened free-surface Navier-Stokes system
//! on a horizontal torus with a truncated depth.
//!
//! The crate is organised bottom-up:
//! [`spectral`] (grids, transforms, extensions, norms),
//! [`geometry`] (the flattening map and its calculus),
//! [`nonlinear`] (right-hand sides of the flattened system),
//! [`stokes`] (per-mode linear solves),
//! [`analysis`] (Duhamel and decay experiments),
//! [`solver`] (compatibility checks and Picard time marching).

pub mod analysis;
pub mod error;
pub mod geometry;
pub mod nonlinear;
pub mod solver;
pub mod spectral;
pub mod stokes;

pub use error::{Error, Result};
pub use rustfft::num_complex::Complex64;
