//! Pseudo-spectral simulation and verification of a stochastic
//! chemotaxis-fluid system with fractional fluid dissipation on a periodic
//! square.

pub mod config;
pub mod coupling;
pub mod diagnostics;
pub mod error;
pub mod integrator;
pub mod lp_besov;
pub mod model;
pub mod noise;
pub mod presets;
pub mod smooth;
pub mod snapshot;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
