//! Pseudospectral solver for the rotating Navier-Stokes-alpha equations on a
//! periodic box, with diagnostics for difference-trajectory contraction,
//! squeezing, Lipschitz and Frechet-differentiability checks of the
//! semiflow, and a calculator for the explicit attractor constants.

pub mod bounds;
pub mod diagnostics;
pub mod error;
pub mod integrator;
pub mod operators;
pub mod spectral;

pub use error::{Error, Result};
pub use spectral::{Lattice, LatticeSpec, PhysicalField, SpectralField, SpectrumProfile};
pub use integrator::{SimParams, SimState, StepperConfig};
