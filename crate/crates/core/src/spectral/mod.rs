//! Periodic lattice geometry and truncated Fourier representation of
//! divergence-free vector fields.

pub(crate) mod fft;
mod field;
mod lattice;
mod random;

pub use field::{
    inner_product, leray_project, sobolev_norm, to_physical, to_spectral, CompensatedSum,
    PhysicalField, SpectralField, Vec3c,
};
pub(crate) use field::project_mode as field_project;
pub use lattice::{Lattice, LatticeSpec, TWO_THIRDS};
pub use random::{
    max_retained_shell, random_divfree_field, seeded_rng, Normalization, ShellShape,
    SpectrumProfile,
};

/// Sobolev index `s` of the norm `||u||_s`.
pub type SobolevIndex = f64;
