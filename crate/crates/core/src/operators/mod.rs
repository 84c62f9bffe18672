//! Spectral multipliers (Stokes, Helmholtz inverse, Coriolis), the
//! dealiased pseudospectral bilinear form `B_alpha` and its direct
//! convolution oracle, Stokes eigenvalue shells, spectral projections and
//! empirical bilinear constants.

mod bilinear;
mod constants;
mod eigen;
mod oracle;

use num_complex::Complex64;

use crate::spectral::{SpectralField, Vec3c};

pub use bilinear::{bilinear, bilinear_pair_sum, Prepared};
pub use constants::{
    bilinear_ratios, estimate_bilinear_constants, BilinearConstants, ConstantsConfig,
    DBoundForm, Ratios,
};
pub use eigen::{
    spectral_projection, stokes_eigenvalues, Projection, Shell, StokesSpectrum,
};
pub(crate) use eigen::projection_with;
pub use oracle::{bilinear_oracle, bilinear_oracle_with_guard, ORACLE_MAX_POINTS};

/// Multiply by `|n|^2` (the Stokes operator `A = -P_L Delta`).
pub fn stokes_apply(u: &SpectralField) -> SpectralField {
    let mut out = u.clone();
    out.apply_table(u.lattice().ksq_table());
    out
}

/// Helmholtz inverse `R_alpha = (I - alpha^2 Delta)^{-1}`, multiplier
/// `1 / (1 + alpha^2 |n|^2)`.
pub fn helmholtz_inverse(u: &SpectralField, alpha: f64) -> SpectralField {
    if alpha == 0.0 {
        return u.clone();
    }
    let l = u.lattice().clone();
    let a2 = alpha * alpha;
    let mut out = u.clone();
    out.apply_diagonal(|idx| 1.0 / (1.0 + a2 * l.ksq(idx)));
    out
}

/// `I - alpha^2 Delta`, multiplier `1 + alpha^2 |n|^2`.
pub fn helmholtz_forward(u: &SpectralField, alpha: f64) -> SpectralField {
    let l = u.lattice().clone();
    let a2 = alpha * alpha;
    let mut out = u.clone();
    out.apply_diagonal(|idx| 1.0 + a2 * l.ksq(idx));
    out
}

/// `J x = e_3 x x`.
#[inline]
fn rotate(v: Vec3c) -> Vec3c {
    [-v[1], v[0], Complex64::new(0.0, 0.0)]
}

#[inline]
fn project(k: [f64; 3], ksq: f64, v: Vec3c) -> Vec3c {
    crate::spectral::field_project(k, ksq, v)
}

/// Coriolis term `f P_L J P_L R_alpha u`.
pub fn coriolis_apply(u: &SpectralField, f: f64, alpha: f64) -> SpectralField {
    coriolis_apply_with(u, f, alpha, true)
}

/// Coriolis term with the Helmholtz filter optionally dropped
/// (`f P_L J P_L u`).
pub fn coriolis_apply_with(
    u: &SpectralField,
    f: f64,
    alpha: f64,
    include_filter: bool,
) -> SpectralField {
    let l = u.lattice().clone();
    let a2 = if include_filter { alpha * alpha } else { 0.0 };
    u.map_modes(|idx, v| {
        let ksq = l.ksq(idx);
        if ksq == 0.0 || f == 0.0 {
            return [Complex64::new(0.0, 0.0); 3];
        }
        let k = l.kvec(idx);
        let scale = f / (1.0 + a2 * ksq);
        project(k, ksq, rotate(project(k, ksq, v))).map(|z| z * scale)
    })
}
