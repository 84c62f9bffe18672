//! Pseudospectral evaluation of
//! `B_alpha(u, v) = P_L[(R_alpha u . grad) v + v_j grad (R_alpha u)_j]`.
//!
//! The bracket equals `curl(v) x R_alpha u + grad(R_alpha u . v)`, and the
//! gradient is annihilated by `P_L`, so the form is evaluated as
//! `P_L[curl(v) x R_alpha u]`. The identity holds triad by triad, so with
//! the 2/3 mask on inputs and output the result is the exact truncated
//! convolution. Inputs are masked, two physical fields per argument are
//! formed with pruned transforms, the cross product is taken pointwise and
//! transformed back onto the retained modes, then projected.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{field_project, Lattice, PhysicalField, SpectralField};

/// Physical-space ingredients of one argument of `B_alpha`: `R_alpha u`
/// and `curl u`, both computed from the dealiased coefficients.
pub struct Prepared {
    lattice: Arc<Lattice>,
    filtered: PhysicalField,
    curl: PhysicalField,
}

fn filtered_spectral(u: &SpectralField, alpha: f64) -> SpectralField {
    let l = u.lattice().clone();
    let a2 = alpha * alpha;
    let mut out = SpectralField::zeros(&l);
    for &idx in l.retained_indices() {
        let w = 1.0 / (1.0 + a2 * l.ksq(idx));
        out.set_at(idx, u.at(idx).map(|z| z * w));
    }
    out
}

fn curl_spectral(u: &SpectralField) -> SpectralField {
    let l = u.lattice().clone();
    let mut out = SpectralField::zeros(&l);
    let i = Complex64::new(0.0, 1.0);
    for &idx in l.retained_indices() {
        let k = l.kvec(idx);
        let v = u.at(idx);
        out.set_at(
            idx,
            [
                i * (v[2] * k[1] - v[1] * k[2]),
                i * (v[0] * k[2] - v[2] * k[0]),
                i * (v[1] * k[0] - v[0] * k[1]),
            ],
        );
    }
    out
}

impl Prepared {
    pub fn new(u: &SpectralField, alpha: f64) -> Self {
        let l = u.lattice().clone();
        let support = l.kmax();
        Self {
            filtered: filtered_spectral(u, alpha).to_physical_with_support(support),
            curl: curl_spectral(u).to_physical_with_support(support),
            lattice: l,
        }
    }

    /// `B_alpha(u, u)`.
    pub fn bilinear_self(&self) -> SpectralField {
        combine(&self.lattice, &[(&self.curl, &self.filtered)])
    }

    /// `B_alpha(self, other)`.
    pub fn bilinear_with(&self, other: &Prepared) -> SpectralField {
        combine(&self.lattice, &[(&other.curl, &self.filtered)])
    }
}

/// `B_alpha(a, b) + B_alpha(b, a)`, sharing the transforms of both fields.
pub fn bilinear_pair_sum(a: &Prepared, b: &Prepared) -> SpectralField {
    combine(&a.lattice, &[(&b.curl, &a.filtered), (&a.curl, &b.filtered)])
}

/// `P_L` of the dealiased transform of `sum curl_i x filtered_i`.
fn combine(l: &Arc<Lattice>, terms: &[(&PhysicalField, &PhysicalField)]) -> SpectralField {
    let len = l.grid_len();
    let mut prod = PhysicalField {
        n: l.n(),
        comps: [vec![0.0; len], vec![0.0; len], vec![0.0; len]],
    };
    for (w, r) in terms {
        let [px, py, pz] = &mut prod.comps;
        let [wx, wy, wz] = &w.comps;
        let [rx, ry, rz] = &r.comps;
        for p in 0..len {
            px[p] += wy[p] * rz[p] - wz[p] * ry[p];
            py[p] += wz[p] * rx[p] - wx[p] * rz[p];
            pz[p] += wx[p] * ry[p] - wy[p] * rx[p];
        }
    }
    let mut out = SpectralField::from_physical_with_support(&prod, l, l.kmax());
    for &idx in l.retained_indices() {
        out.set_at(idx, field_project(l.kvec(idx), l.ksq(idx), out.at(idx)));
    }
    out.enforce_symmetry();
    out
}

/// Dealiased pseudospectral `B_alpha(u, v)`.
pub fn bilinear(u: &SpectralField, v: &SpectralField, alpha: f64) -> Result<SpectralField> {
    let l = u.lattice().clone();
    if !l.same_geometry(v.lattice()) {
        return Err(Error::LatticeMismatch);
    }
    let support = l.kmax();
    let filtered = filtered_spectral(u, alpha).to_physical_with_support(support);
    let curl = curl_spectral(v).to_physical_with_support(support);
    Ok(combine(&l, &[(&curl, &filtered)]))
}
