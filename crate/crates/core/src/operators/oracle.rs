//! Direct truncated-convolution evaluation of `B_alpha`, used as ground
//! truth for the pseudospectral path. It works on the full Hermitian map in
//! the original (advective plus transpose-gradient) form:
//!
//! `(B(u, v))_n = P_n sum_{k+m=n} i [((R u)_k . m) v_m + k (v_m . (R u)_k)]`
//!
//! with `k`, `m`, `n` all restricted to the dealias mask.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{field_project, SpectralField, Vec3c};

/// Default lattice size guard for the O(N^6) oracle: `12^3` grid points.
pub const ORACLE_MAX_POINTS: usize = 12 * 12 * 12;

pub fn bilinear_oracle(u: &SpectralField, v: &SpectralField, alpha: f64) -> Result<SpectralField> {
    bilinear_oracle_with_guard(u, v, alpha, ORACLE_MAX_POINTS)
}

pub fn bilinear_oracle_with_guard(
    u: &SpectralField,
    v: &SpectralField,
    alpha: f64,
    max_points: usize,
) -> Result<SpectralField> {
    let l = u.lattice().clone();
    if !l.same_geometry(v.lattice()) {
        return Err(Error::LatticeMismatch);
    }
    if l.grid_len() > max_points {
        return Err(Error::OracleTooLarge(l.n(), max_points));
    }
    let km = l.kmax().map(|k| k as i64);
    let a = l.a();
    let dims = km.map(|k| (2 * k + 1) as usize);
    let flat = |n: [i64; 3]| -> usize {
        (((n[0] + km[0]) as usize * dims[1]) + (n[1] + km[1]) as usize) * dims[2]
            + (n[2] + km[2]) as usize
    };
    let zero = Complex64::new(0.0, 0.0);
    let total = dims.iter().product::<usize>();
    let mut modes = Vec::with_capacity(total);
    let mut ru: Vec<Vec3c> = vec![[zero; 3]; total];
    let mut vv: Vec<Vec3c> = vec![[zero; 3]; total];
    for n1 in -km[0]..=km[0] {
        for n2 in -km[1]..=km[1] {
            for n3 in -km[2]..=km[2] {
                let n = [n1, n2, n3];
                let k = [n1 as f64 / a[0], n2 as f64 / a[1], n3 as f64 / a[2]];
                let ksq = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
                let filt = 1.0 / (1.0 + alpha * alpha * ksq);
                let f = flat(n);
                ru[f] = u.mode(n).expect("retained modes are on the lattice").map(|z| z * filt);
                vv[f] = v.mode(n).expect("retained modes are on the lattice");
                modes.push((n, k));
            }
        }
    }
    let in_mask = |n: [i64; 3]| (0..3).all(|j| n[j].abs() <= km[j]);
    let i = Complex64::new(0.0, 1.0);
    let mut out = SpectralField::zeros(&l);
    for &(n, kn) in &modes {
        if n[2] < 0 {
            continue;
        }
        let ksq_n = kn[0] * kn[0] + kn[1] * kn[1] + kn[2] * kn[2];
        if ksq_n == 0.0 {
            continue;
        }
        let mut acc = [zero; 3];
        for &(k, kk) in &modes {
            let m = [n[0] - k[0], n[1] - k[1], n[2] - k[2]];
            if !in_mask(m) {
                continue;
            }
            let km_vec = [kn[0] - kk[0], kn[1] - kk[1], kn[2] - kk[2]];
            let r = ru[flat(k)];
            let w = vv[flat(m)];
            let adv = r[0] * km_vec[0] + r[1] * km_vec[1] + r[2] * km_vec[2];
            let dot = w[0] * r[0] + w[1] * r[1] + w[2] * r[2];
            for j in 0..3 {
                acc[j] += i * (adv * w[j] + dot * kk[j]);
            }
        }
        let (idx, conj) = l.index(n).expect("retained modes are on the lattice");
        debug_assert!(!conj);
        out.set_at(idx, field_project(kn, ksq_n, acc));
    }
    out.enforce_symmetry();
    Ok(out)
}
