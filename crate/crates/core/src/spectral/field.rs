use std::sync::Arc;

use num_complex::Complex64;

use super::lattice::Lattice;
use crate::error::{Error, Result};

pub type Vec3c = [Complex64; 3];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Neumaier compensated summation.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Divergence-free, zero-mean, real-valued vector field in truncated Fourier
/// coefficients on a periodic [`Lattice`].
///
/// Only the half spectrum is stored (see [`Lattice`] for the layout); the
/// `n_3 = 0` plane holds both `n` and `-n`, which are kept exact complex
/// conjugates of each other by [`SpectralField::enforce_symmetry`].
#[derive(Clone)]
pub struct SpectralField {
    lattice: Arc<Lattice>,
    comps: [Vec<Complex64>; 3],
}

impl std::fmt::Debug for SpectralField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralField")
            .field("lattice", &self.lattice)
            .field("norm0", &self.sobolev_norm(0.0))
            .finish()
    }
}

impl PartialEq for SpectralField {
    /// Bitwise comparison of coefficients on equal geometries.
    fn eq(&self, other: &Self) -> bool {
        self.lattice.same_geometry(&other.lattice) && self.comps == other.comps
    }
}

/// Real physical-space samples of a 3-component field.
#[derive(Clone, Debug, PartialEq)]
pub struct PhysicalField {
    pub n: [usize; 3],
    pub comps: [Vec<f64>; 3],
}

impl PhysicalField {
    /// Volume-normalized L2 norm, `sqrt(mean |u(x)|^2)`.
    pub fn l2_norm(&self) -> f64 {
        let len = self.comps[0].len() as f64;
        let mut acc = CompensatedSum::default();
        for c in &self.comps {
            for &x in c {
                acc.add(x * x);
            }
        }
        (acc.value() / len).sqrt()
    }
}

impl SpectralField {
    pub fn zeros(lattice: &Arc<Lattice>) -> Self {
        let len = lattice.storage_len();
        Self {
            lattice: lattice.clone(),
            comps: [vec![ZERO; len], vec![ZERO; len], vec![ZERO; len]],
        }
    }

    /// Field with the given modes set (and their conjugate partners), then
    /// symmetrized. Not projected.
    pub fn from_modes(lattice: &Arc<Lattice>, modes: &[([i64; 3], Vec3c)]) -> Result<Self> {
        let mut f = Self::zeros(lattice);
        for &(n, v) in modes {
            f.set_mode(n, v)?;
        }
        Ok(f)
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        &self.lattice
    }

    pub fn comp(&self, j: usize) -> &[Complex64] {
        &self.comps[j]
    }

    pub fn comp_mut(&mut self, j: usize) -> &mut [Complex64] {
        &mut self.comps[j]
    }

    #[inline]
    pub fn at(&self, idx: usize) -> Vec3c {
        [self.comps[0][idx], self.comps[1][idx], self.comps[2][idx]]
    }

    #[inline]
    pub fn set_at(&mut self, idx: usize, v: Vec3c) {
        for j in 0..3 {
            self.comps[j][idx] = v[j];
        }
    }

    /// Coefficient of wave vector `n` in the full Hermitian map.
    pub fn mode(&self, n: [i64; 3]) -> Option<Vec3c> {
        let (idx, conj) = self.lattice.index(n)?;
        let v = self.at(idx);
        Some(if conj { v.map(|z| z.conj()) } else { v })
    }

    /// Sets `u_n = v` and `u_{-n} = conj(v)`.
    pub fn set_mode(&mut self, n: [i64; 3], v: Vec3c) -> Result<()> {
        let (idx, conj) = self.lattice.index(n).ok_or_else(|| {
            Error::InvalidArgument(format!("mode {n:?} is outside the lattice"))
        })?;
        let v = if conj { v.map(|z| z.conj()) } else { v };
        self.set_at(idx, v);
        let p = self.lattice.partner(idx);
        if p != idx {
            self.set_at(p, v.map(|z| z.conj()));
        }
        Ok(())
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.lattice, &other.lattice) || self.lattice.same_geometry(&other.lattice)
        {
            Ok(())
        } else {
            Err(Error::LatticeMismatch)
        }
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: f64, other: &Self) {
        debug_assert!(self.lattice.same_geometry(&other.lattice));
        for j in 0..3 {
            for (x, y) in self.comps[j].iter_mut().zip(&other.comps[j]) {
                *x += y * a;
            }
        }
    }

    pub fn scale(&mut self, a: f64) {
        for c in &mut self.comps {
            for x in c.iter_mut() {
                *x *= a;
            }
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut out = self.clone();
        out.scale(a);
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    /// Multiplies every slot by `m(idx)`.
    pub fn apply_diagonal(&mut self, m: impl Fn(usize) -> f64) {
        let len = self.lattice.storage_len();
        for idx in 0..len {
            let w = m(idx);
            for j in 0..3 {
                self.comps[j][idx] *= w;
            }
        }
    }

    /// Multiplies slot `idx` by `table[idx]`.
    pub fn apply_table(&mut self, table: &[f64]) {
        for c in &mut self.comps {
            for (x, &w) in c.iter_mut().zip(table) {
                *x *= w;
            }
        }
    }

    /// Applies a per-mode map to every storage slot.
    pub fn map_modes(&self, f: impl Fn(usize, Vec3c) -> Vec3c) -> Self {
        let mut out = Self::zeros(&self.lattice);
        for idx in 0..self.lattice.storage_len() {
            out.set_at(idx, f(idx, self.at(idx)));
        }
        out
    }

    /// Leray projection `P_n = I - n n^T / |n|^2`, with `P_0 = 0`.
    pub fn leray_project(&self) -> Self {
        let mut out = self.clone();
        out.leray_project_in_place();
        out
    }

    pub fn leray_project_in_place(&mut self) {
        for idx in 0..self.lattice.storage_len() {
            let v = self.at(idx);
            let w = project_mode(self.lattice.kvec(idx), self.lattice.ksq(idx), v);
            self.set_at(idx, w);
        }
    }

    /// Zeroes the mean and Nyquist slots and makes the `n_3 = 0` plane
    /// exactly Hermitian by averaging each slot with its partner.
    /// Bitwise idempotent.
    pub fn enforce_symmetry(&mut self) {
        let l = self.lattice.clone();
        for idx in 0..l.storage_len() {
            let w = l.weight(idx);
            if w == 0.0 {
                self.set_at(idx, [ZERO; 3]);
            } else if w == 1.0 {
                let p = l.partner(idx);
                if idx < p {
                    for j in 0..3 {
                        let avg = (self.comps[j][idx] + self.comps[j][p].conj()) * 0.5;
                        self.comps[j][idx] = avg;
                        self.comps[j][p] = avg.conj();
                    }
                }
            }
        }
    }

    /// Exact (bitwise) Hermitian symmetry plus vanishing mean/Nyquist slots.
    pub fn is_hermitian(&self) -> bool {
        let l = &self.lattice;
        (0..l.storage_len()).all(|idx| {
            let w = l.weight(idx);
            if w == 0.0 {
                self.at(idx) == [ZERO; 3]
            } else if w == 1.0 {
                let p = l.partner(idx);
                (0..3).all(|j| {
                    let a = self.comps[j][idx];
                    let b = self.comps[j][p].conj();
                    a.re.to_bits() == b.re.to_bits() && a.im.to_bits() == b.im.to_bits()
                })
            } else {
                true
            }
        })
    }

    /// Zeroes every slot outside the dealias mask.
    pub fn dealias_in_place(&mut self) {
        for idx in 0..self.lattice.storage_len() {
            if !self.lattice.is_retained(idx) {
                self.set_at(idx, [ZERO; 3]);
            }
        }
    }

    pub fn dealiased(&self) -> Self {
        let mut out = self.clone();
        out.dealias_in_place();
        out
    }

    /// Sobolev norm `(sum_n |n|^{2s} |u_n|^2)^{1/2}` over the full map.
    ///
    /// Summed in storage order with compensated summation, so the value is
    /// bitwise reproducible.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        self.weighted_sum(s, |idx| {
            let v = self.at(idx);
            v.iter().map(|z| z.norm_sqr()).sum()
        })
        .max(0.0)
        .sqrt()
    }

    /// `Re sum_n |n|^{2s} u_n . conj(v_n)` over the full map.
    pub fn inner_product(&self, other: &Self, s: f64) -> Result<f64> {
        self.check_same(other)?;
        Ok(self.weighted_sum(s, |idx| {
            let (a, b) = (self.at(idx), other.at(idx));
            (0..3).map(|j| (a[j] * b[j].conj()).re).sum()
        }))
    }

    fn weighted_sum(&self, s: f64, term: impl Fn(usize) -> f64) -> f64 {
        let l = &self.lattice;
        let mut acc = CompensatedSum::default();
        for idx in 0..l.storage_len() {
            let w = l.weight(idx);
            if w == 0.0 {
                continue;
            }
            let t = term(idx);
            if t == 0.0 {
                continue;
            }
            acc.add(w * sobolev_weight(l.ksq(idx), s) * t);
        }
        acc.value()
    }

    /// `max_n |n . u_n| / ||u||_0`, zero for the zero field.
    pub fn divergence_residual(&self) -> f64 {
        let norm = self.sobolev_norm(0.0);
        if norm == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for idx in 0..self.lattice.storage_len() {
            let k = self.lattice.kvec(idx);
            let v = self.at(idx);
            let d = v[0] * k[0] + v[1] * k[1] + v[2] * k[2];
            worst = worst.max(d.norm());
        }
        worst / norm
    }

    pub fn max_abs(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0f64, |m, z| m.max(z.norm()))
    }

    /// Largest coefficient-wise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.comps
            .iter()
            .zip(&other.comps)
            .flat_map(|(a, b)| a.iter().zip(b))
            .fold(0.0f64, |m, (x, y)| m.max((x - y).norm()))
    }

    pub fn is_finite(&self) -> bool {
        self.comps
            .iter()
            .all(|c| c.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
    }

    /// Physical samples over the whole grid.
    pub fn to_physical(&self) -> PhysicalField {
        let n = self.lattice.n();
        self.to_physical_with_support([n[0] / 2, n[1] / 2, n[2] / 2])
    }

    pub(crate) fn to_physical_with_support(&self, support: [usize; 3]) -> PhysicalField {
        let n = self.lattice.n();
        let len = self.lattice.grid_len();
        let mut comps = [vec![0.0; len], vec![0.0; len], vec![0.0; len]];
        for j in 0..3 {
            self.lattice
                .plans
                .inverse(&self.comps[j], support, &mut comps[j]);
        }
        PhysicalField { n, comps }
    }

    /// Inverse of [`SpectralField::to_physical`] for fields without
    /// Nyquist content; the Nyquist and mean slots are dropped.
    pub fn to_spectral(grid: &PhysicalField, lattice: &Arc<Lattice>) -> Result<Self> {
        let n = lattice.n();
        let expected = lattice.grid_len();
        for c in &grid.comps {
            if grid.n != n || c.len() != expected {
                return Err(Error::ShapeMismatch {
                    expected,
                    got: c.len(),
                });
            }
        }
        let mut out = Self::from_physical_with_support(grid, lattice, [n[0] / 2, n[1] / 2, n[2] / 2]);
        out.enforce_symmetry();
        Ok(out)
    }

    pub(crate) fn from_physical_with_support(
        grid: &PhysicalField,
        lattice: &Arc<Lattice>,
        support: [usize; 3],
    ) -> Self {
        let mut out = Self::zeros(lattice);
        for j in 0..3 {
            lattice
                .plans
                .forward(&grid.comps[j], support, &mut out.comps[j]);
        }
        out
    }
}

#[inline]
pub(crate) fn sobolev_weight(ksq: f64, s: f64) -> f64 {
    if s == 0.0 {
        1.0
    } else if s == 1.0 {
        ksq
    } else {
        ksq.powf(s)
    }
}

#[inline]
pub(crate) fn project_mode(k: [f64; 3], ksq: f64, v: Vec3c) -> Vec3c {
    if ksq == 0.0 {
        return [ZERO; 3];
    }
    let d = (v[0] * k[0] + v[1] * k[1] + v[2] * k[2]) / ksq;
    [v[0] - d * k[0], v[1] - d * k[1], v[2] - d * k[2]]
}

/// Free-function forms of the field operations.
pub fn leray_project(u: &SpectralField) -> SpectralField {
    u.leray_project()
}

pub fn sobolev_norm(u: &SpectralField, s: f64) -> f64 {
    u.sobolev_norm(s)
}

pub fn inner_product(u: &SpectralField, v: &SpectralField, s: f64) -> Result<f64> {
    u.inner_product(v, s)
}

pub fn to_physical(u: &SpectralField) -> PhysicalField {
    u.to_physical()
}

pub fn to_spectral(grid: &PhysicalField, lattice: &Arc<Lattice>) -> Result<SpectralField> {
    SpectralField::to_spectral(grid, lattice)
}
