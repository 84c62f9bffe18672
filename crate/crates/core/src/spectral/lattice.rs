use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::fft::FftPlans;
use crate::error::{Error, Result};

/// Largest dealias fraction for which quadratic products are alias-free.
pub const TWO_THIRDS: f64 = 2.0 / 3.0;

/// Geometry parameters of a periodic box, without any precomputed tables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    /// Box half-periods: the domain is `[0, 2 pi a_1] x [0, 2 pi a_2] x [0, 2 pi a_3]`.
    pub a: [f64; 3],
    /// Grid points (and FFT length) per axis.
    pub n: [usize; 3],
    /// Fraction of the representable wave numbers kept per axis.
    pub dealias_fraction: f64,
}

impl LatticeSpec {
    pub fn new(a: [f64; 3], n: [usize; 3], dealias_fraction: f64) -> Self {
        Self {
            a,
            n,
            dealias_fraction,
        }
    }

    pub fn cube(n: usize) -> Self {
        Self::new([1.0; 3], [n; 3], TWO_THIRDS)
    }
}

/// Periodic lattice with its spectral index tables and FFT plans.
///
/// Spectral coefficients are stored as a half spectrum: axis 3 keeps
/// `n_3 = 0..=N_3/2` and axes 1, 2 use FFT ordering (`i < N/2` is `n = i`,
/// otherwise `n = i - N`). The storage index of `(i1, i2, i3)` is
/// `(i1 * N_2 + i2) * (N_3/2 + 1) + i3`. The logical data model is the full
/// Hermitian map over `|n_j| < N_j/2`; the canonical enumeration of that map
/// is lexicographic in `(n_1, n_2, n_3)`.
pub struct Lattice {
    spec: LatticeSpec,
    n3h: usize,
    kmax: [usize; 3],
    kvec: Vec<[f64; 3]>,
    ksq: Vec<f64>,
    weight: Vec<f64>,
    retained: Vec<bool>,
    partner: Vec<usize>,
    wavenumber: Vec<[i64; 3]>,
    retained_list: Vec<usize>,
    pub(crate) plans: FftPlans,
}

impl fmt::Debug for Lattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Lattice")
            .field("a", &self.spec.a)
            .field("n", &self.spec.n)
            .field("dealias_fraction", &self.spec.dealias_fraction)
            .field("kmax", &self.kmax)
            .finish()
    }
}

impl PartialEq for Lattice {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}

fn signed(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

fn unsigned(k: i64, n: usize) -> usize {
    if k >= 0 {
        k as usize
    } else {
        (k + n as i64) as usize
    }
}

/// Largest `k` with `k < fraction * N / 2`, never reaching Nyquist.
fn retained_kmax(n: usize, fraction: f64) -> usize {
    let x = fraction * n as f64 / 2.0;
    let r = x.round();
    let k = if (x - r).abs() < 1e-9 {
        r as i64 - 1
    } else {
        x.floor() as i64
    };
    k.clamp(0, n as i64 / 2 - 1) as usize
}

impl Lattice {
    /// Validated lattice with `a_1 = 1`.
    pub fn new(spec: LatticeSpec) -> Result<Arc<Self>> {
        Self::build(spec, false)
    }

    /// Like [`Lattice::new`] but tolerates `a_1 != 1` with a warning.
    pub fn new_allow_any_a1(spec: LatticeSpec) -> Result<Arc<Self>> {
        Self::build(spec, true)
    }

    pub fn cube(n: usize) -> Result<Arc<Self>> {
        Self::new(LatticeSpec::cube(n))
    }

    fn build(spec: LatticeSpec, allow_a1: bool) -> Result<Arc<Self>> {
        let LatticeSpec {
            a,
            n,
            dealias_fraction,
        } = spec;
        if n.iter().any(|&m| m % 2 != 0 || m < 4) {
            return Err(Error::OddResolution(n));
        }
        if a.iter().any(|&x| !(x.is_finite() && x > 0.0)) {
            return Err(Error::InvalidLattice(format!(
                "box lengths must be positive, got {a:?}"
            )));
        }
        if a[0] != 1.0 {
            if allow_a1 {
                log::warn!("a_1 = {} overrides the a_1 = 1 normalization", a[0]);
            } else {
                return Err(Error::InvalidLattice(format!(
                    "a_1 must be 1 (got {}); use the override to relax this",
                    a[0]
                )));
            }
        }
        if !(dealias_fraction > 0.0 && dealias_fraction <= 1.0) {
            return Err(Error::InvalidLattice(format!(
                "dealias_fraction must lie in (0, 1], got {dealias_fraction}"
            )));
        }

        let kmax = [
            retained_kmax(n[0], dealias_fraction),
            retained_kmax(n[1], dealias_fraction),
            retained_kmax(n[2], dealias_fraction),
        ];
        let n3h = n[2] / 2 + 1;
        let len = n[0] * n[1] * n3h;
        let mut kvec = Vec::with_capacity(len);
        let mut ksq = Vec::with_capacity(len);
        let mut weight = Vec::with_capacity(len);
        let mut retained = Vec::with_capacity(len);
        let mut partner = Vec::with_capacity(len);
        let mut wavenumber = Vec::with_capacity(len);
        let mut retained_list = Vec::new();
        for i1 in 0..n[0] {
            for i2 in 0..n[1] {
                for i3 in 0..n3h {
                    let idx = (i1 * n[1] + i2) * n3h + i3;
                    let m = [signed(i1, n[0]), signed(i2, n[1]), i3 as i64];
                    let nyquist = i1 == n[0] / 2 || i2 == n[1] / 2 || i3 == n[2] / 2;
                    let k = [
                        m[0] as f64 / a[0],
                        m[1] as f64 / a[1],
                        m[2] as f64 / a[2],
                    ];
                    let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
                    let zero = m == [0, 0, 0];
                    let w = if nyquist || zero {
                        0.0
                    } else if i3 == 0 {
                        1.0
                    } else {
                        2.0
                    };
                    let keep = !nyquist
                        && m[0].unsigned_abs() as usize <= kmax[0]
                        && m[1].unsigned_abs() as usize <= kmax[1]
                        && m[2].unsigned_abs() as usize <= kmax[2];
                    let p = if i3 == 0 && !nyquist {
                        (unsigned(-m[0], n[0]) * n[1] + unsigned(-m[1], n[1])) * n3h
                    } else {
                        idx
                    };
                    kvec.push(k);
                    ksq.push(k2);
                    weight.push(w);
                    retained.push(keep);
                    partner.push(p);
                    wavenumber.push(m);
                    if keep {
                        retained_list.push(idx);
                    }
                }
            }
        }
        let plans = FftPlans::new(n);
        Ok(Arc::new(Self {
            spec,
            n3h,
            kmax,
            kvec,
            ksq,
            weight,
            retained,
            partner,
            wavenumber,
            retained_list,
            plans,
        }))
    }

    pub fn spec(&self) -> LatticeSpec {
        self.spec
    }

    pub fn a(&self) -> [f64; 3] {
        self.spec.a
    }

    pub fn n(&self) -> [usize; 3] {
        self.spec.n
    }

    pub fn dealias_fraction(&self) -> f64 {
        self.spec.dealias_fraction
    }

    /// Largest retained `|n_j|` per axis after dealiasing.
    pub fn kmax(&self) -> [usize; 3] {
        self.kmax
    }

    pub fn n3_half(&self) -> usize {
        self.n3h
    }

    /// Number of half-spectrum storage slots per component.
    pub fn storage_len(&self) -> usize {
        self.kvec.len()
    }

    /// Number of physical grid points.
    pub fn grid_len(&self) -> usize {
        self.spec.n.iter().product()
    }

    pub fn index(&self, n: [i64; 3]) -> Option<(usize, bool)> {
        let nn = self.spec.n;
        for j in 0..3 {
            if n[j].unsigned_abs() as usize >= nn[j] / 2 {
                return None;
            }
        }
        let (m, conj) = if n[2] < 0 {
            ([-n[0], -n[1], -n[2]], true)
        } else {
            (n, false)
        };
        let idx = (unsigned(m[0], nn[0]) * nn[1] + unsigned(m[1], nn[1])) * self.n3h
            + m[2] as usize;
        Some((idx, conj))
    }

    pub fn wavenumber(&self, idx: usize) -> [i64; 3] {
        self.wavenumber[idx]
    }

    /// Rescaled wave vector `n_j / a_j`.
    pub fn kvec(&self, idx: usize) -> [f64; 3] {
        self.kvec[idx]
    }

    pub fn ksq(&self, idx: usize) -> f64 {
        self.ksq[idx]
    }

    pub fn ksq_table(&self) -> &[f64] {
        &self.ksq
    }

    /// Multiplicity of a storage slot in sums over the full Hermitian map:
    /// 2 for `n_3 > 0`, 1 in the `n_3 = 0` plane, 0 for the mean and
    /// Nyquist slots.
    pub fn weight(&self, idx: usize) -> f64 {
        self.weight[idx]
    }

    pub fn is_retained(&self, idx: usize) -> bool {
        self.retained[idx]
    }

    /// Storage index of `-n` for slots in the `n_3 = 0` plane, itself otherwise.
    pub fn partner(&self, idx: usize) -> usize {
        self.partner[idx]
    }

    /// Half-spectrum slots surviving the dealias mask, in storage order.
    pub fn retained_indices(&self) -> &[usize] {
        &self.retained_list
    }

    /// Largest `|n|` (rescaled) among retained modes that fits inside the
    /// retained box in every direction.
    pub fn retained_radius(&self) -> f64 {
        (0..3)
            .map(|j| self.kmax[j] as f64 / self.spec.a[j])
            .fold(f64::INFINITY, f64::min)
    }

    /// Canonical enumeration of the full map: lexicographic over
    /// `n_j in (-N_j/2, N_j/2)`.
    pub fn canonical_modes(&self) -> impl Iterator<Item = [i64; 3]> + '_ {
        let h = self.spec.n.map(|m| m as i64 / 2);
        (-h[0] + 1..h[0]).flat_map(move |n1| {
            (-h[1] + 1..h[1]).flat_map(move |n2| (-h[2] + 1..h[2]).map(move |n3| [n1, n2, n3]))
        })
    }

    pub fn same_geometry(&self, other: &Lattice) -> bool {
        self.spec == other.spec
    }
}
