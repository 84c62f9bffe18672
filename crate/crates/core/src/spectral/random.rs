use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::field::SpectralField;
use super::lattice::Lattice;
use crate::error::{Error, Result};

/// Random stream `stream` of master seed `seed`.
///
/// Streams are ChaCha8 streams of a generator seeded from the master seed,
/// so adding a new consumer (a new stream index) never perturbs the draws
/// of existing ones.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShellShape {
    /// Same expected amplitude on every mode in the band.
    Flat,
    /// Per-mode amplitude `|n|^p`.
    PowerLaw(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    None,
    /// Rescale so that `||u||_0 = value`.
    Norm0(f64),
}

/// Per-shell amplitude profile for random divergence-free fields.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumProfile {
    /// Band `kmin <= |n| <= kmax` in rescaled wave numbers.
    pub kmin: f64,
    pub kmax: f64,
    pub shape: ShellShape,
    /// Overall multiplier applied before normalization; 0 yields the zero field.
    pub amplitude: f64,
    pub normalization: Normalization,
}

impl SpectrumProfile {
    pub fn band(kmin: f64, kmax: f64) -> Self {
        Self {
            kmin,
            kmax,
            shape: ShellShape::Flat,
            amplitude: 1.0,
            normalization: Normalization::None,
        }
    }

    pub fn unit_energy(kmin: f64, kmax: f64) -> Self {
        Self::band(kmin, kmax).with_norm0(1.0)
    }

    pub fn with_norm0(mut self, value: f64) -> Self {
        self.normalization = Normalization::Norm0(value);
        self
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }

    fn mode_amplitude(&self, k: f64) -> f64 {
        if k < self.kmin || k > self.kmax {
            return 0.0;
        }
        self.amplitude
            * match self.shape {
                ShellShape::Flat => 1.0,
                ShellShape::PowerLaw(p) => k.powf(p),
            }
    }
}

/// Largest `|n|` among retained modes.
pub fn max_retained_shell(lattice: &Lattice) -> f64 {
    lattice
        .retained_indices()
        .iter()
        .map(|&i| lattice.ksq(i))
        .fold(0.0f64, f64::max)
        .sqrt()
}

/// Deterministic random divergence-free, zero-mean, Hermitian field.
///
/// Six standard normals are drawn for every retained slot in storage order
/// regardless of the band, so the draws at a given mode do not depend on
/// the profile.
pub fn random_divfree_field(
    seed: u64,
    stream: u64,
    profile: &SpectrumProfile,
    lattice: &Arc<Lattice>,
) -> Result<SpectralField> {
    let max = max_retained_shell(lattice);
    if profile.kmax > max * (1.0 + 1e-12) {
        return Err(Error::CutoffExceedsLattice {
            cutoff: profile.kmax,
            max,
        });
    }
    if !(profile.kmin >= 0.0 && profile.kmin <= profile.kmax) {
        return Err(Error::InvalidArgument(format!(
            "empty band [{}, {}]",
            profile.kmin, profile.kmax
        )));
    }
    let mut rng = seeded_rng(seed, stream);
    let mut u = SpectralField::zeros(lattice);
    for &idx in lattice.retained_indices() {
        let mut draw = [Complex64::new(0.0, 0.0); 3];
        for z in &mut draw {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            *z = Complex64::new(re, im);
        }
        let amp = profile.mode_amplitude(lattice.ksq(idx).sqrt());
        if amp != 0.0 && lattice.weight(idx) > 0.0 {
            u.set_at(idx, draw.map(|z| z * amp));
        }
    }
    u.leray_project_in_place();
    u.enforce_symmetry();
    if let Normalization::Norm0(target) = profile.normalization {
        let norm = u.sobolev_norm(0.0);
        if norm > 0.0 {
            u.scale(target / norm);
        }
    }
    Ok(u)
}
