//! Empirical constants for the bilinear estimates
//! `||B(V,W)||_s <= C ||V||_s ||W||_{s+1}` and
//! `|<B(V,W), A^s W>| <= D ||V||_s ||W||_s^2` (with the
//! `D ||V||_s ||W||_s ||W||_{s+1}` variant measured alongside).

use serde::{Deserialize, Serialize};

use super::bilinear::bilinear;
use crate::error::{Error, Result};
use crate::spectral::{random_divfree_field, Lattice, SpectralField, SpectrumProfile};
use std::sync::Arc;

/// Which candidate right-hand side is used for the pairing estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DBoundForm {
    /// `||V||_s ||W||_s^2`
    SquaredS,
    /// `||V||_s ||W||_s ||W||_{s+1}`
    MixedS1,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ratios {
    pub c: f64,
    pub d_squared: f64,
    pub d_mixed: f64,
}

/// Bound ratios for one pair, `None` when a denominator vanishes.
pub fn bilinear_ratios(v: &SpectralField, w: &SpectralField, s: f64, alpha: f64) -> Result<Option<Ratios>> {
    let nv = v.sobolev_norm(s);
    let nw = w.sobolev_norm(s);
    let nw1 = w.sobolev_norm(s + 1.0);
    if nv == 0.0 || nw == 0.0 || nw1 == 0.0 {
        return Ok(None);
    }
    let b = bilinear(v, w, alpha)?;
    let pairing = b.inner_product(w, s)?.abs();
    Ok(Some(Ratios {
        c: b.sobolev_norm(s) / (nv * nw1),
        d_squared: pairing / (nv * nw * nw),
        d_mixed: pairing / (nv * nw * nw1),
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsConfig {
    pub s: f64,
    pub alpha: f64,
    pub samples: usize,
    pub seed: u64,
    /// Sampling profile for `V`; defaults to [`ConstantsConfig::default_profile`].
    pub v_profile: Option<SpectrumProfile>,
    pub w_profile: Option<SpectrumProfile>,
    /// Re-run on the doubled band to see which pairing bound stays bounded.
    pub assess_support: bool,
}

impl ConstantsConfig {
    pub fn new(s: f64, alpha: f64, samples: usize, seed: u64) -> Self {
        Self {
            s,
            alpha,
            samples,
            seed,
            v_profile: None,
            w_profile: None,
            assess_support: false,
        }
    }

    /// Flat per-mode amplitude up to half the dealias radius.
    pub fn default_profile(lattice: &Lattice) -> SpectrumProfile {
        SpectrumProfile::band(0.0, 0.5 * lattice.retained_radius())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BilinearConstants {
    pub s: f64,
    pub alpha: f64,
    pub samples: usize,
    /// Samples with a vanishing denominator.
    pub skipped: usize,
    pub c_emp: f64,
    /// Pairing constant against `||V||_s ||W||_s^2`.
    pub d_emp: f64,
    /// Pairing constant against `||V||_s ||W||_s ||W||_{s+1}`.
    pub d_mixed_emp: f64,
    /// Ratio of each maximum on the doubled band to the default band.
    pub growth: Option<Ratios>,
    /// Pairing form whose maximum grows least when the band is doubled.
    pub supported_form: Option<DBoundForm>,
}

fn maxima(
    lattice: &Arc<Lattice>,
    cfg: &ConstantsConfig,
    v_profile: &SpectrumProfile,
    w_profile: &SpectrumProfile,
) -> Result<(Ratios, usize)> {
    let mut best = Ratios {
        c: 0.0,
        d_squared: 0.0,
        d_mixed: 0.0,
    };
    let mut skipped = 0;
    for i in 0..cfg.samples as u64 {
        let v = random_divfree_field(cfg.seed, 2 * i, v_profile, lattice)?;
        let w = random_divfree_field(cfg.seed, 2 * i + 1, w_profile, lattice)?;
        match bilinear_ratios(&v, &w, cfg.s, cfg.alpha)? {
            Some(r) => {
                best.c = best.c.max(r.c);
                best.d_squared = best.d_squared.max(r.d_squared);
                best.d_mixed = best.d_mixed.max(r.d_mixed);
            }
            None => skipped += 1,
        }
    }
    Ok((best, skipped))
}

/// Maxima of the bound ratios over `samples` seeded random pairs.
pub fn estimate_bilinear_constants(
    lattice: &Arc<Lattice>,
    cfg: &ConstantsConfig,
) -> Result<BilinearConstants> {
    if cfg.samples == 0 {
        return Err(Error::InvalidArgument("samples must be at least 1".into()));
    }
    let default = ConstantsConfig::default_profile(lattice);
    let vp = cfg.v_profile.unwrap_or(default);
    let wp = cfg.w_profile.unwrap_or(default);
    let (best, skipped) = maxima(lattice, cfg, &vp, &wp)?;
    if skipped > 0 {
        log::info!("bilinear constants: {skipped} of {} samples skipped", cfg.samples);
    }

    let (growth, supported_form) = if cfg.assess_support && skipped < cfg.samples {
        let widen = |p: SpectrumProfile| SpectrumProfile {
            kmax: (2.0 * p.kmax).min(crate::spectral::max_retained_shell(lattice)),
            ..p
        };
        let (wide, _) = maxima(lattice, cfg, &widen(vp), &widen(wp))?;
        let g = Ratios {
            c: wide.c / best.c,
            d_squared: wide.d_squared / best.d_squared,
            d_mixed: wide.d_mixed / best.d_mixed,
        };
        let form = if g.d_squared <= g.d_mixed {
            DBoundForm::SquaredS
        } else {
            DBoundForm::MixedS1
        };
        (Some(g), Some(form))
    } else {
        (None, None)
    };

    Ok(BilinearConstants {
        s: cfg.s,
        alpha: cfg.alpha,
        samples: cfg.samples,
        skipped,
        c_emp: best.c,
        d_emp: best.d_squared,
        d_mixed_emp: best.d_mixed,
        growth,
        supported_form,
    })
}
