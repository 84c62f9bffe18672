//! Turns a validated configuration into solver objects.

use std::sync::Arc;

use rand::RngCore;
use rnsa_core::integrator::{run_observed, Quiet};
use rnsa_core::spectral::{random_divfree_field, seeded_rng};
use rnsa_core::{Lattice, SimParams, SimState, SpectralField, SpectrumProfile, StepperConfig};

use crate::config::{ExperimentConfig, FieldSection};
use crate::CliError;

/// Stream indices of the master seed. New consumers take new indices, so
/// existing streams never change.
pub mod stream {
    pub const FORCING: u64 = 1;
    pub const INITIAL: u64 = 2;
    pub const PAIRS: u64 = 3;
    pub const CONSTANTS: u64 = 4;
    pub const DIRECTION: u64 = 5;
    pub const PROBES: u64 = 6;
}

/// Seed of component `stream`: the first 64-bit word of ChaCha8 stream
/// `stream` of the master seed.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    seeded_rng(master, stream).next_u64()
}

pub struct Setup {
    pub cfg: ExperimentConfig,
    pub lattice: Arc<Lattice>,
    pub params: SimParams,
    pub stepper: StepperConfig,
}

impl Setup {
    pub fn new(cfg: ExperimentConfig) -> Result<Self, CliError> {
        cfg.validate()?;
        let lattice = cfg.build_lattice()?;
        let forcing = field(&cfg, &lattice, &cfg.forcing, stream::FORCING, "forcing")?;
        let ph = &cfg.physics;
        let mut params = SimParams::new(ph.viscosity, ph.alpha, ph.coriolis, forcing)?;
        params.nonlinear = ph.nonlinear;
        let stepper = cfg.stepper();
        stepper.validate()?;
        Ok(Self {
            cfg,
            lattice,
            params,
            stepper,
        })
    }

    pub fn seed(&self, stream: u64) -> u64 {
        derive_seed(self.cfg.seed, stream)
    }

    pub fn initial_state(&self) -> Result<SimState, CliError> {
        let v = field(&self.cfg, &self.lattice, &self.cfg.initial, stream::INITIAL, "initial")?;
        Ok(SimState::new(v, 0.0))
    }

    pub fn direction(&self) -> Result<SpectralField, CliError> {
        field(&self.cfg, &self.lattice, &self.cfg.tangent.direction, stream::DIRECTION, "tangent.direction")
    }

    /// The initial state advanced by `duration` without sampling.
    pub fn after_transient(&self, duration: f64) -> Result<SimState, CliError> {
        let s0 = self.initial_state()?;
        if duration == 0.0 {
            return Ok(s0);
        }
        Ok(run_observed(&s0, duration, &self.params, &self.stepper, None, &mut Quiet)?)
    }

    /// Profile of pair perturbations and probes: every retained mode.
    pub fn full_band(&self) -> SpectrumProfile {
        SpectrumProfile::band(0.0, rnsa_core::spectral::max_retained_shell(&self.lattice))
    }
}

fn field(
    cfg: &ExperimentConfig,
    lattice: &Arc<Lattice>,
    section: &FieldSection,
    stream: u64,
    name: &str,
) -> Result<SpectralField, CliError> {
    if section.norm0 == 0.0 {
        return Ok(SpectralField::zeros(lattice));
    }
    let seed = section.seed.unwrap_or_else(|| derive_seed(cfg.seed, stream));
    let top = rnsa_core::spectral::max_retained_shell(lattice);
    if section.kmin > top {
        return Err(CliError::Usage(format!(
            "config: {name}.kmin = {} lies above the largest retained shell {top}",
            section.kmin
        )));
    }
    if section.kmax > top {
        log::warn!("{name}.kmax = {} clipped to the largest retained shell {top}", section.kmax);
    }
    let profile = SpectrumProfile::band(section.kmin, section.kmax.min(top)).with_norm0(section.norm0);
    random_divfree_field(seed, 0, &profile, lattice).map_err(|e| CliError::Usage(format!("config: {name}: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_are_stable_and_distinct() {
        let a: Vec<u64> = (1..=6).map(|s| derive_seed(7, s)).collect();
        let b: Vec<u64> = (1..=6).map(|s| derive_seed(7, s)).collect();
        assert_eq!(a, b);
        let mut sorted = a.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), a.len());
        assert_ne!(derive_seed(7, 1), derive_seed(8, 1));
    }
}
