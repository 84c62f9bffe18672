//! Experiment configuration: a sectioned TOML document (JSON accepted as an
//! alternative encoding), validated with key paths and defaults applied.
//!
//! ```toml
//! seed = 7
//!
//! [lattice]
//! n = [32, 32, 32]
//!
//! [physics]
//! viscosity = 1.0
//! alpha = 0.01
//! coriolis = 10.0
//! ```
//!
//! Only `lattice.n` and `physics.viscosity` are required.

use std::fmt;
use std::sync::Arc;

use rnsa_core::bounds::Constants;
use rnsa_core::integrator::StepperConfig;
use rnsa_core::spectral::TWO_THIRDS;
use rnsa_core::{Lattice, LatticeSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

fn default_seed() -> u64 {
    0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed; every random component derives its own stream from it.
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Output directory (the `--out` flag takes precedence).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    /// Smoothness order of the initial data, recorded only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    pub lattice: LatticeSection,
    pub physics: PhysicsSection,
    #[serde(default)]
    pub forcing: FieldSection,
    #[serde(default = "FieldSection::initial")]
    pub initial: FieldSection,
    #[serde(default)]
    pub stepper: StepperConfigSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub pair: PairSection,
    #[serde(default)]
    pub squeeze: SqueezeSection,
    #[serde(default)]
    pub tangent: TangentSection,
    #[serde(default)]
    pub bounds: BoundsSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSection {
    pub n: [usize; 3],
    #[serde(default = "unit_box")]
    pub a: [f64; 3],
    #[serde(default = "two_thirds")]
    pub dealias_fraction: f64,
    /// Accept `a[0] != 1` (logged as a warning).
    #[serde(default)]
    pub allow_any_a1: bool,
}

fn unit_box() -> [f64; 3] {
    [1.0; 3]
}

fn two_thirds() -> f64 {
    TWO_THIRDS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsSection {
    pub viscosity: f64,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default)]
    pub coriolis: f64,
    /// Test hook: `false` drops the nonlinear term.
    #[serde(default = "yes")]
    pub nonlinear: bool,
}

fn yes() -> bool {
    true
}

/// Seeded random divergence-free field on the shell band `[kmin, kmax]`
/// rescaled to `H^0` norm `norm0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSection {
    #[serde(default = "one")]
    pub kmin: f64,
    #[serde(default = "two")]
    pub kmax: f64,
    #[serde(default)]
    pub norm0: f64,
    /// Overrides the seed derived from the master seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

fn one() -> f64 {
    1.0
}

fn two() -> f64 {
    2.0
}

impl Default for FieldSection {
    fn default() -> Self {
        Self {
            kmin: 1.0,
            kmax: 2.0,
            norm0: 0.0,
            seed: None,
        }
    }
}

impl FieldSection {
    fn initial() -> Self {
        Self {
            kmin: 1.0,
            kmax: 4.0,
            norm0: 1.0,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepperConfigSection {
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_scheme")]
    pub scheme: String,
    #[serde(default = "half")]
    pub cfl_safety: f64,
    #[serde(default)]
    pub adapt: bool,
}

fn default_dt() -> f64 {
    1e-3
}

fn default_scheme() -> String {
    "IFRK4".into()
}

fn half() -> f64 {
    0.5
}

impl Default for StepperConfigSection {
    fn default() -> Self {
        Self {
            dt: default_dt(),
            scheme: default_scheme(),
            cfl_safety: half(),
            adapt: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    /// Final time of `simulate`.
    #[serde(default = "one")]
    pub t_final: f64,
    /// Sampling interval; defaults to `10 dt`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_every: Option<f64>,
    #[serde(default = "default_beta")]
    pub beta: f64,
    /// Samples before this time are excluded from the absorbing summary.
    #[serde(default)]
    pub transient: f64,
    /// Window of the time-integral check.
    #[serde(default = "default_window")]
    pub window: f64,
}

fn default_beta() -> f64 {
    2.6
}

fn default_window() -> f64 {
    0.1
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            t_final: 1.0,
            sample_every: None,
            beta: default_beta(),
            transient: 0.0,
            window: default_window(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairSection {
    /// Time the initial field is evolved before the pair is formed.
    #[serde(default)]
    pub transient: f64,
    #[serde(default = "default_pair_duration")]
    pub duration: f64,
    /// `H^0` size of the perturbation relative to the base state.
    #[serde(default = "default_perturbation")]
    pub perturbation: f64,
    /// Rank of the low-mode split columns.
    #[serde(default = "default_n0")]
    pub n0: usize,
    /// Gronwall constants; estimated at `s = beta` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c2: Option<f64>,
    #[serde(default = "default_constant_samples")]
    pub constant_samples: usize,
    /// Sampling interval of the pair records; defaults to `dt`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_every: Option<f64>,
}

fn default_pair_duration() -> f64 {
    0.25
}

fn default_perturbation() -> f64 {
    1e-3
}

fn default_n0() -> usize {
    12
}

fn default_constant_samples() -> usize {
    20
}

impl Default for PairSection {
    fn default() -> Self {
        Self {
            transient: 0.0,
            duration: default_pair_duration(),
            perturbation: default_perturbation(),
            n0: default_n0(),
            c1: None,
            c2: None,
            constant_samples: default_constant_samples(),
            sample_every: None,
        }
    }
}

/// A time given as a number or the keyword `"auto"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimeSpec {
    Value(f64),
    Keyword(AutoKeyword),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoKeyword {
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SqueezeSection {
    #[serde(default = "default_pairs")]
    pub pairs: usize,
    /// Evolution before the pairs are formed; also the run measured for
    /// the absorbing radii in auto mode (its second half).
    #[serde(default = "one")]
    pub transient: f64,
    #[serde(default = "default_perturbation")]
    pub perturbation: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "auto")]
    pub t_star: TimeSpec,
    /// Rank for the per-pair table; defaults to the bounds search value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n0: Option<usize>,
    /// Ranks scanned for the minimal empirical N0; defaults to every shell.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n0_scan: Option<Vec<usize>>,
}

fn default_pairs() -> usize {
    100
}

fn default_delta() -> f64 {
    0.125
}

fn auto() -> TimeSpec {
    TimeSpec::Keyword(AutoKeyword::Auto)
}

impl Default for SqueezeSection {
    fn default() -> Self {
        Self {
            pairs: default_pairs(),
            transient: 1.0,
            perturbation: default_perturbation(),
            delta: default_delta(),
            t_star: auto(),
            n0: None,
            n0_scan: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoriolisVariant {
    /// `f P J P R_alpha Z`.
    Filtered,
    /// `f P J P Z`.
    Unfiltered,
}

impl CoriolisVariant {
    pub fn include_filter(self) -> bool {
        self == CoriolisVariant::Filtered
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TangentSection {
    #[serde(default)]
    pub transient: f64,
    #[serde(default = "half")]
    pub duration: f64,
    #[serde(default = "default_scales")]
    pub scales: Vec<f64>,
    /// Step of the finite-difference directional-derivative check.
    #[serde(default = "default_fd_epsilon")]
    pub fd_epsilon: f64,
    #[serde(default = "both_variants")]
    pub variants: Vec<CoriolisVariant>,
    /// Perturbation direction; `norm0 = 0` gives the zero direction.
    #[serde(default = "FieldSection::direction")]
    pub direction: FieldSection,
    #[serde(default = "quarter")]
    pub tail_t_star: f64,
    #[serde(default = "default_probes")]
    pub probes: usize,
    /// Ranks of the tail table; defaults to every shell boundary.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_ranks: Option<Vec<usize>>,
}

fn default_scales() -> Vec<f64> {
    vec![1e-2, 1e-3, 1e-4]
}

fn default_fd_epsilon() -> f64 {
    1e-5
}

fn both_variants() -> Vec<CoriolisVariant> {
    vec![CoriolisVariant::Filtered, CoriolisVariant::Unfiltered]
}

fn quarter() -> f64 {
    0.25
}

fn default_probes() -> usize {
    4
}

impl FieldSection {
    fn direction() -> Self {
        Self {
            kmin: 1.0,
            kmax: 4.0,
            norm0: 1.0,
            seed: None,
        }
    }
}

impl Default for TangentSection {
    fn default() -> Self {
        Self {
            transient: 0.0,
            duration: 0.5,
            scales: default_scales(),
            fd_epsilon: default_fd_epsilon(),
            variants: both_variants(),
            direction: FieldSection::direction(),
            tail_t_star: quarter(),
            probes: default_probes(),
            tail_ranks: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundsMode {
    Manual,
    Measured,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSection {
    #[serde(default = "manual")]
    pub mode: BoundsMode,
    #[serde(default = "one")]
    pub rho_h: f64,
    #[serde(default = "one")]
    pub rho_v: f64,
    /// Overrides the first Stokes eigenvalue of the lattice.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda1: Option<f64>,
    /// Absorbing summary written by `simulate`, for measured mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measured_from: Option<String>,
    #[serde(default = "one")]
    pub c1: f64,
    #[serde(default = "one")]
    pub c2: f64,
    #[serde(default = "one")]
    pub c3: f64,
    #[serde(default = "one")]
    pub c_tilde: f64,
    #[serde(default = "one")]
    pub c: f64,
    #[serde(default = "half")]
    pub theta: f64,
}

fn manual() -> BoundsMode {
    BoundsMode::Manual
}

impl Default for BoundsSection {
    fn default() -> Self {
        Self {
            mode: BoundsMode::Manual,
            rho_h: 1.0,
            rho_v: 1.0,
            lambda1: None,
            measured_from: None,
            c1: 1.0,
            c2: 1.0,
            c3: 1.0,
            c_tilde: 1.0,
            c: 1.0,
            theta: 0.5,
        }
    }
}

impl BoundsSection {
    pub fn constants(&self) -> Constants {
        Constants {
            c1: self.c1,
            c2: self.c2,
            c3: self.c3,
            c_tilde: self.c_tilde,
            c: self.c,
        }
    }
}

/// Problems found while reading a configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() || self.path == "." {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Usage(format!("config: {e}"))
    }
}

/// Adds the nearest valid key to serde's unknown-field message.
fn explain(message: &str) -> String {
    let Some(rest) = message.strip_prefix("unknown field `") else {
        return message.to_string();
    };
    let Some((unknown, tail)) = rest.split_once('`') else {
        return message.to_string();
    };
    let expected: Vec<&str> = tail.split('`').skip(1).step_by(2).collect();
    let nearest = expected
        .iter()
        .map(|k| (strsim::damerau_levenshtein(unknown, k), *k))
        .min();
    match nearest {
        Some((d, k)) if d <= 3 || d * 2 < unknown.len() => {
            format!("unknown key `{unknown}` (did you mean `{k}`?)")
        }
        _ => format!("unknown key `{unknown}`; valid keys: {}", expected.join(", ")),
    }
}

fn config_error<E>(e: serde_path_to_error::Error<E>, message: impl Fn(&E) -> String) -> ConfigError {
    let path = e.path().to_string();
    let message = explain(message(e.inner()).trim());
    ConfigError { path, message }
}

fn toml_message(text: &str, e: &toml::de::Error) -> String {
    let message = e.message().replace('\n', "; ");
    match e.span() {
        Some(span) => {
            let line = text[..span.start.min(text.len())].matches('\n').count() + 1;
            format!("{message} (line {line})")
        }
        None => message,
    }
}

fn looks_like_json(text: &str) -> bool {
    text.trim_start().starts_with('{')
}

/// Parses and validates a configuration. Warnings (such as `beta <= 5/2`)
/// are logged.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let cfg: ExperimentConfig = if looks_like_json(text) {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| config_error(e, |e| e.to_string()))?
    } else {
        let de = toml::Deserializer::new(text);
        serde_path_to_error::deserialize(de).map_err(|e| config_error(e, |e| toml_message(text, e)))?
    };
    cfg.validate()?;
    Ok(cfg)
}

fn fail(path: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        path: path.to_string(),
        message: message.into(),
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let l = &self.lattice;
        for (j, &n) in l.n.iter().enumerate() {
            if n < 4 || n % 2 == 1 {
                return Err(fail(&format!("lattice.n[{j}]"), format!("odd resolution or below 4: {n}")));
            }
        }
        for (j, &a) in l.a.iter().enumerate() {
            if !(a > 0.0 && a.is_finite()) {
                return Err(fail(&format!("lattice.a[{j}]"), format!("must be positive, got {a}")));
            }
        }
        if l.a[0] != 1.0 && !l.allow_any_a1 {
            return Err(fail("lattice.a[0]", "a1 must be 1 (set lattice.allow_any_a1 to override)"));
        }
        if !(l.dealias_fraction > 0.0 && l.dealias_fraction <= TWO_THIRDS) {
            return Err(fail(
                "lattice.dealias_fraction",
                format!("must lie in (0, 2/3] for dealiased products, got {}", l.dealias_fraction),
            ));
        }
        let p = &self.physics;
        if !(p.viscosity > 0.0 && p.viscosity.is_finite()) {
            return Err(fail("physics.viscosity", format!("must be positive, got {}", p.viscosity)));
        }
        if !(p.alpha >= 0.0 && p.alpha.is_finite()) {
            return Err(fail("physics.alpha", format!("must be >= 0, got {}", p.alpha)));
        }
        if !p.coriolis.is_finite() {
            return Err(fail("physics.coriolis", "must be finite"));
        }
        for (name, f) in [("forcing", &self.forcing), ("initial", &self.initial), ("tangent.direction", &self.tangent.direction)] {
            if !(f.kmin >= 0.0 && f.kmax >= f.kmin) {
                return Err(fail(&format!("{name}.kmax"), format!("band [{}, {}] is empty", f.kmin, f.kmax)));
            }
            if !(f.norm0 >= 0.0 && f.norm0.is_finite()) {
                return Err(fail(&format!("{name}.norm0"), "must be >= 0"));
            }
        }
        let s = &self.stepper;
        if !(s.dt > 0.0 && s.dt.is_finite()) {
            return Err(fail("stepper.dt", format!("must be positive, got {}", s.dt)));
        }
        if !s.scheme.eq_ignore_ascii_case("ifrk4") {
            return Err(fail("stepper.scheme", format!("unknown scheme `{}` (only IFRK4)", s.scheme)));
        }
        if !(s.cfl_safety > 0.0 && s.cfl_safety <= 1.0) {
            return Err(fail("stepper.cfl_safety", "must lie in (0, 1]"));
        }
        let r = &self.run;
        if !(r.t_final >= 0.0) {
            return Err(fail("run.t_final", "must be >= 0"));
        }
        if let Some(se) = r.sample_every {
            if !(se > 0.0) {
                return Err(fail("run.sample_every", "must be positive"));
            }
        }
        if !(r.beta >= 0.0) {
            return Err(fail("run.beta", "must be >= 0"));
        }
        if r.beta <= 2.5 {
            log::warn!("run.beta = {} is not above 5/2", r.beta);
        }
        if !(r.window > 0.0) {
            return Err(fail("run.window", "must be positive"));
        }
        let pr = &self.pair;
        if !(pr.duration >= 0.0 && pr.transient >= 0.0) {
            return Err(fail("pair.duration", "times must be >= 0"));
        }
        if !(pr.perturbation >= 0.0) {
            return Err(fail("pair.perturbation", "must be >= 0"));
        }
        if pr.constant_samples == 0 && (pr.c1.is_none() || pr.c2.is_none()) {
            return Err(fail("pair.constant_samples", "must be >= 1 when c1 or c2 is estimated"));
        }
        let sq = &self.squeeze;
        if sq.pairs == 0 {
            return Err(fail("squeeze.pairs", "must be >= 1"));
        }
        if let TimeSpec::Value(t) = sq.t_star {
            if !(t > 0.0) {
                return Err(fail("squeeze.t_star", "must be positive or \"auto\""));
            }
        }
        if !(sq.delta > 0.0 && sq.delta < 0.25) {
            log::warn!("squeeze.delta = {} lies outside (0, 1/4)", sq.delta);
        }
        let tg = &self.tangent;
        if tg.scales.is_empty() {
            return Err(fail("tangent.scales", "needs at least one scale"));
        }
        if tg.scales.iter().any(|&e| !(e > 0.0)) || tg.scales.windows(2).any(|w| w[1] >= w[0]) {
            return Err(fail("tangent.scales", "must be positive and strictly decreasing"));
        }
        if tg.probes == 0 {
            return Err(fail("tangent.probes", "must be >= 1"));
        }
        if tg.variants.is_empty() {
            return Err(fail("tangent.variants", "needs at least one variant"));
        }
        let b = &self.bounds;
        if !(b.theta > 0.0 && b.theta < 1.0) {
            return Err(fail("bounds.theta", format!("must lie in (0, 1), got {}", b.theta)));
        }
        Ok(())
    }

    pub fn lattice_spec(&self) -> LatticeSpec {
        LatticeSpec::new(self.lattice.a, self.lattice.n, self.lattice.dealias_fraction)
    }

    pub fn build_lattice(&self) -> Result<Arc<Lattice>, CliError> {
        let spec = self.lattice_spec();
        let l = if self.lattice.allow_any_a1 {
            Lattice::new_allow_any_a1(spec)
        } else {
            Lattice::new(spec)
        };
        l.map_err(|e| CliError::Usage(format!("config: lattice: {e}")))
    }

    pub fn stepper(&self) -> StepperConfig {
        StepperConfig {
            dt: self.stepper.dt,
            scheme: Default::default(),
            cfl_safety: self.stepper.cfl_safety,
            adapt: self.stepper.adapt,
        }
    }

    pub fn sample_every(&self) -> f64 {
        self.run.sample_every.unwrap_or(10.0 * self.stepper.dt)
    }

    /// Effective configuration as TOML.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// First 16 hex digits of the SHA-256 of the effective TOML.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[lattice]\nn = [8, 8, 8]\n\n[physics]\nviscosity = 1.0\n";

    #[test]
    fn minimal_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.stepper.dt, 1e-3);
        assert_eq!(c.run.beta, 2.6);
        assert_eq!(c.lattice.dealias_fraction, TWO_THIRDS);
        assert_eq!(c.squeeze.t_star, TimeSpec::Keyword(AutoKeyword::Auto));
    }

    #[test]
    fn unknown_key_names_nearest() {
        let text = "[lattice]\nn = [8, 8, 8]\n\n[physics]\nviscocity = 1.0\n";
        let e = parse_config(text).unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("viscocity") && msg.contains("`viscosity`"), "{msg}");
        assert!(msg.starts_with("physics"), "{msg}");
    }

    #[test]
    fn missing_and_mistyped() {
        let e = parse_config("[lattice]\nn = [8, 8, 8]\n").unwrap_err();
        assert!(e.to_string().contains("physics"), "{e}");
        let e = parse_config("[lattice]\nn = [8, 8, 8]\n[physics]\nviscosity = \"x\"\n").unwrap_err();
        assert!(e.to_string().contains("physics.viscosity"), "{e}");
        let e = parse_config("[lattice]\nn = [8, 7, 8]\n[physics]\nviscosity = 1.0\n").unwrap_err();
        assert_eq!(e.path, "lattice.n[1]");
        let e = parse_config("[lattice]\nn = [8, 8, 8]\ndealias_fraction = 0.9\n[physics]\nviscosity = 1.0\n").unwrap_err();
        assert_eq!(e.path, "lattice.dealias_fraction");
    }

    #[test]
    fn round_trip_and_json() {
        let c = parse_config(MINIMAL).unwrap();
        let again = parse_config(&c.to_toml()).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.hash(), again.hash());
        assert_eq!(c.hash().len(), 16);
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(parse_config(&json).unwrap(), c);
        let e = parse_config("{\"lattice\": {\"n\": [8,8,8]}, \"physics\": {\"viscosty\": 1}}").unwrap_err();
        assert!(e.to_string().contains("`viscosity`"), "{e}");
    }

    #[test]
    fn time_spec_forms() {
        let c = parse_config(&format!("{MINIMAL}[squeeze]\nt_star = 0.25\n")).unwrap();
        assert_eq!(c.squeeze.t_star, TimeSpec::Value(0.25));
        assert!(parse_config(&format!("{MINIMAL}[squeeze]\nt_star = \"soon\"\n")).is_err());
    }
}
