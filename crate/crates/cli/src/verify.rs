//! Built-in oracle suite on small lattices. Reports contain measured errors
//! only (no timings), so repeated runs produce identical bytes.

use std::sync::Arc;

use rnsa_core::integrator::{run, run_observed, Frame, Observer};
use rnsa_core::operators::{bilinear, bilinear_oracle, coriolis_apply, helmholtz_inverse};
use rnsa_core::spectral::random_divfree_field;
use rnsa_core::{Lattice, SimParams, SimState, SpectralField, SpectrumProfile, StepperConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default)]
pub struct VerifyOptions {
    /// Test hook: negate the pseudospectral bilinear term to emulate a
    /// broken build.
    pub flip_bilinear: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    /// `true` when `measured` must not exceed `tolerance`, `false` when it
    /// must reach it.
    pub upper_bound: bool,
    pub passed: bool,
}

impl Check {
    fn at_most(name: &str, measured: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            tolerance,
            upper_bound: true,
            passed: measured <= tolerance,
        }
    }

    fn at_least(name: &str, measured: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            tolerance,
            upper_bound: false,
            passed: measured >= tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
    pub passed: bool,
}

fn field(l: &Arc<Lattice>, seed: u64, stream: u64, kmax: f64, norm: f64) -> SpectralField {
    random_divfree_field(seed, stream, &SpectrumProfile::band(0.0, kmax).with_norm0(norm), l)
        .expect("band fits the lattice")
}

/// Largest coefficient difference between the pseudospectral and the
/// convolution evaluation over `pairs` seeded field pairs per `alpha`.
pub fn oracle_error(l: &Arc<Lattice>, pairs: u64, alphas: &[f64], flip: bool) -> f64 {
    let kmax = rnsa_core::spectral::max_retained_shell(l);
    let mut worst = 0.0f64;
    for &alpha in alphas {
        for i in 0..pairs {
            let u = field(l, 2024, 2 * i, kmax, 1.0);
            let v = field(l, 2024, 2 * i + 1, kmax, 1.0);
            let mut fast = bilinear(&u, &v, alpha).expect("same lattice");
            if flip {
                fast.scale(-1.0);
            }
            let slow = bilinear_oracle(&u, &v, alpha).expect("small lattice");
            worst = worst.max(fast.max_abs_diff(&slow));
        }
    }
    worst
}

fn norm_errors(l: &Arc<Lattice>) -> (f64, f64) {
    let u = field(l, 7, 0, 3.0, 1.7);
    let grid = u.to_physical();
    let points = grid.comps[0].len() as f64;
    let mean_sq: f64 = grid.comps.iter().flat_map(|c| c.iter()).map(|x| x * x).sum::<f64>() / points;
    let parseval = (u.sobolev_norm(0.0).powi(2) - mean_sq).abs() / mean_sq;

    let s = 2.6;
    let mut direct = 0.0;
    for n in l.canonical_modes() {
        let (idx, _) = l.index(n).expect("canonical mode");
        let ksq = l.ksq(idx);
        if ksq == 0.0 {
            continue;
        }
        let v = u.mode(n).expect("canonical mode");
        direct += ksq.powf(s) * v.iter().map(|z| z.norm_sqr()).sum::<f64>();
    }
    let sobolev = (u.sobolev_norm(s) - direct.sqrt()).abs() / direct.sqrt();
    (parseval, sobolev)
}

struct Invariants {
    alpha: f64,
    f: f64,
    max_div: f64,
    hermitian: bool,
    max_pairing: f64,
}

impl Observer for Invariants {
    fn sample(&mut self, frame: &Frame<'_>) -> rnsa_core::Result<()> {
        let v = &frame.fields[0];
        let c = coriolis_apply(v, self.f, self.alpha);
        let pairing = c.inner_product(&helmholtz_inverse(v, self.alpha), 0.0)?.abs();
        let n0 = v.sobolev_norm(0.0);
        if n0 > 0.0 {
            self.max_pairing = self.max_pairing.max(pairing / (n0 * n0));
        }
        Ok(())
    }

    fn step(&mut self, _t: f64, fields: &[SpectralField]) -> rnsa_core::Result<()> {
        for v in fields {
            self.max_div = self.max_div.max(v.divergence_residual());
            self.hermitian &= v.is_hermitian();
        }
        Ok(())
    }
}

fn alpha_energy(v: &SpectralField, alpha: f64) -> f64 {
    v.inner_product(&helmholtz_inverse(v, alpha), 0.0).expect("same lattice")
}

pub fn run_verify(opts: VerifyOptions) -> VerifyReport {
    let l = Lattice::cube(8).expect("8^3 lattice");
    let mut checks = vec![Check::at_most(
        "bilinear_vs_convolution_8",
        oracle_error(&l, 20, &[0.0, 0.1, 1.0], opts.flip_bilinear),
        1e-10,
    )];
    let aniso = Lattice::new(rnsa_core::LatticeSpec::new([1.0, 2.0, 0.5], [8, 12, 8], 2.0 / 3.0))
        .expect("anisotropic lattice");
    checks.push(Check::at_most(
        "bilinear_vs_convolution_anisotropic",
        oracle_error(&aniso, 4, &[0.1], opts.flip_bilinear),
        1e-10,
    ));

    let (parseval, sobolev) = norm_errors(&l);
    checks.push(Check::at_most("parseval_norm0", parseval, 1e-12));
    checks.push(Check::at_most("sobolev_norm_direct_sum", sobolev, 1e-12));

    // inviscid, unforced: the alpha-energy is conserved
    let (alpha, f) = (0.1, 10.0);
    let p = SimParams::unforced(&l, 0.0, alpha, f).expect("valid parameters");
    let s0 = SimState::new(field(&l, 3, 0, 3.0, 1.0), 0.0);
    let mut inv = Invariants {
        alpha,
        f,
        max_div: 0.0,
        hermitian: true,
        max_pairing: 0.0,
    };
    let c = StepperConfig::fixed(1e-3);
    let end = run_observed(&s0, 0.2, &p, &c, Some(1e-2), &mut inv).expect("inviscid run");
    let e0 = alpha_energy(&s0.v, alpha);
    let drift = (alpha_energy(&end.v, alpha) - e0).abs() / e0;
    checks.push(Check::at_most("alpha_energy_drift", drift, 1e-6));
    checks.push(Check::at_most("coriolis_pairing", inv.max_pairing, 1e-12));
    checks.push(Check::at_most("divergence_residual", inv.max_div, 1e-12));
    checks.push(Check::at_least(
        "hermitian_symmetry",
        if inv.hermitian { 1.0 } else { 0.0 },
        1.0,
    ));

    checks.push(Check::at_least("temporal_order", temporal_order(&l), 3.7));
    let passed = checks.iter().all(|c| c.passed);
    VerifyReport { checks, passed }
}

/// Smallest observed convergence order over successive step halvings.
fn temporal_order(l: &Arc<Lattice>) -> f64 {
    let p = SimParams::new(0.5, 0.1, 5.0, field(l, 99, 0, 2.0, 2.0)).expect("valid parameters");
    let s0 = SimState::new(field(l, 13, 0, 3.0, 3.0), 0.0);
    let end = |dt: f64| {
        run(&s0, 0.4, &p, &StepperConfig::fixed(dt), None)
            .expect("forced run")
            .pop()
            .expect("final sample")
            .v
    };
    let reference = end(1.25e-3);
    let errs: Vec<f64> = [4e-2, 2e-2, 1e-2]
        .iter()
        .map(|&dt| end(dt).sub(&reference).sobolev_norm(0.0))
        .collect();
    errs.windows(2).map(|w| (w[0] / w[1]).log2()).fold(f64::INFINITY, f64::min)
}
