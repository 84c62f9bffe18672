//! Experiment subcommands. Each `cmd_*` writes its files into the output
//! directory and returns an [`Outcome`]; the `*_analysis` functions do the
//! work without touching the file system.

use std::path::{Path, PathBuf};

use rnsa_core::bounds::{
    attraction_rate, c4, c5, compute_k, dimension_bound, estimate, explicit_n0, lipschitz_bound, min_n0,
    squeeze_time, BoundsInput,
};
use rnsa_core::diagnostics::{
    absorbing_check, analyze_pair, finite_difference_error, frechet_order, perturbed_pairs, squeezing_check,
    tail_contraction_table, unit_probes, AbsorbingSummary, FrechetReport, PairConfig, PairReport, SqueezeReport,
    StateRecord, StateRecorder, TailRow,
};
use rnsa_core::integrator::{run_observed, Frame, Observer};
use rnsa_core::operators::{estimate_bilinear_constants, ConstantsConfig, StokesSpectrum};
use rnsa_core::{SimState, SpectralField};
use serde::{Deserialize, Serialize};

use crate::checkpoint::{read_checkpoint, write_checkpoint, CheckpointParams};
use crate::config::{BoundsMode, CoriolisVariant, ExperimentConfig, TimeSpec};
use crate::output::{io_error, OutputDir};
use crate::setup::{stream, Setup};
use crate::CliError;

/// Stand-in for the invariant set, stated in every report that uses it.
pub const INVARIANT_SET_NOTE: &str = "invariant set approximated by post-transient trajectory samples";

pub const DEFAULT_OUT: &str = "rnsa-out";

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub resume: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub passed: bool,
    pub summary: String,
}

fn open_output(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<OutputDir, CliError> {
    let dir = opts
        .out
        .clone()
        .or_else(|| cfg.out.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let out = OutputDir::create(dir, cfg.hash())?;
    out.write_text("effective_config.toml", &cfg.to_toml())?;
    Ok(out)
}

fn checkpoint_params(setup: &Setup) -> CheckpointParams {
    CheckpointParams {
        nu: setup.params.nu,
        alpha: setup.params.alpha,
        f: setup.params.f,
    }
}

// ---------------------------------------------------------------- simulate

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlowUpInfo {
    pub t: f64,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulateReport {
    pub start_time: f64,
    pub final_time: f64,
    pub samples: usize,
    pub blow_up: Option<BlowUpInfo>,
    pub absorbing: Option<AbsorbingSummary>,
    pub absorbing_error: Option<String>,
    pub invariant_set: String,
}

pub struct SimulateResult {
    pub records: Vec<StateRecord>,
    /// Final state, or the last sampled state before a blow-up.
    pub last: SimState,
    pub report: SimulateReport,
}

struct Tracker<'a> {
    rec: StateRecorder<'a>,
    last: Option<SimState>,
}

impl Observer for Tracker<'_> {
    fn sample(&mut self, frame: &Frame<'_>) -> rnsa_core::Result<()> {
        self.rec.sample(frame)?;
        self.last = Some(SimState::new(frame.fields[0].clone(), frame.t));
        Ok(())
    }
}

/// Starting state of `simulate`: the configured initial field or a
/// checkpoint matching the configuration.
pub fn start_state(setup: &Setup, resume: Option<&Path>) -> Result<SimState, CliError> {
    let Some(path) = resume else {
        return setup.initial_state();
    };
    let ck = read_checkpoint(path)?;
    if !ck.state.v.lattice().same_geometry(&setup.lattice) {
        return Err(CliError::Usage(format!(
            "checkpoint {} was written on a different lattice",
            path.display()
        )));
    }
    let want = checkpoint_params(setup);
    let same = |a: f64, b: f64| a.to_bits() == b.to_bits();
    if !(same(ck.params.nu, want.nu) && same(ck.params.alpha, want.alpha) && same(ck.params.f, want.f)) {
        return Err(CliError::Usage(format!(
            "checkpoint {} has nu, alpha, f = {}, {}, {}; the config has {}, {}, {}",
            path.display(),
            ck.params.nu,
            ck.params.alpha,
            ck.params.f,
            want.nu,
            want.alpha,
            want.f
        )));
    }
    Ok(ck.state)
}

pub fn simulate_analysis(setup: &Setup, s0: SimState) -> Result<SimulateResult, CliError> {
    let cfg = &setup.cfg;
    let duration = cfg.run.t_final - s0.t;
    if duration < 0.0 {
        return Err(CliError::Usage(format!(
            "run.t_final = {} lies before the start time {}",
            cfg.run.t_final, s0.t
        )));
    }
    let mut obs = Tracker {
        rec: StateRecorder {
            p: &setup.params,
            beta: cfg.run.beta,
            records: Vec::new(),
        },
        last: None,
    };
    let start_time = s0.t;
    let run = run_observed(&s0, duration, &setup.params, &setup.stepper, Some(cfg.sample_every()), &mut obs);
    let (last, blow_up) = match run {
        Ok(s) => (s, None),
        Err(rnsa_core::Error::BlowUp { t, reason }) => {
            let last = obs.last.clone().unwrap_or(s0);
            (last, Some(BlowUpInfo { t, reason }))
        }
        Err(e) => return Err(e.into()),
    };
    let records = obs.rec.records;
    let (absorbing, absorbing_error) =
        match absorbing_check(&records, setup.params.nu, cfg.run.window, cfg.run.transient) {
            Ok(a) => (Some(a), None),
            Err(e) => (None, Some(e.to_string())),
        };
    let report = SimulateReport {
        start_time,
        final_time: last.t,
        samples: records.len(),
        blow_up,
        absorbing,
        absorbing_error,
        invariant_set: INVARIANT_SET_NOTE.into(),
    };
    Ok(SimulateResult { records, last, report })
}

pub fn cmd_simulate(cfg: ExperimentConfig, opts: &RunOptions) -> Result<Outcome, CliError> {
    let setup = Setup::new(cfg)?;
    let s0 = start_state(&setup, opts.resume.as_deref())?;
    let out = open_output(&setup.cfg, opts)?;
    let res = simulate_analysis(&setup, s0)?;
    let files = vec![
        out.write_csv("trajectory.csv", &res.records)?,
        {
            let path = out.path("final.ckpt");
            write_checkpoint(&path, &res.last, checkpoint_params(&setup))?;
            path
        },
        out.write_report("absorbing.json", "simulate", &res.report)?,
    ];
    if let Some(b) = &res.report.blow_up {
        return Err(CliError::BlowUp {
            t: b.t,
            reason: format!("{}; last valid sample at t = {} saved", b.reason, res.last.t),
        });
    }
    Ok(Outcome {
        files,
        passed: true,
        summary: format!("{} samples up to t = {}", res.records.len(), res.last.t),
    })
}

// -------------------------------------------------------------------- pair

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairSummary {
    pub transient: f64,
    pub duration: f64,
    pub perturbation: f64,
    pub beta: f64,
    pub n0: usize,
    pub c1: f64,
    pub c2: f64,
    /// `"config"` or `"estimated"`.
    pub constants_source: String,
    pub k1_empirical: Option<f64>,
    pub delta: rnsa_core::diagnostics::DeltaReport,
    pub gronwall: rnsa_core::diagnostics::GronwallReport,
    pub poincare_violations: usize,
    pub lambda1: f64,
    pub max_eq73_residual: f64,
    pub passed: bool,
    pub invariant_set: String,
}

/// Gronwall constants `(c1, c2, source)` at `s = beta`: the configured values
/// or the empirical bilinear constants `D` and `C`.
pub fn gronwall_constants(setup: &Setup) -> Result<(f64, f64, &'static str), CliError> {
    let pr = &setup.cfg.pair;
    if let (Some(c1), Some(c2)) = (pr.c1, pr.c2) {
        return Ok((c1, c2, "config"));
    }
    let cc = ConstantsConfig::new(
        setup.cfg.run.beta,
        setup.params.alpha,
        pr.constant_samples,
        setup.seed(stream::CONSTANTS),
    );
    let k = estimate_bilinear_constants(&setup.lattice, &cc)?;
    Ok((pr.c1.unwrap_or(k.d_emp), pr.c2.unwrap_or(k.c_emp), "estimated"))
}

/// Pair initial states around `base`: stream `PAIRS`, `count` pairs.
pub fn pair_starts(
    setup: &Setup,
    base: &SpectralField,
    count: usize,
    relative: f64,
) -> Result<Vec<(SpectralField, SpectralField)>, CliError> {
    Ok(perturbed_pairs(base, count, relative, setup.seed(stream::PAIRS), &setup.full_band())?)
}

pub fn pair_analysis(setup: &Setup) -> Result<(PairReport, PairSummary), CliError> {
    let pr = &setup.cfg.pair;
    let base = setup.after_transient(pr.transient)?;
    let (c1, c2, source) = gronwall_constants(setup)?;
    let (a, b) = pair_starts(setup, &base.v, 1, pr.perturbation)?.pop().expect("one pair");
    let pcfg = PairConfig {
        beta: setup.cfg.run.beta,
        n0: pr.n0,
        c1,
        c2,
    };
    let report = analyze_pair(
        &SimState::new(a, base.t),
        &SimState::new(b, base.t),
        pr.duration,
        &setup.params,
        &setup.stepper,
        Some(pr.sample_every.unwrap_or(setup.stepper.dt)),
        &pcfg,
    )?;
    let summary = PairSummary {
        transient: pr.transient,
        duration: pr.duration,
        perturbation: pr.perturbation,
        beta: pcfg.beta,
        n0: pr.n0,
        c1,
        c2,
        constants_source: source.into(),
        k1_empirical: report.k1_empirical,
        delta: report.delta,
        gronwall: report.gronwall,
        poincare_violations: report.poincare_violations,
        lambda1: report.lambda1,
        max_eq73_residual: report.max_eq73_residual,
        passed: report.passed(),
        invariant_set: INVARIANT_SET_NOTE.into(),
    };
    Ok((report, summary))
}

pub fn cmd_pair(cfg: ExperimentConfig, opts: &RunOptions) -> Result<Outcome, CliError> {
    let setup = Setup::new(cfg)?;
    let out = open_output(&setup.cfg, opts)?;
    let (report, summary) = pair_analysis(&setup)?;
    let files = vec![
        out.write_csv("pair.csv", &report.records)?,
        out.write_report("pair_report.json", "pair", &summary)?,
    ];
    Ok(Outcome {
        files,
        passed: summary.passed,
        summary: format!(
            "{} samples; delta violations {}, Gronwall violations {}, Poincare violations {}",
            report.records.len(),
            summary.delta.violations + summary.delta.interval_violations,
            summary.gronwall.violations,
            summary.poincare_violations
        ),
    })
}

// ------------------------------------------------------------------ bounds

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundsReport {
    /// `"manual"` or `"measured"`.
    pub source: String,
    pub measured_from: Option<String>,
    pub input: BoundsInput,
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub c4: f64,
    pub c5: f64,
    pub t_star: f64,
    pub l_star: f64,
    pub n0_explicit: f64,
    pub rate_c: f64,
    pub rate_exponent: f64,
    /// Lattice search for the smallest `N0` with `delta(t*) < 1/8`; absent
    /// when the lattice spectrum is exhausted first.
    pub n0_min: Option<usize>,
    pub delta_star: Option<f64>,
    pub db_bound: Option<f64>,
    pub db_bound_continuous: Option<f64>,
    pub n0_search_error: Option<String>,
}

/// Absorbing radii `(rho_H, rho_V)` from a `simulate` report.
pub fn measured_radii(path: &Path) -> Result<(f64, f64), CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::Usage(format!(
            "bounds: measured mode needs a prior simulate run ({}: {e})",
            path.display()
        ))
    })?;
    let report: SimulateReport = serde_json::from_str(&text).map_err(|e| io_error(path, e))?;
    let a = report.absorbing.ok_or_else(|| {
        CliError::Usage(format!(
            "bounds: {} has no absorbing summary ({})",
            path.display(),
            report.absorbing_error.unwrap_or_default()
        ))
    })?;
    Ok((a.sup_norm0, a.sup_norm1))
}

pub fn bounds_input(setup: &Setup, radii: (f64, f64)) -> BoundsInput {
    let b = &setup.cfg.bounds;
    let mut input = BoundsInput {
        nu: setup.params.nu,
        rho_h: radii.0,
        rho_v: radii.1,
        lambda1: 0.0,
        constants: b.constants(),
        theta: b.theta,
        spectrum: None,
    }
    .with_spectrum(StokesSpectrum::new(&setup.lattice));
    if let Some(l1) = b.lambda1 {
        input.lambda1 = l1;
    }
    input
}

pub fn bounds_analysis(input: &BoundsInput, source: &str, measured_from: Option<String>) -> Result<BoundsReport, CliError> {
    input.validate()?;
    let (k1, k2, k3) = compute_k(input);
    let t_star = squeeze_time(input)?;
    let l_star = lipschitz_bound(input)?;
    let (rate_c, rate_exponent) = attraction_rate(input, t_star)?;
    let mut report = BoundsReport {
        source: source.into(),
        measured_from,
        input: input.clone(),
        k1,
        k2,
        k3,
        c4: c4(input),
        c5: c5(input),
        t_star,
        l_star,
        n0_explicit: explicit_n0(input),
        rate_c,
        rate_exponent,
        n0_min: None,
        delta_star: None,
        db_bound: None,
        db_bound_continuous: None,
        n0_search_error: None,
    };
    match min_n0(input) {
        Ok(m) => {
            let (db, dbc) = dimension_bound(m.search, l_star, m.delta_at_search, input.theta)?;
            debug_assert_eq!(estimate(input).map(|e| e.n0_min).ok(), Some(m.search));
            report.n0_min = Some(m.search);
            report.delta_star = Some(m.delta_at_search);
            report.db_bound = Some(db);
            report.db_bound_continuous = Some(dbc);
        }
        Err(e @ rnsa_core::Error::SpectrumExhausted { .. }) => report.n0_search_error = Some(e.to_string()),
        Err(e) => return Err(e.into()),
    }
    Ok(report)
}

/// Bounds from the configuration; measured mode reads `bounds.measured_from`
/// or the `absorbing.json` of the output directory.
pub fn bounds_from_config(setup: &Setup, out_dir: &Path) -> Result<BoundsReport, CliError> {
    let b = &setup.cfg.bounds;
    match b.mode {
        BoundsMode::Manual => bounds_analysis(&bounds_input(setup, (b.rho_h, b.rho_v)), "manual", None),
        BoundsMode::Measured => {
            let path = b
                .measured_from
                .as_ref()
                .map(PathBuf::from)
                .unwrap_or_else(|| out_dir.join("absorbing.json"));
            let radii = measured_radii(&path)?;
            bounds_analysis(&bounds_input(setup, radii), "measured", Some(path.display().to_string()))
        }
    }
}

fn output_dir_path(cfg: &ExperimentConfig, opts: &RunOptions) -> PathBuf {
    opts.out
        .clone()
        .or_else(|| cfg.out.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

pub fn cmd_bounds(cfg: ExperimentConfig, opts: &RunOptions) -> Result<Outcome, CliError> {
    let setup = Setup::new(cfg)?;
    let report = bounds_from_config(&setup, &output_dir_path(&setup.cfg, opts))?;
    let out = open_output(&setup.cfg, opts)?;
    let files = vec![out.write_report("bounds.json", "bounds", &report)?];
    Ok(Outcome {
        files,
        passed: true,
        summary: format!(
            "t* = {:e}, N0 = {}, dimension bound = {}",
            report.t_star,
            report.n0_min.map_or("none".into(), |n| n.to_string()),
            report.db_bound.map_or("none".into(), |d| format!("{d:e}"))
        ),
    })
}

// ----------------------------------------------------------------- squeeze

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SqueezeSummary {
    pub pairs: usize,
    pub transient: f64,
    pub perturbation: f64,
    pub t_star: f64,
    /// `"config"` or `"bounds"`.
    pub t_star_source: String,
    pub bounds: Option<BoundsReport>,
    /// `"config"`, `"bounds"` or `"full-rank"`.
    pub n0_source: String,
    pub lambda1: f64,
    /// Entries with `0 < lambda(t*) < lambda_1`.
    pub poincare_violations: usize,
    pub passed: bool,
    pub report: SqueezeReport,
    pub invariant_set: String,
}

/// Radii over the second half of a sampled transient.
fn transient_radii(records: &[StateRecord], transient: f64) -> (f64, f64) {
    records
        .iter()
        .filter(|r| r.t >= 0.5 * transient)
        .fold((0.0, 0.0), |(h, v), r| (f64::max(h, r.norm0), f64::max(v, r.norm1)))
}

pub fn squeeze_analysis(setup: &Setup, out_dir: &Path) -> Result<SqueezeSummary, CliError> {
    let cfg = &setup.cfg;
    let sq = &cfg.squeeze;
    let s0 = setup.initial_state()?;
    let mut rec = StateRecorder {
        p: &setup.params,
        beta: cfg.run.beta,
        records: Vec::new(),
    };
    let base = run_observed(&s0, sq.transient, &setup.params, &setup.stepper, Some(cfg.sample_every()), &mut rec)?;

    let needs_bounds = matches!(sq.t_star, TimeSpec::Keyword(_)) || sq.n0.is_none();
    let bounds = if !needs_bounds {
        None
    } else if cfg.bounds.mode == BoundsMode::Measured && cfg.bounds.measured_from.is_none() {
        let input = bounds_input(setup, transient_radii(&rec.records, sq.transient));
        Some(bounds_analysis(&input, "measured", Some("squeeze transient".into()))?)
    } else {
        Some(bounds_from_config(setup, out_dir)?)
    };
    let (t_star, t_star_source) = match sq.t_star {
        TimeSpec::Value(t) => (t, "config"),
        TimeSpec::Keyword(_) => (bounds.as_ref().expect("bounds computed").t_star, "bounds"),
    };
    let spectrum = StokesSpectrum::new(&setup.lattice);
    let (n0, n0_source) = match (sq.n0, bounds.as_ref().and_then(|b| b.n0_min)) {
        (Some(n), _) => (n, "config"),
        (None, Some(n)) => (n, "bounds"),
        (None, None) => (spectrum.total_dof(), "full-rank"),
    };
    let scan = sq.n0_scan.clone().unwrap_or_else(|| spectrum.boundaries());
    let pairs = pair_starts(setup, &base.v, sq.pairs, sq.perturbation)?;
    // pairs restart the clock at zero: the system is autonomous
    let report = squeezing_check(&pairs, t_star, n0, sq.delta, &setup.params, &setup.stepper, &scan)?;
    let lambda1 = spectrum.lambda1();
    let poincare_violations = report
        .entries
        .iter()
        .filter(|e| e.lambda_star > 0.0 && e.lambda_star < lambda1 * (1.0 - 1e-12))
        .count();
    Ok(SqueezeSummary {
        pairs: sq.pairs,
        transient: sq.transient,
        perturbation: sq.perturbation,
        t_star,
        t_star_source: t_star_source.into(),
        bounds,
        n0_source: n0_source.into(),
        lambda1,
        poincare_violations,
        passed: report.minimal_n0.is_some() && poincare_violations == 0,
        report,
        invariant_set: INVARIANT_SET_NOTE.into(),
    })
}

pub fn cmd_squeeze(cfg: ExperimentConfig, opts: &RunOptions) -> Result<Outcome, CliError> {
    let setup = Setup::new(cfg)?;
    let out = open_output(&setup.cfg, opts)?;
    let summary = squeeze_analysis(&setup, &out.dir)?;
    let files = vec![
        out.write_csv("squeeze_scan.csv", &summary.report.scan)?,
        out.write_report("squeeze.json", "squeeze", &summary)?,
    ];
    Ok(Outcome {
        files,
        passed: summary.passed,
        summary: format!(
            "t* = {:e}; minimal empirical N0 = {}; counterexamples at N0 = {}: {}",
            summary.t_star,
            summary.report.minimal_n0.map_or("none".into(), |n| n.to_string()),
            summary.report.n0,
            summary.report.counterexamples
        ),
    })
}

// ----------------------------------------------------------------- tangent

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VariantReport {
    pub variant: CoriolisVariant,
    pub frechet: FrechetReport,
    pub fd_epsilon: f64,
    /// Relative `H^beta` error of the tangent solution against a central
    /// difference.
    pub fd_relative_error: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TangentSummary {
    pub transient: f64,
    pub duration: f64,
    pub beta: f64,
    pub direction_norm0: f64,
    pub variants: Vec<VariantReport>,
    pub tail_t_star: f64,
    pub probes: usize,
    pub tail: Vec<TailRow>,
}

pub fn tangent_analysis(setup: &Setup) -> Result<TangentSummary, CliError> {
    let cfg = &setup.cfg;
    let tg = &cfg.tangent;
    let base = setup.after_transient(tg.transient)?;
    let dir = setup.direction()?;
    let (p, c, beta) = (&setup.params, &setup.stepper, cfg.run.beta);
    let mut variants = Vec::new();
    for &variant in &tg.variants {
        let include = variant.include_filter();
        let frechet = frechet_order(&base, &dir, &tg.scales, tg.duration, beta, p, c, include)?;
        let fd = finite_difference_error(&base, &dir, tg.fd_epsilon, tg.duration, beta, p, c, include)?;
        variants.push(VariantReport {
            variant,
            frechet,
            fd_epsilon: tg.fd_epsilon,
            fd_relative_error: fd,
        });
    }
    let spectrum = StokesSpectrum::new(&setup.lattice);
    let ranks = tg.tail_ranks.clone().unwrap_or_else(|| spectrum.boundaries());
    let probes = unit_probes(&setup.lattice, tg.probes, setup.seed(stream::PROBES))?;
    let tail = tail_contraction_table(&base, tg.tail_t_star, &ranks, &probes, p, c)?;
    Ok(TangentSummary {
        transient: tg.transient,
        duration: tg.duration,
        beta,
        direction_norm0: dir.sobolev_norm(0.0),
        variants,
        tail_t_star: tg.tail_t_star,
        probes: tg.probes,
        tail,
    })
}

pub fn cmd_tangent(cfg: ExperimentConfig, opts: &RunOptions) -> Result<Outcome, CliError> {
    let setup = Setup::new(cfg)?;
    let out = open_output(&setup.cfg, opts)?;
    let summary = tangent_analysis(&setup)?;
    let files = vec![
        out.write_csv("tail.csv", &summary.tail)?,
        out.write_report("tangent.json", "tangent", &summary)?,
    ];
    let orders: Vec<String> = summary
        .variants
        .iter()
        .map(|v| match v.frechet.fitted_order {
            Some(o) => format!("{:?}: order {o:.3}", v.variant),
            None => format!("{:?}: indeterminate", v.variant),
        })
        .collect();
    Ok(Outcome {
        files,
        passed: true,
        summary: orders.join("; "),
    })
}
