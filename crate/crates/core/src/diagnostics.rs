//! Measurements on trajectories: state norms and absorbing-ball tracking,
//! difference-trajectory records with the `delta(t)` and Gronwall chains,
//! the squeezing implication, Frechet remainder order and tail contraction
//! of the tangent flow.
//!
//! Time integrals use the trapezoid rule on the sampling grid. Every check
//! is made against constants measured on the same data or supplied by the
//! caller; nothing is assumed.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{
    run_observed, run_pair_observed, run_tangent_observed, Frame, Observer, PairSample, SimParams,
    SimState, StepperConfig,
};
use crate::operators::{helmholtz_inverse, projection_with, StokesSpectrum};
use crate::spectral::{random_divfree_field, SpectralField, SpectrumProfile};

/// Relative slack allowed for quadrature in the inequality checks.
pub const QUADRATURE_TOL: f64 = 1e-8;

/// Smallest admissible Sobolev order for the absorbing-ball estimates.
pub const BETA_MIN: f64 = 2.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateRecord {
    pub t: f64,
    pub norm0: f64,
    pub norm1: f64,
    pub norm_beta: f64,
    pub norm_beta_plus_1: f64,
    /// `<V, R_alpha V>`.
    pub alpha_energy: f64,
    pub div_residual: f64,
}

pub fn record_state(s: &SimState, p: &SimParams, beta: f64) -> StateRecord {
    if beta <= BETA_MIN {
        log::warn!("beta = {beta} is not above 5/2");
    }
    let v = &s.v;
    let filtered = helmholtz_inverse(v, p.alpha);
    StateRecord {
        t: s.t,
        norm0: v.sobolev_norm(0.0),
        norm1: v.sobolev_norm(1.0),
        norm_beta: v.sobolev_norm(beta),
        norm_beta_plus_1: v.sobolev_norm(beta + 1.0),
        alpha_energy: v.inner_product(&filtered, 0.0).expect("same lattice"),
        div_residual: v.divergence_residual(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbsorbingSummary {
    /// Supremum of `||V||_beta` after the transient.
    pub sup_beta: f64,
    /// Largest `nu * int_t^{t+window} ||V||_{beta+1}^2`.
    pub max_window_integral: f64,
    pub sup_norm0: f64,
    pub sup_norm1: f64,
    pub transient: f64,
    pub window: f64,
    pub samples_used: usize,
}

/// Cumulative trapezoid integral of `values` over `times`.
fn cumulative_trapezoid(times: &[f64], values: &[f64]) -> Vec<f64> {
    let mut acc = vec![0.0; times.len()];
    for i in 1..times.len() {
        acc[i] = acc[i - 1] + 0.5 * (values[i] + values[i - 1]) * (times[i] - times[i - 1]);
    }
    acc
}

/// Absorbing-ball summary of the records at or after `transient`.
pub fn absorbing_check(
    traj: &[StateRecord],
    nu: f64,
    window: f64,
    transient: f64,
) -> Result<AbsorbingSummary> {
    if !(window > 0.0) {
        return Err(Error::InvalidArgument(format!("window must be positive, got {window}")));
    }
    let kept: Vec<&StateRecord> = traj.iter().filter(|r| r.t >= transient).collect();
    let span = match (kept.first(), kept.last()) {
        (Some(a), Some(b)) => b.t - a.t,
        _ => 0.0,
    };
    let slack = 1e-9 * window;
    if kept.len() < 2 || span + slack < window {
        return Err(Error::TrajectoryTooShort { span, window });
    }
    let times: Vec<f64> = kept.iter().map(|r| r.t).collect();
    let sq: Vec<f64> = kept.iter().map(|r| r.norm_beta_plus_1 * r.norm_beta_plus_1).collect();
    let acc = cumulative_trapezoid(&times, &sq);
    let mut best = f64::NEG_INFINITY;
    let mut j = 0;
    for i in 0..times.len() {
        while j < times.len() && times[j] - times[i] < window - slack {
            j += 1;
        }
        if j == times.len() {
            break;
        }
        if (times[j] - times[i] - window).abs() <= slack {
            best = best.max(nu * (acc[j] - acc[i]));
        }
    }
    if best == f64::NEG_INFINITY {
        return Err(Error::InvalidArgument(format!(
            "window {window} is not a whole number of sampling intervals"
        )));
    }
    let sup = |f: fn(&StateRecord) -> f64| kept.iter().map(|r| f(r)).fold(0.0, f64::max);
    Ok(AbsorbingSummary {
        sup_beta: sup(|r| r.norm_beta),
        max_window_integral: best,
        sup_norm0: sup(|r| r.norm0),
        sup_norm1: sup(|r| r.norm1),
        transient,
        window,
        samples_used: kept.len(),
    })
}

/// `delta(t) = exp(-nu int_{t0}^t lambda + (K1/nu^3)(t - t0))` from a sampled
/// `(time, lambda)` history starting at `t0`; linear interpolation inside
/// the last interval.
pub fn delta_of_t(history: &[(f64, f64)], k1: f64, nu: f64, t: f64) -> Result<f64> {
    let (start, end) = match (history.first(), history.last()) {
        (Some(a), Some(b)) => (a.0, b.0),
        _ => return Err(Error::InsufficientHistory { start: f64::NAN, end: f64::NAN, t }),
    };
    let slack = 1e-12 * (end - start).abs().max(1.0);
    if t < start - slack || t > end + slack {
        return Err(Error::InsufficientHistory { start, end, t });
    }
    let mut integral = 0.0;
    for w in history.windows(2) {
        let ((ta, la), (tb, lb)) = (w[0], w[1]);
        if t <= ta {
            break;
        }
        if t >= tb {
            integral += 0.5 * (la + lb) * (tb - ta);
        } else {
            let lt = la + (lb - la) * (t - ta) / (tb - ta);
            integral += 0.5 * (la + lt) * (t - ta);
        }
    }
    let growth = if k1 == 0.0 { 0.0 } else { k1 / nu.powi(3) * (t - start) };
    Ok((-nu * integral + growth).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub t: f64,
    pub w_norm0: f64,
    pub w_norm1: f64,
    pub w_norm_beta: f64,
    /// `||W||_1^2 / |W|_0^2`, zero for `W = 0`.
    pub lambda: f64,
    /// `delta(t)` with the empirical `K1` of the run.
    pub delta_pred: f64,
    pub low_norm0: f64,
    pub high_norm0: f64,
    /// `d/dt |W|^2 = 2 <dW/dt, W>` from the difference equation.
    pub w_growth: f64,
    /// Relative mismatch between the difference-equation derivative and
    /// the difference of the members' derivatives.
    pub eq73_residual: f64,
    pub va_norm_beta: f64,
    pub vb_norm_beta_plus_1: f64,
}

/// Record of one pair sample, with `delta_pred` left at zero.
pub fn pair_record(
    s: &PairSample,
    beta: f64,
    spectrum: &StokesSpectrum,
    n0: usize,
) -> PairRecord {
    let w = &s.w;
    let n0w = w.sobolev_norm(0.0);
    let n1w = w.sobolev_norm(1.0);
    let split = projection_with(w, spectrum, n0);
    let direct = s.w_dot_direct.sobolev_norm(0.0);
    let mismatch = s.w_dot.sub(&s.w_dot_direct).sobolev_norm(0.0);
    PairRecord {
        t: s.t,
        w_norm0: n0w,
        w_norm1: n1w,
        w_norm_beta: w.sobolev_norm(beta),
        lambda: if n0w > 0.0 { (n1w / n0w).powi(2) } else { 0.0 },
        delta_pred: 0.0,
        low_norm0: split.low.sobolev_norm(0.0),
        high_norm0: split.high.sobolev_norm(0.0),
        w_growth: 2.0 * s.w_dot.inner_product(w, 0.0).expect("same lattice"),
        eq73_residual: if direct > 0.0 { mismatch / direct } else { mismatch },
        va_norm_beta: s.va.sobolev_norm(beta),
        vb_norm_beta_plus_1: s.vb.sobolev_norm(beta + 1.0),
    }
}

/// `nu^3 max_t (d/dt|W|^2 + nu ||W||^2) / |W|^2` over samples with `W != 0`.
pub fn empirical_k1(records: &[PairRecord], nu: f64) -> Option<f64> {
    records
        .iter()
        .filter(|r| r.w_norm0 > 0.0)
        .map(|r| nu.powi(3) * (r.w_growth + nu * r.w_norm1 * r.w_norm1) / (r.w_norm0 * r.w_norm0))
        .reduce(f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GronwallReport {
    pub c1: f64,
    pub c2: f64,
    /// Largest `||W(t)||_beta^2 / (||W(0)||_beta^2 exp(int 2 G))`.
    pub max_ratio: f64,
    /// `max(0, max_ratio - 1)`.
    pub max_violation: f64,
    /// Samples whose ratio exceeds `1 + QUADRATURE_TOL`.
    pub violations: usize,
}

/// Gronwall bound `||W(t)||_beta^2 <= ||W(0)||_beta^2 exp(int_0^t 2G)`,
/// `G = c1 ||V_a||_beta + c2 ||V_b||_{beta+1}`, with `beta` the order the
/// records were taken at.
pub fn gronwall_check(records: &[PairRecord], c1: f64, c2: f64) -> GronwallReport {
    let mut report = GronwallReport {
        c1,
        c2,
        max_ratio: 0.0,
        max_violation: 0.0,
        violations: 0,
    };
    let Some(first) = records.first() else {
        return report;
    };
    let times: Vec<f64> = records.iter().map(|r| r.t).collect();
    let g: Vec<f64> = records
        .iter()
        .map(|r| 2.0 * (c1 * r.va_norm_beta + c2 * r.vb_norm_beta_plus_1))
        .collect();
    let acc = cumulative_trapezoid(&times, &g);
    let w0 = first.w_norm_beta * first.w_norm_beta;
    for (r, a) in records.iter().zip(&acc) {
        let w = r.w_norm_beta * r.w_norm_beta;
        let ratio = if w == 0.0 {
            0.0
        } else if w0 == 0.0 {
            f64::INFINITY
        } else {
            // log space keeps large exponents finite
            ((w / w0).ln() - a).exp()
        };
        report.max_ratio = report.max_ratio.max(ratio);
        if ratio > 1.0 + QUADRATURE_TOL {
            report.violations += 1;
        }
    }
    report.max_violation = (report.max_ratio - 1.0).max(0.0);
    report
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaReport {
    pub k1: f64,
    /// Largest `ln(|W(t)|^2 / (delta(t) |W(0)|^2))`.
    pub max_log_excess: f64,
    /// Samples with `|W(t)|^2 > delta(t) |W(0)|^2` beyond the tolerance.
    pub violations: usize,
    /// Largest excess of the integrated inequality over one sampling
    /// interval, relative to the size of the terms involved.
    pub max_interval_excess: f64,
    pub interval_violations: usize,
}

/// Fills `delta_pred` and checks the `delta(t)` chain with constant `k1`.
pub fn delta_check(records: &mut [PairRecord], k1: f64, nu: f64) -> DeltaReport {
    let mut report = DeltaReport {
        k1,
        max_log_excess: f64::NEG_INFINITY,
        violations: 0,
        max_interval_excess: f64::NEG_INFINITY,
        interval_violations: 0,
    };
    let history: Vec<(f64, f64)> = records.iter().map(|r| (r.t, r.lambda)).collect();
    let Some(first) = records.first().copied() else {
        return report;
    };
    let t0 = first.t;
    let w0 = first.w_norm0 * first.w_norm0;
    let times: Vec<f64> = history.iter().map(|h| h.0).collect();
    let lambdas: Vec<f64> = history.iter().map(|h| h.1).collect();
    let acc = cumulative_trapezoid(&times, &lambdas);
    let rate = k1 / nu.powi(3);
    for (i, r) in records.iter_mut().enumerate() {
        let log_delta = -nu * acc[i] + rate * (r.t - t0);
        r.delta_pred = log_delta.exp();
        let w = r.w_norm0 * r.w_norm0;
        if w == 0.0 || w0 == 0.0 {
            continue;
        }
        let excess = (w / w0).ln() - log_delta;
        report.max_log_excess = report.max_log_excess.max(excess);
        if excess > QUADRATURE_TOL * (1.0 + log_delta.abs()) {
            report.violations += 1;
        }
    }
    for i in 1..records.len() {
        let (a, b) = (&records[i - 1], &records[i]);
        if a.w_norm0 == 0.0 || b.w_norm0 == 0.0 {
            continue;
        }
        let lhs = 2.0 * (b.w_norm0 / a.w_norm0).ln();
        let dt = b.t - a.t;
        let rhs = -nu * 0.5 * (a.lambda + b.lambda) * dt + rate * dt;
        let scale = lhs.abs() + nu * 0.5 * (a.lambda + b.lambda) * dt + rate.abs() * dt;
        let excess = if scale > 0.0 { (lhs - rhs) / scale } else { 0.0 };
        report.max_interval_excess = report.max_interval_excess.max(excess);
        if excess > QUADRATURE_TOL {
            report.interval_violations += 1;
        }
    }
    report
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairConfig {
    pub beta: f64,
    /// Rank of the low-mode projection used for the split columns.
    pub n0: usize,
    /// Pairing constant for `||V_a||_beta ||W||_beta^2`.
    pub c1: f64,
    /// Product constant for `||W||_beta ||V_b||_{beta+1}`.
    pub c2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    pub records: Vec<PairRecord>,
    /// `None` when `W` vanishes at every sample.
    pub k1_empirical: Option<f64>,
    pub delta: DeltaReport,
    pub gronwall: GronwallReport,
    /// Samples with `lambda < lambda_1` (roundoff-relative).
    pub poincare_violations: usize,
    pub lambda1: f64,
    pub max_eq73_residual: f64,
}

impl PairReport {
    pub fn passed(&self) -> bool {
        self.delta.violations == 0
            && self.delta.interval_violations == 0
            && self.gronwall.violations == 0
            && self.poincare_violations == 0
    }
}

/// Runs a pair, records every sample and checks both inequality chains.
pub fn analyze_pair(
    sa0: &SimState,
    sb0: &SimState,
    duration: f64,
    p: &SimParams,
    c: &StepperConfig,
    sample_every: Option<f64>,
    cfg: &PairConfig,
) -> Result<PairReport> {
    let spectrum = StokesSpectrum::new(p.lattice());
    let mut records = Vec::new();
    run_pair_observed(sa0, sb0, duration, p, c, sample_every, |s| {
        records.push(pair_record(&s, cfg.beta, &spectrum, cfg.n0));
        Ok(())
    })?;
    Ok(assess_pair(records, p.nu, spectrum.lambda1(), cfg))
}

/// Checks for already recorded pair samples.
pub fn assess_pair(mut records: Vec<PairRecord>, nu: f64, lambda1: f64, cfg: &PairConfig) -> PairReport {
    let k1 = empirical_k1(&records, nu);
    let delta = delta_check(&mut records, k1.unwrap_or(0.0), nu);
    let gronwall = gronwall_check(&records, cfg.c1, cfg.c2);
    let poincare_violations = records
        .iter()
        .filter(|r| r.w_norm0 > 0.0 && r.lambda < lambda1 * (1.0 - 1e-12))
        .count();
    let max_eq73_residual = records.iter().map(|r| r.eq73_residual).fold(0.0, f64::max);
    PairReport {
        records,
        k1_empirical: k1,
        delta,
        gronwall,
        poincare_violations,
        lambda1,
        max_eq73_residual,
    }
}

/// Pair initial states `(base + a_i, base + b_i)` with independent seeded
/// divergence-free noise of `H^0` size `relative * |base|_0`.
pub fn perturbed_pairs(
    base: &SpectralField,
    count: usize,
    relative: f64,
    seed: u64,
    profile: &SpectrumProfile,
) -> Result<Vec<(SpectralField, SpectralField)>> {
    let size = relative * base.sobolev_norm(0.0);
    let profile = profile.with_norm0(size);
    (0..count as u64)
        .map(|i| {
            let a = random_divfree_field(seed, 2 * i, &profile, base.lattice())?;
            let b = random_divfree_field(seed, 2 * i + 1, &profile, base.lattice())?;
            Ok((base.add(&a), base.add(&b)))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezeEntry {
    /// `|(I - P) W(t*)|_0 >= |P W(t*)|_0`.
    pub high_dominates: bool,
    /// `|W(t*)|_0 / |W(0)|_0`, zero when `W(0) = 0`.
    pub contraction: f64,
    /// `||W(t*)||_1^2 / |W(t*)|_0^2`.
    pub lambda_star: f64,
    /// Whether the squeezing implication holds for this pair.
    pub holds: bool,
    /// `lambda_* > lambda_{N0+1} / 2`; `None` when the spectrum ends at N0.
    pub lemma_criterion: Option<bool>,
    /// Relative error of `|W|^2 = |P W|^2 + |(I - P) W|^2`.
    pub pythagorean_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SqueezeReport {
    pub entries: Vec<SqueezeEntry>,
    pub n0: usize,
    /// Rank actually used (whole eigenvalue shells).
    pub effective_rank: usize,
    pub delta: f64,
    pub t_star: f64,
    pub counterexamples: usize,
    /// One row per scanned rank.
    pub scan: Vec<SqueezeScanRow>,
    /// Smallest scanned rank with no counterexample among the pairs.
    pub minimal_n0: Option<usize>,
    pub lambda_star_min: f64,
    pub lambda_star_mean: f64,
    pub lambda_star_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezeScanRow {
    pub n0: usize,
    pub counterexamples: usize,
    pub high_dominated: usize,
    /// Pairs satisfying `lambda_* > lambda_{N0+1} / 2`.
    pub lemma_satisfied: usize,
}

struct Squeezed {
    w0: f64,
    w: SpectralField,
}

fn shell_energies(w: &SpectralField, spectrum: &StokesSpectrum) -> Vec<f64> {
    let l = w.lattice();
    let mut out = vec![0.0; spectrum.shells.len()];
    for &idx in l.retained_indices() {
        let ksq = l.ksq(idx);
        let weight = l.weight(idx);
        if ksq == 0.0 || weight == 0.0 {
            continue;
        }
        let pos = spectrum
            .shells
            .partition_point(|s| s.lambda < ksq && (s.lambda - ksq).abs() > 1e-12 * ksq);
        let e: f64 = w.at(idx).iter().map(|z| z.norm_sqr()).sum();
        let last = out.len() - 1;
        out[pos.min(last)] += weight * e;
    }
    out
}

/// Squeezing implication at rank `n0` for every pair advanced to `t_star`,
/// plus a scan over `scan` ranks (rounded up to whole shells).
pub fn squeezing_check(
    pairs: &[(SpectralField, SpectralField)],
    t_star: f64,
    n0: usize,
    delta: f64,
    p: &SimParams,
    c: &StepperConfig,
    scan: &[usize],
) -> Result<SqueezeReport> {
    if !(delta > 0.0 && delta < 0.25) {
        log::warn!("squeezing factor delta = {delta} lies outside (0, 1/4)");
    }
    let spectrum = StokesSpectrum::new(p.lattice());
    let runs: Vec<Squeezed> = pairs
        .par_iter()
        .map(|(u, v)| {
            let (a, b) = run_pair_observed(
                &SimState::new(u.clone(), 0.0),
                &SimState::new(v.clone(), 0.0),
                t_star,
                p,
                c,
                None,
                |_| Ok(()),
            )?;
            Ok(Squeezed {
                w0: u.sub(v).sobolev_norm(0.0),
                w: a.v.sub(&b.v),
            })
        })
        .collect::<Result<_>>()?;

    let lambda_next = |rank: usize| spectrum.next_after(rank).ok();
    let (_, effective_rank) = spectrum.shell_cut(n0);
    let entries: Vec<SqueezeEntry> = runs
        .iter()
        .map(|r| {
            let split = projection_with(&r.w, &spectrum, n0);
            let total = r.w.sobolev_norm(0.0);
            let (low, high) = (split.low.sobolev_norm(0.0), split.high.sobolev_norm(0.0));
            let pyth = if total > 0.0 {
                (total * total - low * low - high * high).abs() / (total * total)
            } else {
                0.0
            };
            let contraction = if r.w0 > 0.0 { total / r.w0 } else { 0.0 };
            let high_dominates = high >= low;
            let lambda_star = if total > 0.0 {
                (r.w.sobolev_norm(1.0) / total).powi(2)
            } else {
                0.0
            };
            SqueezeEntry {
                high_dominates,
                contraction,
                lambda_star,
                holds: !high_dominates || total <= delta * r.w0,
                lemma_criterion: lambda_next(effective_rank).map(|l| lambda_star > 0.5 * l),
                pythagorean_error: pyth,
            }
        })
        .collect();

    let energies: Vec<Vec<f64>> = runs.iter().map(|r| shell_energies(&r.w, &spectrum)).collect();
    let mut rows = Vec::with_capacity(scan.len());
    for &rank in scan {
        let (_, eff) = spectrum.shell_cut(rank);
        let shells = spectrum.shells.iter().take_while(|s| s.cumulative <= eff).count();
        let mut row = SqueezeScanRow {
            n0: eff,
            counterexamples: 0,
            high_dominated: 0,
            lemma_satisfied: 0,
        };
        for ((r, e), entry) in runs.iter().zip(&energies).zip(&entries) {
            let low: f64 = e[..shells].iter().sum();
            let high: f64 = e[shells..].iter().sum();
            let dominated = high >= low;
            let total = (low + high).sqrt();
            if dominated {
                row.high_dominated += 1;
                if total > delta * r.w0 {
                    row.counterexamples += 1;
                }
            }
            if lambda_next(eff).is_some_and(|l| entry.lambda_star > 0.5 * l) {
                row.lemma_satisfied += 1;
            }
        }
        rows.push(row);
    }
    let minimal_n0 = rows.iter().filter(|r| r.counterexamples == 0).map(|r| r.n0).min();

    let stars: Vec<f64> = entries.iter().map(|e| e.lambda_star).collect();
    let count = stars.len().max(1) as f64;
    Ok(SqueezeReport {
        counterexamples: entries.iter().filter(|e| !e.holds).count(),
        n0,
        effective_rank,
        delta,
        t_star,
        scan: rows,
        minimal_n0,
        lambda_star_min: stars.iter().copied().reduce(f64::min).unwrap_or(0.0),
        lambda_star_mean: stars.iter().sum::<f64>() / count,
        lambda_star_max: stars.iter().copied().fold(0.0, f64::max),
        entries,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrechetReport {
    pub scales: Vec<f64>,
    /// `||phi(T)||_beta / eps` for each scale.
    pub ratios: Vec<f64>,
    pub remainders: Vec<f64>,
    /// Least-squares slope of `log ||phi|| ` against `log eps`.
    pub fitted_order: Option<f64>,
    pub indeterminate: bool,
    pub include_filter: bool,
    /// `||Z(T)||_beta` for the unit direction.
    pub tangent_norm: f64,
}

fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

pub fn validate_scales(scales: &[f64]) -> Result<()> {
    if scales.is_empty() {
        return Err(Error::InvalidArgument("scale list is empty".into()));
    }
    if scales.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
        return Err(Error::InvalidArgument("scales must be positive".into()));
    }
    if scales.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument("scales must be strictly decreasing".into()));
    }
    Ok(())
}

/// Frechet remainder `phi = S(V0 + eps d) - S(V0) - eps Z(T; d)` in `H^beta`.
#[allow(clippy::too_many_arguments)]
pub fn frechet_order(
    v0: &SimState,
    direction: &SpectralField,
    scales: &[f64],
    duration: f64,
    beta: f64,
    p: &SimParams,
    c: &StepperConfig,
    include_filter: bool,
) -> Result<FrechetReport> {
    validate_scales(scales)?;
    struct Last;
    impl Observer for Last {}
    let (base, z) = run_tangent_observed(v0, direction, duration, p, c, include_filter, None, &mut Last)?;
    let remainders: Vec<f64> = scales
        .par_iter()
        .map(|&eps| {
            let mut start = v0.v.clone();
            start.axpy(eps, direction);
            let moved = run_observed(&SimState::new(start, v0.t), duration, p, c, None, &mut Last)?;
            let mut phi = moved.v.sub(&base.v);
            phi.axpy(-eps, &z);
            Ok(phi.sobolev_norm(beta))
        })
        .collect::<Result<_>>()?;
    let ratios: Vec<f64> = remainders.iter().zip(scales).map(|(r, e)| r / e).collect();
    let indeterminate = scales.len() < 2 || remainders.iter().any(|&r| r == 0.0);
    let fitted_order = (!indeterminate).then(|| {
        let x: Vec<f64> = scales.iter().map(|e| e.ln()).collect();
        let y: Vec<f64> = remainders.iter().map(|r| r.ln()).collect();
        least_squares_slope(&x, &y)
    });
    Ok(FrechetReport {
        scales: scales.to_vec(),
        ratios,
        remainders,
        fitted_order,
        indeterminate,
        include_filter,
        tangent_norm: z.sobolev_norm(beta),
    })
}

/// Relative `H^beta` mismatch between the tangent solution `Z(T; d)` and the
/// central difference `(S(V0 + eps d) - S(V0 - eps d)) / (2 eps)`.
#[allow(clippy::too_many_arguments)]
pub fn finite_difference_error(
    v0: &SimState,
    direction: &SpectralField,
    eps: f64,
    duration: f64,
    beta: f64,
    p: &SimParams,
    c: &StepperConfig,
    include_filter: bool,
) -> Result<f64> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    struct Last;
    impl Observer for Last {}
    let (_, z) = run_tangent_observed(v0, direction, duration, p, c, include_filter, None, &mut Last)?;
    let ends: Vec<SpectralField> = [eps, -eps]
        .par_iter()
        .map(|&e| {
            let mut start = v0.v.clone();
            start.axpy(e, direction);
            Ok(run_observed(&SimState::new(start, v0.t), duration, p, c, None, &mut Last)?.v)
        })
        .collect::<Result<_>>()?;
    let mut fd = ends[0].sub(&ends[1]);
    fd.scale(0.5 / eps);
    let size = z.sobolev_norm(beta);
    let err = fd.sub(&z).sobolev_norm(beta);
    Ok(if size > 0.0 { err / size } else { err })
}

/// Unit-`H^0` random probe directions over every retained mode.
pub fn unit_probes(lattice: &std::sync::Arc<crate::spectral::Lattice>, probes: usize, seed: u64) -> Result<Vec<SpectralField>> {
    let kmax = crate::spectral::max_retained_shell(lattice);
    let profile = SpectrumProfile::band(0.0, kmax).with_norm0(1.0);
    (0..probes as u64)
        .map(|i| random_divfree_field(seed, i, &profile, lattice))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    /// Requested rank.
    pub n: usize,
    /// Rank rounded up to whole shells.
    pub effective_rank: usize,
    pub estimate: f64,
}

/// `max_probe |(I - P_N) Z(t*)|_0 / |Z(0)|_0` for every rank in `ranks`.
pub fn tail_contraction_table(
    v0: &SimState,
    t_star: f64,
    ranks: &[usize],
    probes: &[SpectralField],
    p: &SimParams,
    c: &StepperConfig,
) -> Result<Vec<TailRow>> {
    if probes.is_empty() {
        return Err(Error::InvalidArgument("at least one probe is required".into()));
    }
    struct Last;
    impl Observer for Last {}
    let spectrum = StokesSpectrum::new(p.lattice());
    let finals: Vec<(SpectralField, f64)> = probes
        .par_iter()
        .map(|z0| {
            let (_, z) = run_tangent_observed(v0, z0, t_star, p, c, true, None, &mut Last)?;
            Ok((z, z0.sobolev_norm(0.0)))
        })
        .collect::<Result<_>>()?;
    Ok(ranks
        .iter()
        .map(|&n| {
            let (_, eff) = spectrum.shell_cut(n);
            let estimate = finals
                .iter()
                .filter(|(_, size)| *size > 0.0)
                .map(|(z, size)| projection_with(z, &spectrum, n).high.sobolev_norm(0.0) / size)
                .fold(0.0, f64::max);
            TailRow {
                n,
                effective_rank: eff,
                estimate,
            }
        })
        .collect())
}

/// Lower estimate of `||(I - P_N) D S(t*)||` from seeded random probes.
pub fn tail_contraction(
    v0: &SimState,
    t_star: f64,
    n: usize,
    probes: usize,
    seed: u64,
    p: &SimParams,
    c: &StepperConfig,
) -> Result<f64> {
    if probes == 0 {
        return Err(Error::InvalidArgument("at least one probe is required".into()));
    }
    let dirs = unit_probes(p.lattice(), probes, seed)?;
    Ok(tail_contraction_table(v0, t_star, &[n], &dirs, p, c)?[0].estimate)
}

/// Records every sample of a single run.
pub struct StateRecorder<'a> {
    pub p: &'a SimParams,
    pub beta: f64,
    pub records: Vec<StateRecord>,
}

impl Observer for StateRecorder<'_> {
    fn sample(&mut self, frame: &Frame<'_>) -> Result<()> {
        let s = SimState::new(frame.fields[0].clone(), frame.t);
        self.records.push(record_state(&s, self.p, self.beta));
        Ok(())
    }
}
