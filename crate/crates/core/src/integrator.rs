//! Time integration: integrating-factor RK4 with the viscous term treated
//! exactly, for single trajectories, trajectory pairs, the joint
//! base/tangent-linear system and the direct difference equation.
//!
//! Every driver shares one step sequence. With a fixed step the sequence is
//! `floor(T/dt)` full steps plus one shortened step to land on `T`; samples
//! are taken every `sample_every / dt` steps, at the start and at the end.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{bilinear_pair_sum, coriolis_apply_with, helmholtz_inverse, Prepared, StokesSpectrum};
use crate::spectral::{Lattice, SpectralField};

/// Relative slack when deciding whether a time is a whole number of steps.
const STEP_SLACK: f64 = 1e-9;

/// Blow-up threshold as a multiple of the reference `H^0` scale.
pub const BLOWUP_FACTOR: f64 = 1e6;

#[derive(Debug, Clone)]
pub struct SimParams {
    pub nu: f64,
    pub alpha: f64,
    pub f: f64,
    pub forcing: SpectralField,
    /// Test hook: drop `B_alpha` everywhere (base and tangent equations).
    pub nonlinear: bool,
}

impl SimParams {
    /// Validates the parameters and cleans the forcing (dealiased,
    /// projected, Hermitian). `nu = 0` is accepted for inviscid checks.
    pub fn new(nu: f64, alpha: f64, f: f64, forcing: SpectralField) -> Result<Self> {
        if !(nu.is_finite() && nu >= 0.0) {
            return Err(Error::InvalidArgument(format!("viscosity must be >= 0, got {nu}")));
        }
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::InvalidArgument(format!("alpha must be >= 0, got {alpha}")));
        }
        if !f.is_finite() {
            return Err(Error::InvalidArgument(format!("Coriolis parameter must be finite, got {f}")));
        }
        if !forcing.is_finite() {
            return Err(Error::InvalidArgument("forcing has non-finite coefficients".into()));
        }
        let mut forcing = forcing.dealiased();
        forcing.leray_project_in_place();
        forcing.enforce_symmetry();
        Ok(Self {
            nu,
            alpha,
            f,
            forcing,
            nonlinear: true,
        })
    }

    pub fn unforced(lattice: &Arc<Lattice>, nu: f64, alpha: f64, f: f64) -> Result<Self> {
        Self::new(nu, alpha, f, SpectralField::zeros(lattice))
    }

    pub fn linear(mut self) -> Self {
        self.nonlinear = false;
        self
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        self.forcing.lattice()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub v: SpectralField,
    pub t: f64,
}

impl SimState {
    pub fn new(v: SpectralField, t: f64) -> Self {
        Self { v, t }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Scheme {
    #[default]
    #[serde(rename = "IFRK4", alias = "ifrk4")]
    IfRk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepperConfig {
    pub dt: f64,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default = "default_cfl_safety")]
    pub cfl_safety: f64,
    #[serde(default)]
    pub adapt: bool,
}

fn default_cfl_safety() -> f64 {
    0.5
}

impl StepperConfig {
    pub fn fixed(dt: f64) -> Self {
        Self {
            dt,
            scheme: Scheme::IfRk4,
            cfl_safety: default_cfl_safety(),
            adapt: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidArgument(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "cfl_safety must lie in (0, 1], got {}",
                self.cfl_safety
            )));
        }
        Ok(())
    }
}

impl Default for StepperConfig {
    fn default() -> Self {
        Self::fixed(1e-3)
    }
}

/// `F - f P J P R V - B(V, V)`: everything but the viscous term.
fn forcing_terms(v: &SpectralField, prep: Option<&Prepared>, p: &SimParams) -> SpectralField {
    let mut out = p.forcing.clone();
    if p.f != 0.0 {
        out.axpy(-1.0, &coriolis_apply_with(v, p.f, p.alpha, true));
    }
    if let Some(prep) = prep {
        out.axpy(-1.0, &prep.bilinear_self());
    }
    out
}

fn viscous(v: &SpectralField, nu: f64) -> SpectralField {
    let mut out = v.clone();
    out.apply_table(v.lattice().ksq_table());
    out.scale(nu);
    out
}

/// Right-hand side `F - nu A V - f P J P R V - B(V, V)`.
pub fn rhs(v: &SpectralField, p: &SimParams) -> SpectralField {
    let prep = p.nonlinear.then(|| Prepared::new(v, p.alpha));
    let mut out = forcing_terms(v, prep.as_ref(), p);
    if p.nu != 0.0 {
        out.axpy(-1.0, &viscous(v, p.nu));
    }
    out
}

/// Right-hand side of the difference equation
/// `dW/dt = -nu A W - f P J P R W - [B(W', W) + B(W, W')]` with
/// `W = V_a - V_b`, `W' = (V_a + V_b) / 2`.
pub fn difference_rhs(va: &SpectralField, vb: &SpectralField, p: &SimParams) -> SpectralField {
    let w = va.sub(vb);
    let mut mid = va.add(vb);
    mid.scale(0.5);
    let mut out = SpectralField::zeros(va.lattice());
    difference_terms(&mid, &w, p, &mut out);
    if p.nu != 0.0 {
        out.axpy(-1.0, &viscous(&w, p.nu));
    }
    out
}

fn difference_terms(mid: &SpectralField, w: &SpectralField, p: &SimParams, out: &mut SpectralField) {
    if p.f != 0.0 {
        out.axpy(-1.0, &coriolis_apply_with(w, p.f, p.alpha, true));
    }
    if p.nonlinear {
        let pm = Prepared::new(mid, p.alpha);
        let pw = Prepared::new(w, p.alpha);
        out.axpy(-1.0, &bilinear_pair_sum(&pm, &pw));
    }
}

/// Tangent-linear right-hand side along `v`:
/// `-nu A Z - Coriolis(Z) - [B(V, Z) + B(Z, V)]`.
pub fn tangent_rhs(v: &SpectralField, z: &SpectralField, p: &SimParams, include_filter: bool) -> SpectralField {
    let mut out = tangent_terms(&Prepared::new(v, p.alpha), z, p, include_filter);
    if p.nu != 0.0 {
        out.axpy(-1.0, &viscous(z, p.nu));
    }
    out
}

fn tangent_terms(pv: &Prepared, z: &SpectralField, p: &SimParams, include_filter: bool) -> SpectralField {
    let mut out = SpectralField::zeros(z.lattice());
    if p.f != 0.0 {
        out.axpy(-1.0, &coriolis_apply_with(z, p.f, p.alpha, include_filter));
    }
    if p.nonlinear {
        out.axpy(-1.0, &bilinear_pair_sum(pv, &Prepared::new(z, p.alpha)));
    }
    out
}

/// Which coupled system is being advanced.
#[derive(Debug, Clone, Copy, PartialEq)]
enum System {
    Single,
    Pair,
    Tangent { include_filter: bool },
    /// `[V_a, V_b, W]` with `W` advanced by the difference equation.
    Difference,
}

impl System {
    /// Components whose size is checked against the blow-up threshold.
    fn is_base(self, i: usize) -> bool {
        match self {
            System::Single | System::Pair => true,
            System::Tangent { .. } => i == 0,
            System::Difference => i < 2,
        }
    }

    /// Non-viscous part of the right-hand side of every component.
    fn terms(self, u: &[SpectralField], p: &SimParams) -> Vec<SpectralField> {
        let prep = |v: &SpectralField| p.nonlinear.then(|| Prepared::new(v, p.alpha));
        match self {
            System::Single => vec![forcing_terms(&u[0], prep(&u[0]).as_ref(), p)],
            System::Pair => u.iter().map(|v| forcing_terms(v, prep(v).as_ref(), p)).collect(),
            System::Tangent { include_filter } => {
                let pv = Prepared::new(&u[0], p.alpha);
                let base = forcing_terms(&u[0], p.nonlinear.then_some(&pv), p);
                let tan = tangent_terms(&pv, &u[1], p, include_filter);
                vec![base, tan]
            }
            System::Difference => {
                let a = forcing_terms(&u[0], prep(&u[0]).as_ref(), p);
                let b = forcing_terms(&u[1], prep(&u[1]).as_ref(), p);
                let mut mid = u[0].add(&u[1]);
                mid.scale(0.5);
                let mut w = SpectralField::zeros(u[2].lattice());
                difference_terms(&mid, &u[2], p, &mut w);
                vec![a, b, w]
            }
        }
    }
}

/// One sampled instant of a coupled run. `terms[i]` is the non-viscous
/// right-hand side of `fields[i]`, so the exact time derivative is
/// `terms[i] - nu A fields[i]`.
pub struct Frame<'a> {
    pub t: f64,
    pub fields: &'a [SpectralField],
    pub terms: &'a [SpectralField],
    pub nu: f64,
}

impl Frame<'_> {
    pub fn derivative(&self, i: usize) -> SpectralField {
        let mut d = self.terms[i].clone();
        if self.nu != 0.0 {
            d.axpy(-1.0, &viscous(&self.fields[i], self.nu));
        }
        d
    }
}

/// Callbacks from a running integration.
pub trait Observer {
    fn sample(&mut self, _frame: &Frame<'_>) -> Result<()> {
        Ok(())
    }

    /// Called after every accepted step with the post-step fields.
    fn step(&mut self, _t: f64, _fields: &[SpectralField]) -> Result<()> {
        Ok(())
    }
}

/// Observer that does nothing.
pub struct Quiet;

impl Observer for Quiet {}

struct Factors {
    half: Vec<f64>,
    full: Vec<f64>,
}

impl Factors {
    fn new(lattice: &Lattice, nu: f64, h: f64) -> Self {
        let ksq = lattice.ksq_table();
        Self {
            half: ksq.iter().map(|&k| (-nu * k * 0.5 * h).exp()).collect(),
            full: ksq.iter().map(|&k| (-nu * k * h).exp()).collect(),
        }
    }
}

fn with_table(u: &SpectralField, table: &[f64]) -> SpectralField {
    let mut out = u.clone();
    out.apply_table(table);
    out
}

/// One Lawson IF-RK4 step of size `h` given the first stage `k1`.
fn ifrk4_step(
    system: System,
    u: &[SpectralField],
    k1: &[SpectralField],
    h: f64,
    fac: &Factors,
    p: &SimParams,
) -> Vec<SpectralField> {
    let n = u.len();
    let eu: Vec<SpectralField> = u.iter().map(|x| with_table(x, &fac.full)).collect();
    let ehu: Vec<SpectralField> = u.iter().map(|x| with_table(x, &fac.half)).collect();

    let a: Vec<SpectralField> = (0..n)
        .map(|i| {
            let mut s = u[i].clone();
            s.axpy(0.5 * h, &k1[i]);
            s.apply_table(&fac.half);
            s
        })
        .collect();
    let k2 = system.terms(&a, p);
    let b: Vec<SpectralField> = (0..n)
        .map(|i| {
            let mut s = ehu[i].clone();
            s.axpy(0.5 * h, &k2[i]);
            s
        })
        .collect();
    let k3 = system.terms(&b, p);
    let c: Vec<SpectralField> = (0..n)
        .map(|i| {
            let mut s = eu[i].clone();
            s.axpy(h, &with_table(&k3[i], &fac.half));
            s
        })
        .collect();
    let k4 = system.terms(&c, p);

    (0..n)
        .map(|i| {
            let mut mid = k2[i].add(&k3[i]);
            mid.apply_table(&fac.half);
            let mut incr = with_table(&k1[i], &fac.full);
            incr.axpy(2.0, &mid);
            incr.axpy(1.0, &k4[i]);
            let mut out = eu[i].clone();
            out.axpy(h / 6.0, &incr);
            out.leray_project_in_place();
            out.enforce_symmetry();
            out
        })
        .collect()
}

/// Largest stable step from the filtered velocity, `None` for a still field.
fn cfl_limit(v: &SpectralField, alpha: f64, safety: f64) -> Option<f64> {
    let l = v.lattice();
    let grid = helmholtz_inverse(v, alpha).to_physical();
    let mut umax: f64 = 0.0;
    for j in 0..3 {
        let dx = 2.0 * std::f64::consts::PI * l.a()[j] / l.n()[j] as f64;
        let m = grid.comps[j].iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        umax = umax.max(m / dx);
    }
    (umax > 0.0).then(|| safety / umax)
}

/// Step counts for a fixed-step run: full steps, the shortened last step
/// (zero if none) and the sampling stride.
fn schedule(duration: f64, dt: f64, sample_every: Option<f64>) -> Result<(usize, f64, Option<usize>)> {
    if !(duration.is_finite() && duration >= 0.0) {
        return Err(Error::InvalidArgument(format!("duration must be >= 0, got {duration}")));
    }
    let ratio = duration / dt;
    let mut full = ratio.floor() as usize;
    if (ratio - ratio.round()).abs() <= STEP_SLACK * ratio.max(1.0) {
        full = ratio.round() as usize;
    }
    let rest = duration - full as f64 * dt;
    let rest = if rest > STEP_SLACK * dt { rest } else { 0.0 };
    let stride = match sample_every {
        None => None,
        Some(se) => {
            let m = (se / dt).round();
            if !(se > 0.0) || m < 1.0 || (m * dt - se).abs() > STEP_SLACK * se {
                return Err(Error::InvalidArgument(format!(
                    "sample_every ({se}) must be a positive multiple of dt ({dt})"
                )));
            }
            Some(m as usize)
        }
    };
    Ok((full, rest, stride))
}

struct Driver<'p> {
    system: System,
    p: &'p SimParams,
    c: StepperConfig,
    limit: Option<f64>,
}

impl<'p> Driver<'p> {
    fn new(system: System, init: &[SpectralField], p: &'p SimParams, c: StepperConfig) -> Result<Self> {
        c.validate()?;
        let lattice = p.lattice();
        for u in init {
            if !u.lattice().same_geometry(lattice) {
                return Err(Error::LatticeMismatch);
            }
        }
        // reference scale: the larger of the initial size and the
        // steady Stokes response to the forcing
        let mut scale = 0.0_f64;
        for (i, u) in init.iter().enumerate() {
            if system.is_base(i) {
                scale = scale.max(u.sobolev_norm(0.0));
            }
        }
        if p.nu > 0.0 {
            let lambda1 = StokesSpectrum::new(lattice).lambda1();
            if lambda1 > 0.0 {
                scale = scale.max(p.forcing.sobolev_norm(0.0) / (p.nu * lambda1));
            }
        }
        let limit = (scale > 0.0).then_some(BLOWUP_FACTOR * scale);
        Ok(Self { system, p, c, limit })
    }

    fn check(&self, t: f64, u: &[SpectralField]) -> Result<()> {
        for (i, x) in u.iter().enumerate() {
            if !x.is_finite() {
                return Err(Error::BlowUp {
                    t,
                    reason: format!("non-finite coefficient in component {i}"),
                });
            }
            if let (true, Some(limit)) = (self.system.is_base(i), self.limit) {
                let n = x.sobolev_norm(0.0);
                if n > limit {
                    return Err(Error::BlowUp {
                        t,
                        reason: format!("|V|_0 = {n:e} exceeds {limit:e}"),
                    });
                }
            }
        }
        Ok(())
    }

    fn advance(
        &self,
        u: &mut Vec<SpectralField>,
        k1: Vec<SpectralField>,
        h: f64,
        fac: &Factors,
        t_new: f64,
        obs: &mut dyn Observer,
    ) -> Result<()> {
        let next = ifrk4_step(self.system, u, &k1, h, fac, self.p);
        self.check(t_new, &next)?;
        *u = next;
        obs.step(t_new, u)
    }

    fn sample(&self, t: f64, u: &[SpectralField], k1: &[SpectralField], obs: &mut dyn Observer) -> Result<()> {
        obs.sample(&Frame {
            t,
            fields: u,
            terms: k1,
            nu: self.p.nu,
        })
    }

    /// Advances `init` from `t0` by `duration`, returning the final fields.
    fn run(
        &self,
        init: Vec<SpectralField>,
        t0: f64,
        duration: f64,
        sample_every: Option<f64>,
        obs: &mut dyn Observer,
    ) -> Result<(f64, Vec<SpectralField>)> {
        let mut u = init;
        self.check(t0, &u)?;
        if self.c.adapt && self.system == System::Single {
            return self.run_adaptive(u, t0, duration, sample_every, obs);
        }
        let dt = self.c.dt;
        let (full, rest, stride) = schedule(duration, dt, sample_every)?;
        // times on the global dt grid when the start lies on it, so a run
        // resumed from a grid point reports the same times
        let i0 = (t0 / dt).round();
        let on_grid = (t0 - i0 * dt).abs() <= STEP_SLACK * dt;
        let time = |k: usize| {
            if on_grid {
                (i0 + k as f64) * dt
            } else {
                t0 + k as f64 * dt
            }
        };
        let t_end = if rest == 0.0 { time(full) } else { t0 + duration };
        let lattice = self.p.lattice().clone();
        let fac = Factors::new(&lattice, self.p.nu, dt);
        if full == 0 && rest == 0.0 {
            let k1 = self.system.terms(&u, self.p);
            self.sample(t0, &u, &k1, obs)?;
            return Ok((t0, u));
        }
        for k in 0..full {
            let k1 = self.system.terms(&u, self.p);
            if k == 0 || stride.is_some_and(|m| k % m == 0) {
                self.sample(time(k), &u, &k1, obs)?;
            }
            self.advance(&mut u, k1, dt, &fac, time(k + 1), obs)?;
        }
        if rest > 0.0 {
            let k1 = self.system.terms(&u, self.p);
            let at_grid = stride.is_some_and(|m| full % m == 0);
            if full == 0 || at_grid {
                // start of the shortened step is a sample point
                self.sample(time(full), &u, &k1, obs)?;
            }
            let short = Factors::new(&lattice, self.p.nu, rest);
            self.advance(&mut u, k1, rest, &short, t_end, obs)?;
        }
        let k1 = self.system.terms(&u, self.p);
        self.sample(t_end, &u, &k1, obs)?;
        Ok((t_end, u))
    }

    /// CFL-limited run: every sampling interval is split into equal steps
    /// no longer than `dt` or the CFL limit measured at its start.
    fn run_adaptive(
        &self,
        mut u: Vec<SpectralField>,
        t0: f64,
        duration: f64,
        sample_every: Option<f64>,
        obs: &mut dyn Observer,
    ) -> Result<(f64, Vec<SpectralField>)> {
        let interval = sample_every.unwrap_or(duration);
        if !(interval > 0.0) && duration > 0.0 {
            return Err(Error::InvalidArgument("sample_every must be positive".into()));
        }
        let lattice = self.p.lattice().clone();
        let mut t = t0;
        let end = t0 + duration;
        let mut k1 = self.system.terms(&u, self.p);
        self.sample(t, &u, &k1, obs)?;
        let mut j = 0usize;
        while duration > 0.0 && t < end {
            j += 1;
            let target = (t0 + j as f64 * interval).min(end);
            let span = target - t;
            let h_max = cfl_limit(&u[0], self.p.alpha, self.c.cfl_safety)
                .map_or(self.c.dt, |h| h.min(self.c.dt));
            let steps = (span / h_max).ceil().max(1.0) as usize;
            let h = span / steps as f64;
            let fac = Factors::new(&lattice, self.p.nu, h);
            for s in 0..steps {
                let t_new = if s + 1 == steps { target } else { t + h };
                self.advance(&mut u, k1, h, &fac, t_new, obs)?;
                t = t_new;
                k1 = self.system.terms(&u, self.p);
            }
            if (target - end).abs() <= STEP_SLACK * interval {
                t = end;
            }
            self.sample(t, &u, &k1, obs)?;
        }
        Ok((t, u))
    }
}

fn require_duration(t: f64) -> Result<()> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidArgument(format!("duration must be >= 0, got {t}")));
    }
    Ok(())
}

/// Advances one step of size `c.dt`.
pub fn step(s: &SimState, p: &SimParams, c: &StepperConfig) -> Result<SimState> {
    c.validate()?;
    let driver = Driver::new(System::Single, std::slice::from_ref(&s.v), p, *c)?;
    let u = vec![s.v.clone()];
    let k1 = System::Single.terms(&u, p);
    let fac = Factors::new(p.lattice(), p.nu, c.dt);
    let mut u = u;
    driver.advance(&mut u, k1, c.dt, &fac, s.t + c.dt, &mut Quiet)?;
    Ok(SimState::new(u.pop().expect("one field"), s.t + c.dt))
}

struct Collect(Vec<SimState>);

impl Observer for Collect {
    fn sample(&mut self, frame: &Frame<'_>) -> Result<()> {
        self.0.push(SimState::new(frame.fields[0].clone(), frame.t));
        Ok(())
    }
}

/// Trajectory sampled at `t0`, every `sample_every` and at `t0 + duration`.
pub fn run(
    s0: &SimState,
    duration: f64,
    p: &SimParams,
    c: &StepperConfig,
    sample_every: Option<f64>,
) -> Result<Vec<SimState>> {
    let mut out = Collect(Vec::new());
    run_observed(s0, duration, p, c, sample_every, &mut out)?;
    Ok(out.0)
}

/// As [`run`], streaming samples and steps to `obs`; returns the final state.
pub fn run_observed(
    s0: &SimState,
    duration: f64,
    p: &SimParams,
    c: &StepperConfig,
    sample_every: Option<f64>,
    obs: &mut dyn Observer,
) -> Result<SimState> {
    require_duration(duration)?;
    let init = vec![s0.v.clone()];
    let driver = Driver::new(System::Single, &init, p, *c)?;
    let (t, mut u) = driver.run(init, s0.t, duration, sample_every, obs)?;
    Ok(SimState::new(u.pop().expect("one field"), t))
}

#[derive(Debug, Clone)]
pub struct PairSample {
    pub t: f64,
    pub va: SpectralField,
    pub vb: SpectralField,
    /// `V_a - V_b` by subtraction.
    pub w: SpectralField,
    /// `dW/dt` from the difference equation.
    pub w_dot: SpectralField,
    /// `dV_a/dt - dV_b/dt` from the two trajectories.
    pub w_dot_direct: SpectralField,
}

impl PairSample {
    fn from_frame(frame: &Frame<'_>, p: &SimParams) -> Self {
        let (va, vb) = (&frame.fields[0], &frame.fields[1]);
        PairSample {
            t: frame.t,
            va: va.clone(),
            vb: vb.clone(),
            w: va.sub(vb),
            w_dot: difference_rhs(va, vb, p),
            w_dot_direct: frame.derivative(0).sub(&frame.derivative(1)),
        }
    }
}

/// Adapts a [`PairSample`] consumer to the driver.
pub struct PairObserver<'a, F: FnMut(PairSample) -> Result<()>> {
    p: &'a SimParams,
    f: F,
}

impl<F: FnMut(PairSample) -> Result<()>> Observer for PairObserver<'_, F> {
    fn sample(&mut self, frame: &Frame<'_>) -> Result<()> {
        (self.f)(PairSample::from_frame(frame, self.p))
    }
}

fn pair_config(c: &StepperConfig) -> StepperConfig {
    if c.adapt {
        log::debug!("step adaptation disabled for coupled runs");
    }
    StepperConfig { adapt: false, ..*c }
}

/// Advances two trajectories on one step sequence, streaming samples.
pub fn run_pair_observed(
    sa0: &SimState,
    sb0: &SimState,
    duration: f64,
    p: &SimParams,
    c: &StepperConfig,
    sample_every: Option<f64>,
    consume: impl FnMut(PairSample) -> Result<()>,
) -> Result<(SimState, SimState)> {
    require_duration(duration)?;
    if sa0.t != sb0.t {
        return Err(Error::InvalidArgument("pair members must start at the same time".into()));
    }
    let init = vec![sa0.v.clone(), sb0.v.clone()];
    let driver = Driver::new(System::Pair, &init, p, pair_config(c))?;
    let mut obs = PairObserver { p, f: consume };
    let (t, mut u) = driver.run(init, sa0.t, duration, sample_every, &mut obs)?;
    let vb = u.pop().expect("two fields");
    let va = u.pop().expect("two fields");
    Ok((SimState::new(va, t), SimState::new(vb, t)))
}

pub fn run_pair(
    sa0: &SimState,
    sb0: &SimState,
    duration: f64,
    p: &SimParams,
    c: &StepperConfig,
    sample_every: Option<f64>,
) -> Result<Vec<PairSample>> {
    let mut out = Vec::new();
    run_pair_observed(sa0, sb0, duration, p, c, sample_every, |s| {
        out.push(s);
        Ok(())
    })?;
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct TangentSample {
    pub base: SimState,
    pub z: SpectralField,
}

struct TangentCollect(Vec<TangentSample>);

impl Observer for TangentCollect {
    fn sample(&mut self, frame: &Frame<'_>) -> Result<()> {
        self.0.push(TangentSample {
            base: SimState::new(frame.fields[0].clone(), frame.t),
            z: frame.fields[1].clone(),
        });
        Ok(())
    }
}

/// Base trajectory and tangent-linear response advanced jointly.
/// `include_filter` selects `f P J P R Z` (the exact linearization) or
/// `f P J P Z` for the Coriolis term of the tangent equation.
pub fn run_tangent_observed(
    base0: &SimState,
    z0: &SpectralField,
    duration: f64,
    p: &SimParams,
    c: &StepperConfig,
    include_filter: bool,
    sample_every: Option<f64>,
    obs: &mut dyn Observer,
) -> Result<(SimState, SpectralField)> {
    require_duration(duration)?;
    let system = System::Tangent { include_filter };
    let init = vec![base0.v.clone(), z0.clone()];
    let driver = Driver::new(system, &init, p, pair_config(c))?;
    let (t, mut u) = driver.run(init, base0.t, duration, sample_every, obs)?;
    let z = u.pop().expect("two fields");
    let v = u.pop().expect("two fields");
    Ok((SimState::new(v, t), z))
}

pub fn run_tangent(
    base0: &SimState,
    z0: &SpectralField,
    duration: f64,
    p: &SimParams,
    c: &StepperConfig,
    include_filter: bool,
    sample_every: Option<f64>,
) -> Result<Vec<TangentSample>> {
    let mut out = TangentCollect(Vec::new());
    run_tangent_observed(base0, z0, duration, p, c, include_filter, sample_every, &mut out)?;
    Ok(out.0)
}

/// Integrates the difference equation for `W` alongside both members and
/// returns `(V_a(T), V_b(T), W(T))`.
pub fn run_difference(
    sa0: &SimState,
    sb0: &SimState,
    duration: f64,
    p: &SimParams,
    c: &StepperConfig,
) -> Result<(SpectralField, SpectralField, SpectralField)> {
    require_duration(duration)?;
    let init = vec![sa0.v.clone(), sb0.v.clone(), sa0.v.sub(&sb0.v)];
    let driver = Driver::new(System::Difference, &init, p, pair_config(c))?;
    let (_, mut u) = driver.run(init, sa0.t, duration, None, &mut Quiet)?;
    let w = u.pop().expect("three fields");
    let vb = u.pop().expect("three fields");
    let va = u.pop().expect("three fields");
    Ok((va, vb, w))
}
