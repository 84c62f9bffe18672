//! Closed-form attractor constants: `K1..K3`, the squeezing time `t*`, the
//! contraction bound `delta(t*)`, the rank `N0` that makes it smaller than
//! 1/8, the Lipschitz bound `L*`, the fractal-dimension bound and the
//! attraction rate.
//!
//! The absolute constants `c1, c2, c3, c_tilde, c` are inputs (default 1);
//! `c4` and `c5` are always derived from `c1..c3`. Nothing is cached, every
//! function re-derives what it needs from the input.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::StokesSpectrum;

/// Target contraction for the squeezing property.
pub const SQUEEZE_TARGET: f64 = 0.125;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c_tilde: f64,
    pub c: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Self {
            c1: 1.0,
            c2: 1.0,
            c3: 1.0,
            c_tilde: 1.0,
            c: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsInput {
    pub nu: f64,
    /// Absorbing radius in `H^0`.
    pub rho_h: f64,
    /// Absorbing radius in `H^1`.
    pub rho_v: f64,
    pub lambda1: f64,
    pub constants: Constants,
    pub theta: f64,
    /// Stokes spectrum used to resolve `lambda_{N0+1}`.
    #[serde(skip)]
    pub spectrum: Option<StokesSpectrum>,
}

impl BoundsInput {
    pub fn unit() -> Self {
        Self {
            nu: 1.0,
            rho_h: 1.0,
            rho_v: 1.0,
            lambda1: 1.0,
            constants: Constants::default(),
            theta: 0.5,
            spectrum: None,
        }
    }

    pub fn with_spectrum(mut self, spectrum: StokesSpectrum) -> Self {
        self.lambda1 = spectrum.lambda1();
        self.spectrum = Some(spectrum);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let k = &self.constants;
        let positive = [
            ("nu", self.nu),
            ("lambda1", self.lambda1),
            ("c1", k.c1),
            ("c2", k.c2),
            ("c3", k.c3),
            ("c_tilde", k.c_tilde),
            ("c", k.c),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("rho_h", self.rho_h), ("rho_v", self.rho_v)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidArgument(format!("{name} must be >= 0, got {v}")));
            }
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(Error::Inadmissible(format!("theta = {} is outside (0, 1)", self.theta)));
        }
        Ok(())
    }

    fn spectrum(&self) -> Result<&StokesSpectrum> {
        self.spectrum
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("no lattice spectrum attached to the bounds input".into()))
    }
}

/// `(K1, K2, K3)`.
pub fn compute_k(b: &BoundsInput) -> (f64, f64, f64) {
    let k = &b.constants;
    let k1 = k.c1.powi(4) * b.rho_v.powi(4);
    let k2 = k.c2 * b.rho_v;
    let k3sq = 27.0 * k.c3.powi(4) * b.rho_v.powi(6) / (2.0 * b.nu.powi(3)) + 2.0 * b.rho_h / (b.nu * b.lambda1);
    (k1, k2, k3sq.sqrt())
}

pub fn c4(b: &BoundsInput) -> f64 {
    let k = &b.constants;
    0.5 * (1.0 - (-k.c3 * k.c3 / k.c2).exp())
}

pub fn c5(b: &BoundsInput) -> f64 {
    let k = &b.constants;
    27.0 / 16.0 * k.c1.powi(4) * k.c3.powi(2) * k.c2.powi(2)
}

pub fn squeeze_time(b: &BoundsInput) -> Result<f64> {
    let (_, k2, k3) = compute_k(b);
    if k2 == 0.0 || k3 == 0.0 {
        return Err(Error::InvalidArgument("t* needs K2, K3 > 0 (rho_v = 0?)".into()));
    }
    let k = &b.constants;
    Ok(k.c3 * k.c3 / k.c2 * b.nu.powf(1.5) / (k2 * k3))
}

/// `exp(c5 rho_v^3 / (nu^{3/2} K3))`, the bound on `L* = delta(t*)`.
pub fn lipschitz_bound(b: &BoundsInput) -> Result<f64> {
    let (_, _, k3) = compute_k(b);
    if k3 == 0.0 {
        return Err(Error::InvalidArgument("K3 vanishes".into()));
    }
    Ok((c5(b) * b.rho_v.powi(3) / (b.nu.powf(1.5) * k3)).exp())
}

/// Bound on `delta(t*)` for a given `lambda_{N0+1}`.
pub fn delta_star_at(b: &BoundsInput, lambda_next: f64) -> Result<f64> {
    let (_, _, k3) = compute_k(b);
    if k3 == 0.0 || b.rho_v == 0.0 {
        return Err(Error::InvalidArgument("delta(t*) needs rho_v > 0".into()));
    }
    let decay = c4(b) / b.constants.c2 * lambda_next * b.nu.powf(2.5) / (k3 * b.rho_v);
    let growth = c5(b) * b.rho_v.powi(3) / (b.nu.powf(1.5) * k3);
    Ok((-decay + growth).exp())
}

/// Bound on `delta(t*)` at rank `n0`, with `lambda_{N0+1}` from the lattice.
pub fn delta_star(b: &BoundsInput, n0: usize) -> Result<f64> {
    let lambda = b.spectrum()?.next_after(n0)?;
    delta_star_at(b, lambda)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinN0 {
    /// `c_tilde^{3/2} max{(rho_h rho_v)^{3/2} / (lambda1^{3/4} nu^3), rho_v^6 / (lambda1^{3/2} nu^6)}`.
    pub explicit: f64,
    /// Smallest rank with `delta_star < 1/8` on the lattice spectrum.
    pub search: usize,
    pub delta_at_search: f64,
}

pub fn explicit_n0(b: &BoundsInput) -> f64 {
    let first = (b.rho_h * b.rho_v).powf(1.5) / (b.lambda1.powf(0.75) * b.nu.powi(3));
    let second = b.rho_v.powi(6) / (b.lambda1.powf(1.5) * b.nu.powi(6));
    b.constants.c_tilde.powf(1.5) * first.max(second)
}

pub fn min_n0(b: &BoundsInput) -> Result<MinN0> {
    let spectrum = b.spectrum()?;
    // delta_star only changes where lambda_{N0+1} enters a new shell, so
    // the candidates are the shell boundaries
    for rank in spectrum.boundaries() {
        let Ok(lambda) = spectrum.next_after(rank) else {
            break;
        };
        let d = delta_star_at(b, lambda)?;
        if d < SQUEEZE_TARGET {
            return Ok(MinN0 {
                explicit: explicit_n0(b),
                search: rank,
                delta_at_search: d,
            });
        }
    }
    Err(Error::SpectrumExhausted {
        n0: spectrum.total_dof(),
        needed: spectrum.total_dof() + 1,
        available: spectrum.total_dof(),
    })
}

/// `(discrete, continuous)` box-dimension bounds
/// `N0 max{1, log(2L/delta + 1) / log(1/theta)}` and that plus one.
pub fn dimension_bound(n0: usize, l: f64, delta: f64, theta: f64) -> Result<(f64, f64)> {
    if !(delta > 0.0 && delta < 0.25) {
        return Err(Error::Inadmissible(format!("delta = {delta} is outside (0, 1/4)")));
    }
    // the lower end is closed so that delta = 1/8, theta = 1/2 is usable
    if !(theta >= 4.0 * delta && theta < 1.0) {
        return Err(Error::Inadmissible(format!(
            "theta = {theta} is outside [4 delta, 1) = [{}, 1)",
            4.0 * delta
        )));
    }
    if !(l >= 0.0 && l.is_finite()) {
        return Err(Error::InvalidArgument(format!("Lipschitz constant must be >= 0, got {l}")));
    }
    let ratio = (2.0 * l / delta + 1.0).ln() / (1.0 / theta).ln();
    let discrete = n0 as f64 * ratio.max(1.0);
    Ok((discrete, discrete + 1.0))
}

/// `(c L*, ln 8 / t*)`.
pub fn attraction_rate(b: &BoundsInput, t_star: f64) -> Result<(f64, f64)> {
    if !(t_star > 0.0) {
        return Err(Error::InvalidArgument(format!("t* must be positive, got {t_star}")));
    }
    Ok((b.constants.c * lipschitz_bound(b)?, 8f64.ln() / t_star))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttractorEstimate {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub c4: f64,
    pub c5: f64,
    pub t_star: f64,
    /// `delta(t*)` bound at `n0_min`.
    pub delta_star: f64,
    pub n0_min: usize,
    pub n0_explicit: f64,
    pub l_star: f64,
    pub theta: f64,
    pub db_bound: f64,
    pub db_bound_continuous: f64,
    pub rate_c: f64,
    pub rate_exponent: f64,
}

/// Full estimate with `N0` from the lattice search.
pub fn estimate(b: &BoundsInput) -> Result<AttractorEstimate> {
    b.validate()?;
    let (k1, k2, k3) = compute_k(b);
    let t_star = squeeze_time(b)?;
    let n0 = min_n0(b)?;
    let l_star = lipschitz_bound(b)?;
    let (db, dbc) = dimension_bound(n0.search, l_star, n0.delta_at_search, b.theta)?;
    let (rate_c, rate_exponent) = attraction_rate(b, t_star)?;
    Ok(AttractorEstimate {
        k1,
        k2,
        k3,
        c4: c4(b),
        c5: c5(b),
        t_star,
        delta_star: n0.delta_at_search,
        n0_min: n0.search,
        n0_explicit: n0.explicit,
        l_star,
        theta: b.theta,
        db_bound: db,
        db_bound_continuous: dbc,
        rate_c,
        rate_exponent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Lattice;

    // reference values evaluated independently at 30 digits
    const T_STAR_UNIT: f64 = 0.254000254000381000635001111252;
    const C4_UNIT: f64 = 0.316060279414278839202238114919;
    const DELTA_UNIT_LAMBDA1: f64 = 1.41672240383101876459845811133;
    const RATE_UNIT: f64 = 8.18676953636714380553230757567;
    const L_STAR_UNIT: f64 = 1.53514590497909879671873455248;
    const DB_UNIT: f64 = 4.08746284125033940825406601081;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * b.abs().max(1.0)
    }

    fn on_lattice(b: BoundsInput) -> BoundsInput {
        b.with_spectrum(StokesSpectrum::new(&Lattice::cube(32).unwrap()))
    }

    #[test]
    fn k_examples() {
        let b = BoundsInput::unit();
        let (k1, k2, k3) = compute_k(&b);
        assert_eq!((k1, k2), (1.0, 1.0));
        assert!(close(k3, 15.5f64.sqrt()));
        let mut z = b.clone();
        z.rho_v = 0.0;
        let (k1, k2, k3) = compute_k(&z);
        assert_eq!((k1, k2), (0.0, 0.0));
        assert!(close(k3 * k3, 2.0));
        let mut d = b.clone();
        d.constants.c2 = 2.0;
        let (a1, a2, a3) = compute_k(&d);
        assert_eq!((a1, a2, a3), (1.0, 2.0, k3_of(&b)));
    }

    fn k3_of(b: &BoundsInput) -> f64 {
        compute_k(b).2
    }

    #[test]
    fn squeeze_time_examples() {
        let b = BoundsInput::unit();
        assert!(close(squeeze_time(&b).unwrap(), T_STAR_UNIT));
        assert!(close(squeeze_time(&b).unwrap(), 1.0 / 15.5f64.sqrt()));
        let mut v = b.clone();
        v.nu = 4.0;
        let expected = 4f64.powf(1.5) / (compute_k(&v).1 * compute_k(&v).2);
        assert!(close(squeeze_time(&v).unwrap(), expected));
        let mut c = b.clone();
        c.constants.c3 = 2.0;
        let expected = 4.0 / (compute_k(&c).1 * compute_k(&c).2);
        assert!(close(squeeze_time(&c).unwrap(), expected));
        let mut z = b;
        z.rho_v = 0.0;
        assert!(squeeze_time(&z).is_err());
    }

    #[test]
    fn delta_star_examples() {
        let b = on_lattice(BoundsInput::unit());
        assert!(close(c4(&b), C4_UNIT));
        assert!(close(c4(&b), 0.5 * (1.0 - (-1f64).exp())));
        assert_eq!(c5(&b), 27.0 / 16.0);
        let d = delta_star(&b, 0).unwrap();
        assert!(close(d, DELTA_UNIT_LAMBDA1));
        let by_hand = (-C4_UNIT / 15.5f64.sqrt() + 27.0 / 16.0 / 15.5f64.sqrt()).exp();
        assert!(close(d, by_hand));
        assert!(delta_star_at(&b, 1e6).unwrap() < 1e-300);
        let total = b.spectrum.as_ref().unwrap().total_dof();
        assert!(matches!(delta_star(&b, total), Err(Error::SpectrumExhausted { .. })));
    }

    #[test]
    fn min_n0_examples() {
        let b = on_lattice(BoundsInput::unit());
        let m = min_n0(&b).unwrap();
        assert_eq!(m.explicit, 1.0);
        assert!(m.delta_at_search < SQUEEZE_TARGET);
        assert!(delta_star(&b, m.search).unwrap() < SQUEEZE_TARGET);
        if m.search > 0 {
            assert!(delta_star(&b, m.search - 1).unwrap() >= SQUEEZE_TARGET);
        }
        // the first eigenvalue beyond 31.24... is 32 on the unit cube
        assert_eq!(b.spectrum.as_ref().unwrap().next_after(m.search).unwrap(), 32.0);
        let mut d = b.clone();
        d.rho_v = 2.0;
        assert!(close(explicit_n0(&d), 64.0));
    }

    #[test]
    fn dimension_examples() {
        let (d, c) = dimension_bound(1, 1.0, 0.125, 0.5).unwrap();
        assert!(close(d, DB_UNIT) && close(d, 17f64.log2()));
        assert!(close(c, DB_UNIT + 1.0));
        assert!(matches!(dimension_bound(1, 1.0, 0.25, 1.0 - 1e-12), Err(Error::Inadmissible(_))));
        assert!(matches!(dimension_bound(1, 1.0, 0.2, 0.7), Err(Error::Inadmissible(_))));
        assert!(dimension_bound(1, 1.0, 0.1, 1.0).is_err());
        assert_eq!(dimension_bound(3, 1e-12, 0.1, 0.5).unwrap().0, 3.0);
    }

    #[test]
    fn rate_examples() {
        let b = BoundsInput::unit();
        assert_eq!(attraction_rate(&b, 8f64.ln()).unwrap().1, 1.0);
        let (c, e) = attraction_rate(&b, squeeze_time(&b).unwrap()).unwrap();
        assert!(close(e, RATE_UNIT));
        assert!(close(c, L_STAR_UNIT));
        let mut d = b.clone();
        d.constants.c = 2.0;
        assert!(close(attraction_rate(&d, 1.0).unwrap().0, 2.0 * c));
    }

    #[test]
    fn monotonicity() {
        let b = on_lattice(BoundsInput::unit());
        let with = |f: &dyn Fn(&mut BoundsInput)| {
            let mut x = b.clone();
            f(&mut x);
            x
        };
        let lo = with(&|x| x.rho_v = 1.0);
        let hi = with(&|x| x.rho_v = 1.5);
        assert!(squeeze_time(&hi).unwrap() < squeeze_time(&lo).unwrap());
        assert!(explicit_n0(&hi) >= explicit_n0(&lo));
        let hh = with(&|x| x.rho_h = 3.0);
        assert!(explicit_n0(&hh) >= explicit_n0(&b));
        assert!(delta_star_at(&b, 40.0).unwrap() < delta_star_at(&b, 20.0).unwrap());
        let (d1, _) = dimension_bound(2, 1.0, 0.1, 0.5).unwrap();
        let (d2, _) = dimension_bound(2, 2.0, 0.1, 0.5).unwrap();
        let (d3, _) = dimension_bound(3, 2.0, 0.1, 0.5).unwrap();
        assert!(d1 <= d2 && d2 <= d3);
    }

    #[test]
    fn estimate_is_consistent() {
        let b = on_lattice(BoundsInput::unit());
        let e = estimate(&b).unwrap();
        assert!(e.delta_star < SQUEEZE_TARGET);
        assert!(close(e.t_star, T_STAR_UNIT));
        assert!(close(e.rate_exponent, RATE_UNIT));
        for v in [e.k1, e.k2, e.k3, e.t_star, e.delta_star, e.l_star, e.db_bound, e.rate_c, e.rate_exponent] {
            assert!(v > 0.0);
        }
        let mut changed = b.clone();
        changed.rho_v = 1.2;
        assert_ne!(estimate(&changed).unwrap().t_star, e.t_star);
        let mut bad = b;
        bad.theta = 1.5;
        assert!(matches!(estimate(&bad), Err(Error::Inadmissible(_))));
    }
}
