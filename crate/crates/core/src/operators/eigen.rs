use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{Lattice, SpectralField};

/// One distinct Stokes eigenvalue with its divergence-free degrees of
/// freedom (2 per nonzero retained wave vector, `n` and `-n` counted
/// separately).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Shell {
    pub lambda: f64,
    pub multiplicity: usize,
    /// Degrees of freedom in this and all lower shells.
    pub cumulative: usize,
}

/// Stokes spectrum of the dealiased lattice, ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StokesSpectrum {
    pub shells: Vec<Shell>,
}

fn same_value(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

impl StokesSpectrum {
    pub fn new(lattice: &Lattice) -> Self {
        let mut values: Vec<f64> = lattice
            .retained_indices()
            .iter()
            .filter(|&&idx| lattice.weight(idx) > 0.0)
            .flat_map(|&idx| {
                // one entry per wave vector of the full map
                let copies = lattice.weight(idx) as usize;
                std::iter::repeat(lattice.ksq(idx)).take(copies)
            })
            .collect();
        values.sort_by(f64::total_cmp);
        let mut shells: Vec<Shell> = Vec::new();
        let mut cumulative = 0;
        for v in values {
            cumulative += 2;
            match shells.last_mut() {
                Some(s) if same_value(s.lambda, v) => {
                    s.multiplicity += 2;
                    s.cumulative = cumulative;
                }
                _ => shells.push(Shell {
                    lambda: v,
                    multiplicity: 2,
                    cumulative,
                }),
            }
        }
        Self { shells }
    }

    pub fn lambda1(&self) -> f64 {
        self.shells.first().map_or(0.0, |s| s.lambda)
    }

    pub fn total_dof(&self) -> usize {
        self.shells.last().map_or(0, |s| s.cumulative)
    }

    /// `lambda_j` counted with multiplicity, 1-based.
    pub fn eigenvalue(&self, j: usize) -> Option<f64> {
        if j == 0 {
            return None;
        }
        self.shells.iter().find(|s| s.cumulative >= j).map(|s| s.lambda)
    }

    /// `lambda_{N0+1}`.
    pub fn next_after(&self, n0: usize) -> Result<f64> {
        self.eigenvalue(n0 + 1).ok_or(Error::SpectrumExhausted {
            n0,
            needed: n0 + 1,
            available: self.total_dof(),
        })
    }

    /// Number of eigenvalues (with multiplicity) not exceeding `lambda`.
    pub fn count_up_to(&self, lambda: f64) -> usize {
        self.shells
            .iter()
            .take_while(|s| s.lambda <= lambda)
            .last()
            .map_or(0, |s| s.cumulative)
    }

    /// Whole-shell cut containing rank `n0`: the largest retained
    /// eigenvalue and the effective rank.
    pub fn shell_cut(&self, n0: usize) -> (Option<f64>, usize) {
        if n0 == 0 {
            return (None, 0);
        }
        match self.shells.iter().find(|s| s.cumulative >= n0) {
            Some(s) => (Some(s.lambda), s.cumulative),
            None => (self.shells.last().map(|s| s.lambda), self.total_dof()),
        }
    }

    /// Ranks at shell boundaries, `0, cum_1, cum_2, ..., total`.
    pub fn boundaries(&self) -> Vec<usize> {
        std::iter::once(0)
            .chain(self.shells.iter().map(|s| s.cumulative))
            .collect()
    }
}

/// First `count` distinct Stokes eigenvalues as `(lambda, multiplicity)`.
pub fn stokes_eigenvalues(lattice: &Lattice, count: usize) -> Result<Vec<(f64, usize)>> {
    if count == 0 {
        return Err(Error::InvalidArgument("count must be at least 1".into()));
    }
    Ok(StokesSpectrum::new(lattice)
        .shells
        .iter()
        .take(count)
        .map(|s| (s.lambda, s.multiplicity))
        .collect())
}

#[derive(Debug, Clone)]
pub struct Projection {
    pub low: SpectralField,
    pub high: SpectralField,
    /// Rank actually kept: `n0` rounded up to a whole eigenvalue shell.
    pub effective_rank: usize,
}

/// `P_{N0}` split into the lowest `N0` Stokes degrees of freedom (whole
/// shells) and the remainder.
pub fn spectral_projection(u: &SpectralField, n0: usize) -> Projection {
    let l = u.lattice().clone();
    let spectrum = StokesSpectrum::new(&l);
    projection_with(u, &spectrum, n0)
}

pub(crate) fn projection_with(u: &SpectralField, spectrum: &StokesSpectrum, n0: usize) -> Projection {
    let l = u.lattice().clone();
    let (cut, effective_rank) = spectrum.shell_cut(n0);
    let mut low = SpectralField::zeros(&l);
    let mut high = u.clone();
    if let Some(cut) = cut {
        let full = effective_rank == spectrum.total_dof();
        for idx in 0..l.storage_len() {
            let ksq = l.ksq(idx);
            let keep = if full {
                l.is_retained(idx) && ksq > 0.0
            } else {
                l.is_retained(idx) && ksq > 0.0 && (ksq <= cut || same_value(ksq, cut))
            };
            if keep {
                low.set_at(idx, u.at(idx));
                high.set_at(idx, [num_complex::Complex64::new(0.0, 0.0); 3]);
            }
        }
    }
    Projection {
        low,
        high,
        effective_rank,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{
        max_retained_shell, random_divfree_field, LatticeSpec, SpectrumProfile, TWO_THIRDS,
    };

    #[test]
    fn lambda1_examples() {
        let l = Lattice::cube(8).unwrap();
        let e = stokes_eigenvalues(&l, 1).unwrap();
        assert_eq!(e[0].0, 1.0);
        // six wave vectors (+-1,0,0), ... with two dof each
        assert_eq!(e[0].1, 12);
        let l2 = Lattice::new(LatticeSpec::new([1.0, 2.0, 1.0], [8; 3], TWO_THIRDS)).unwrap();
        assert_eq!(stokes_eigenvalues(&l2, 1).unwrap()[0].0, 0.25);
        assert!(stokes_eigenvalues(&l, 0).is_err());
    }

    #[test]
    fn distinct_values_match_enumeration() {
        let l = Lattice::cube(16).unwrap();
        // brute-force enumeration of |n|^2 <= 4 over integer vectors
        let mut brute: Vec<(i64, usize)> = Vec::new();
        for a in -2i64..=2 {
            for b in -2i64..=2 {
                for c in -2i64..=2 {
                    let s = a * a + b * b + c * c;
                    if s == 0 || s > 4 {
                        continue;
                    }
                    match brute.iter_mut().find(|(v, _)| *v == s) {
                        Some(e) => e.1 += 2,
                        None => brute.push((s, 2)),
                    }
                }
            }
        }
        brute.sort();
        let got = stokes_eigenvalues(&l, 4).unwrap();
        let want: Vec<(f64, usize)> = brute.iter().map(|&(v, m)| (v as f64, m)).collect();
        assert_eq!(got, want);
        assert_eq!(got.iter().map(|e| e.0).collect::<Vec<_>>(), vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn projection_limits_and_orthogonality() {
        let l = Lattice::cube(8).unwrap();
        let u = random_divfree_field(
            3,
            0,
            &SpectrumProfile::band(1.0, max_retained_shell(&l)),
            &l,
        )
        .unwrap();
        let p0 = spectral_projection(&u, 0);
        assert_eq!(p0.low.max_abs(), 0.0);
        assert_eq!(p0.high, u);
        let total = StokesSpectrum::new(&l).total_dof();
        let pall = spectral_projection(&u, total + 5);
        assert_eq!(pall.low, u);
        assert_eq!(pall.high.max_abs(), 0.0);
        for n0 in [1, 12, 13, 40, 100] {
            let p = spectral_projection(&u, n0);
            assert!(p.effective_rank >= n0.min(total));
            let (a, b, c) = (
                u.sobolev_norm(0.0).powi(2),
                p.low.sobolev_norm(0.0).powi(2),
                p.high.sobolev_norm(0.0).powi(2),
            );
            assert!((a - b - c).abs() <= 1e-12 * a);
            assert_eq!(p.low.add(&p.high), u);
            for s in [0.0, 1.0, 2.6] {
                assert_eq!(p.low.inner_product(&p.high, s).unwrap(), 0.0);
            }
        }
        assert_eq!(spectral_projection(&u, 1).effective_rank, 12);
    }

    #[test]
    fn eigenvalue_indexing() {
        let l = Lattice::cube(8).unwrap();
        let s = StokesSpectrum::new(&l);
        assert_eq!(s.eigenvalue(1), Some(1.0));
        assert_eq!(s.eigenvalue(12), Some(1.0));
        assert_eq!(s.eigenvalue(13), Some(2.0));
        assert_eq!(s.count_up_to(1.5), 12);
        assert!(s.next_after(s.total_dof()).is_err());
    }
}
