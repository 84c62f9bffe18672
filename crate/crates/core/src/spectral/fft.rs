//! Pruned 3D real FFTs between the half-spectrum layout and the physical grid.
//!
//! Physical samples are stored with axis 3 contiguous:
//! `u[(x1 * N_2 + x2) * N_3 + x3]` at `x_j = 2 pi a_j x_j / N_j`.
//! A `support` triple restricts the 1D passes to lines that can hold
//! nonzero coefficients (`|n_j| <= support_j`), which is what makes the
//! dealiased products cheap.

use std::sync::Arc;

use num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::{Fft, FftPlanner};

pub(crate) struct FftPlans {
    n: [usize; 3],
    fwd1: Arc<dyn Fft<f64>>,
    inv1: Arc<dyn Fft<f64>>,
    fwd2: Arc<dyn Fft<f64>>,
    inv2: Arc<dyn Fft<f64>>,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
}

/// FFT-ordered indices with `|n| <= k` (Nyquist excluded).
fn index_set(n: usize, k: usize) -> Vec<usize> {
    let k = k.min(n / 2 - 1);
    (0..=k).chain(n - k..n).filter(|&i| i < n).collect::<std::collections::BTreeSet<_>>().into_iter().collect()
}

impl FftPlans {
    pub(crate) fn new(n: [usize; 3]) -> Self {
        let mut planner = FftPlanner::new();
        let mut real = RealFftPlanner::<f64>::new();
        Self {
            n,
            fwd1: planner.plan_fft_forward(n[0]),
            inv1: planner.plan_fft_inverse(n[0]),
            fwd2: planner.plan_fft_forward(n[1]),
            inv2: planner.plan_fft_inverse(n[1]),
            r2c: real.plan_fft_forward(n[2]),
            c2r: real.plan_fft_inverse(n[2]),
        }
    }

    fn n3h(&self) -> usize {
        self.n[2] / 2 + 1
    }

    /// Runs `fft` over the strided lines `base + i * stride`, `i < len`.
    fn strided_pass(
        fft: &Arc<dyn Fft<f64>>,
        buf: &mut [Complex64],
        bases: &[usize],
        len: usize,
        stride: usize,
    ) {
        if bases.is_empty() {
            return;
        }
        let mut batch = vec![Complex64::new(0.0, 0.0); bases.len() * len];
        for (line, &base) in batch.chunks_exact_mut(len).zip(bases) {
            for (i, z) in line.iter_mut().enumerate() {
                *z = buf[base + i * stride];
            }
        }
        fft.process(&mut batch);
        for (line, &base) in batch.chunks_exact(len).zip(bases) {
            for (i, z) in line.iter().enumerate() {
                buf[base + i * stride] = *z;
            }
        }
    }

    /// Spectral half spectrum -> physical samples, `u(x) = sum_n u_n e^{i n.x}`.
    pub(crate) fn inverse(&self, spec: &[Complex64], support: [usize; 3], out: &mut [f64]) {
        let [n1, n2, n3] = self.n;
        let n3h = self.n3h();
        debug_assert_eq!(spec.len(), n1 * n2 * n3h);
        debug_assert_eq!(out.len(), n1 * n2 * n3);
        let k3 = support[2].min(n3 / 2 - 1);
        let mut buf = spec.to_vec();

        let rows2 = index_set(n2, support[1]);
        let bases: Vec<usize> = rows2
            .iter()
            .flat_map(|&i2| (0..=k3).map(move |i3| i2 * n3h + i3))
            .collect();
        Self::strided_pass(&self.inv1, &mut buf, &bases, n1, n2 * n3h);

        let bases: Vec<usize> = (0..n1)
            .flat_map(|x1| (0..=k3).map(move |i3| x1 * n2 * n3h + i3))
            .collect();
        Self::strided_pass(&self.inv2, &mut buf, &bases, n2, n3h);

        let mut scratch = self.c2r.make_scratch_vec();
        for (line, dst) in buf.chunks_exact_mut(n3h).zip(out.chunks_exact_mut(n3)) {
            line[0].im = 0.0;
            line[n3h - 1].im = 0.0;
            self.c2r
                .process_with_scratch(line, dst, &mut scratch)
                .expect("c2r input is Hermitian by construction");
        }
    }

    /// Physical samples -> normalized half spectrum. Slots outside `support`
    /// and the Nyquist slots are zeroed.
    pub(crate) fn forward(&self, input: &[f64], support: [usize; 3], out: &mut [Complex64]) {
        let [n1, n2, n3] = self.n;
        let n3h = self.n3h();
        debug_assert_eq!(input.len(), n1 * n2 * n3);
        debug_assert_eq!(out.len(), n1 * n2 * n3h);
        let k = [
            support[0].min(n1 / 2 - 1),
            support[1].min(n2 / 2 - 1),
            support[2].min(n3 / 2 - 1),
        ];

        let mut real = input.to_vec();
        let mut scratch = self.r2c.make_scratch_vec();
        for (src, dst) in real.chunks_exact_mut(n3).zip(out.chunks_exact_mut(n3h)) {
            self.r2c
                .process_with_scratch(src, dst, &mut scratch)
                .expect("buffer sizes match the plan");
        }

        let bases: Vec<usize> = (0..n1)
            .flat_map(|x1| (0..=k[2]).map(move |i3| x1 * n2 * n3h + i3))
            .collect();
        Self::strided_pass(&self.fwd2, out, &bases, n2, n3h);

        let rows2 = index_set(n2, k[1]);
        let bases: Vec<usize> = rows2
            .iter()
            .flat_map(|&i2| (0..=k[2]).map(move |i3| i2 * n3h + i3))
            .collect();
        Self::strided_pass(&self.fwd1, out, &bases, n1, n2 * n3h);

        let scale = 1.0 / (n1 * n2 * n3) as f64;
        let keep = |i: usize, n: usize, k: usize| {
            let m = if i < n / 2 { i } else { n - i };
            i != n / 2 && m <= k
        };
        for i1 in 0..n1 {
            let k1 = keep(i1, n1, k[0]);
            for i2 in 0..n2 {
                let k12 = k1 && keep(i2, n2, k[1]);
                let row = &mut out[(i1 * n2 + i2) * n3h..(i1 * n2 + i2 + 1) * n3h];
                for (i3, z) in row.iter_mut().enumerate() {
                    if k12 && i3 <= k[2] {
                        *z *= scale;
                    } else {
                        *z = Complex64::new(0.0, 0.0);
                    }
                }
            }
        }
    }
}
