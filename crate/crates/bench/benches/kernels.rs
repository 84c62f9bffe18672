use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use rnsa_core::integrator::step;
use rnsa_core::operators::{bilinear, bilinear_oracle};
use rnsa_core::spectral::random_divfree_field;
use rnsa_core::{Lattice, SimParams, SimState, SpectralField, SpectrumProfile, StepperConfig};

fn field(l: &std::sync::Arc<Lattice>, stream: u64) -> SpectralField {
    let profile = SpectrumProfile::band(0.0, 4.0).with_norm0(1.0);
    random_divfree_field(11, stream, &profile, l).unwrap()
}

fn transforms(c: &mut Criterion) {
    let mut group = c.benchmark_group("transform");
    for n in [16, 32] {
        let l = Lattice::cube(n).unwrap();
        let u = field(&l, 0);
        let grid = u.to_physical();
        group.bench_with_input(BenchmarkId::new("inverse", n), &u, |b, u| b.iter(|| u.to_physical()));
        group.bench_with_input(BenchmarkId::new("forward", n), &grid, |b, g| {
            b.iter(|| SpectralField::to_spectral(g, &l).unwrap())
        });
    }
    group.finish();
}

fn nonlinear(c: &mut Criterion) {
    let mut group = c.benchmark_group("bilinear");
    for n in [16, 32] {
        let l = Lattice::cube(n).unwrap();
        let (u, v) = (field(&l, 0), field(&l, 1));
        group.bench_function(BenchmarkId::new("pseudospectral", n), |b| {
            b.iter(|| bilinear(black_box(&u), black_box(&v), 0.1).unwrap())
        });
    }
    let l = Lattice::cube(8).unwrap();
    let (u, v) = (field(&l, 0), field(&l, 1));
    group.sample_size(10);
    group.bench_function("oracle/8", |b| b.iter(|| bilinear_oracle(&u, &v, 0.1).unwrap()));
    group.finish();
}

fn stepping(c: &mut Criterion) {
    let mut group = c.benchmark_group("step");
    for n in [16, 32] {
        let l = Lattice::cube(n).unwrap();
        let p = SimParams::new(1.0, 0.01, 10.0, field(&l, 2)).unwrap();
        let s = SimState::new(field(&l, 3), 0.0);
        let cfg = StepperConfig::fixed(1e-3);
        group.bench_function(BenchmarkId::new("ifrk4", n), |b| b.iter(|| step(&s, &p, &cfg).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, transforms, nonlinear, stepping);
criterion_main!(benches);
