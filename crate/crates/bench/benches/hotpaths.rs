//! Microbenchmarks for the paths that dominate experiment runtime: the
//! lattice RK4 step, ansatz evaluation, correction-sequence builds and one
//! pseudospectral KdV step batch.

use criterion::{criterion_group, criterion_main, Criterion};
use fput_kdv_core::approximator::{gamma_build, Approximator, ApproximatorConfig, ExpansionOrder};
use fput_kdv_core::integrator::{rk4_step_raw, FputSystem, Rk4Buffers};
use fput_kdv_core::kdv::{kdv_evolve, EvolveOptions, KdvGridSpec, WaveFamily};
use fput_kdv_core::lattice::{make_mass, LatticeState, MassSpec, NoiseSequence};
use std::hint::black_box;

fn bench_rk4_step(c: &mut Criterion) {
    let m = 8192i64;
    let noise = NoiseSequence::sample_default(1, -(m + 2)..=(m + 2));
    let mass = make_mass(MassSpec::Transparent(&noise), m).unwrap();
    let state = LatticeState::from_profiles(
        m,
        |j| 0.05 * (-(j as f64 / 200.0).powi(2)).exp(),
        |j| -0.05 * (-(j as f64 / 200.0).powi(2)).exp(),
    );
    let sys = FputSystem::new(&mass);
    let mut y: Vec<f64> = state.q.iter().chain(&state.p).cloned().collect();
    let mut buf = Rk4Buffers::new(y.len());
    c.bench_function("rk4_step_16k_sites", |b| {
        b.iter(|| {
            rk4_step_raw(&sys, black_box(&mut y), 0.1, &mut buf);
        })
    });
}

fn bench_gamma_build(c: &mut Criterion) {
    let m = 40_000i64;
    let noise = NoiseSequence::sample_default(2, -(m + 2)..=(m + 2));
    c.bench_function("gamma_build_80k_sites", |b| {
        b.iter(|| black_box(gamma_build(&noise, 0.0625, m).unwrap()))
    });
}

fn bench_extended_evaluate(c: &mut Criterion) {
    let m = 12_416i64;
    let eps = 0.125;
    let noise = NoiseSequence::sample_default(3, -(m + 2)..=(m + 2));
    let gammas = gamma_build(&noise, eps, m).unwrap();
    let family = WaveFamily::soliton(noise.sigma2);
    let cfg = ApproximatorConfig::new(eps, 3.0, ExpansionOrder::Extended);
    let approx = Approximator::extended(cfg, &family, &noise, &gammas).unwrap();
    let n = (2 * m + 1) as usize;
    let mut q = vec![0.0; n];
    let mut p = vec![0.0; n];
    c.bench_function("extended_evaluate_25k_sites", |b| {
        b.iter(|| {
            approx
                .evaluate_into(black_box(700.0), &mut q, &mut p)
                .unwrap()
        })
    });
}

fn bench_kdv_evolve(c: &mut Criterion) {
    let spec = KdvGridSpec::centered(1024, 32.0);
    let fam = WaveFamily::soliton(1.0 / 192.0);
    let a0: Vec<f64> = (0..spec.modes)
        .map(|i| {
            let w = spec.x0 + i as f64 * spec.length / spec.modes as f64;
            fam.a_jet(w, 0.0).unwrap().value
        })
        .collect();
    let opts = EvolveOptions {
        dt: Some(2e-3),
        snapshots: 2,
    };
    c.bench_function("kdv_evolve_1024_modes_T0.05", |b| {
        b.iter(|| black_box(kdv_evolve(&a0, None, 1.0 / 192.0, 0.05, &spec, &opts).unwrap()))
    });
}

criterion_group!(
    benches,
    bench_rk4_step,
    bench_gamma_build,
    bench_extended_evaluate,
    bench_kdv_evolve
);
criterion_main!(benches);
