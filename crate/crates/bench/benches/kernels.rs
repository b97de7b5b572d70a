use std::hint::black_box;

use bps_bench::{FullFixture, RestrictedFixture};
use bps_core::deriv::{jacobian_det, partial_x};
use bps_core::fit::fit_uv;
use bps_core::{
    builtin_potential, residual_bogomolny_restricted, solve_full_bps, solve_profile, Branch, ModelParams,
    SolverOptions,
};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn derivatives(c: &mut Criterion) {
    let mut group = c.benchmark_group("derivatives");
    for n in [129, 257, 513] {
        let fx = RestrictedFixture::new(n);
        group.bench_with_input(BenchmarkId::new("partial_x", n), &fx.field.u, |b, u| b.iter(|| partial_x(black_box(u))));
        group.bench_with_input(BenchmarkId::new("jacobian", n), &fx.field, |b, w| b.iter(|| jacobian_det(black_box(w))));
    }
    group.finish();
}

fn bogomolny_residual(c: &mut Criterion) {
    let mut group = c.benchmark_group("bogomolny_residual");
    for n in [129, 257, 513] {
        let fx = RestrictedFixture::new(n);
        group.bench_function(BenchmarkId::from_parameter(n), |b| {
            b.iter(|| residual_bogomolny_restricted(black_box(&fx.field), &fx.potential, &fx.params, Branch::Minus))
        });
    }
    group.finish();
}

fn profile_solve(c: &mut Criterion) {
    let params = ModelParams::restricted(1.0).unwrap();
    let mut group = c.benchmark_group("profile_solve");
    for (name, p) in [("bps_test", vec![1.0, 1.0]), ("old_baby", vec![1.0])] {
        let v = builtin_potential(name, &p).unwrap();
        group.bench_function(name, |b| b.iter(|| solve_profile(&v, &params, 1, Branch::Minus, black_box(1.0), 3.0, 1e-10)));
    }
    group.finish();
}

fn uv_fit(c: &mut Criterion) {
    let fx = RestrictedFixture::new(129);
    let data: Vec<f64> = (0..fx.field.u.values.len()).map(|i| 1.0 / (1.0 + fx.field.rho(i)).powi(4)).collect();
    let mask = vec![true; data.len()];
    c.bench_function("fit_uv/129", |b| b.iter(|| fit_uv(black_box(&fx.field), &data, &mask, 10)));
}

fn full_solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_full");
    group.sample_size(10);
    for n in [17, 33] {
        let fx = FullFixture::new(n);
        group.bench_function(BenchmarkId::from_parameter(n), |b| {
            b.iter(|| solve_full_bps(&fx.h2, &fx.params, black_box(&fx.initial), &SolverOptions::new(10, 1e-10)))
        });
    }
    group.finish();
}

criterion_group!(benches, derivatives, bogomolny_residual, profile_solve, uv_fit, full_solve);
criterion_main!(benches);
