use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use urysohn_bench::{half, laplace_beverton_holt};
use urysohn_core::verification::generators::random_weierstrass;
use urysohn_core::{holder_seminorm, newton_fixed_point, DifferentiableOperator, DiscreteDomain, NewtonOptions};

fn seminorm(c: &mut Criterion) {
    let mut g = c.benchmark_group("holder_seminorm");
    g.sample_size(10);
    for n in [1001, 4001, 10001] {
        let d = DiscreteDomain::uniform_interval(-1.0, 1.0, n).unwrap();
        let u = random_weierstrass(d, 1, 20, 1.0);
        for alpha in [0.5, 1.0] {
            g.bench_with_input(BenchmarkId::new(format!("alpha={alpha}"), n), &u, |b, u| {
                b.iter(|| holder_seminorm(black_box(u), alpha).unwrap())
            });
        }
    }
    g.finish();
}

fn hammerstein(c: &mut Criterion) {
    let mut g = c.benchmark_group("hammerstein");
    for n in [201, 401, 801] {
        let op = laplace_beverton_holt(n);
        let u = half(&op);
        g.bench_with_input(BenchmarkId::new("apply", n), &u, |b, u| b.iter(|| op.apply(black_box(u)).unwrap()));
        g.bench_with_input(BenchmarkId::new("derivative", n), &u, |b, u| {
            b.iter(|| op.derivative(black_box(u), 1).unwrap().to_dense().unwrap())
        });
    }
    g.finish();
}

fn newton(c: &mut Criterion) {
    let mut g = c.benchmark_group("newton");
    g.sample_size(10);
    for n in [201, 401] {
        let op = laplace_beverton_holt(n);
        let u0 = half(&op);
        let opts = NewtonOptions {
            pre_iterations: 3,
            ..Default::default()
        };
        g.bench_with_input(BenchmarkId::from_parameter(n), &u0, |b, u0| {
            b.iter(|| newton_fixed_point(&op, black_box(u0), &opts).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, seminorm, hammerstein, newton);
criterion_main!(benches);
