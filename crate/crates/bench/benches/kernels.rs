use std::hint::black_box;

use aloha_bench::{controls, rates};
use aloha_core::exact::volume_lambda_exact;
use aloha_core::geometry::{build_outer_ellipsoid, quad_form};
use aloha_core::monte_carlo::volume_lambda_mc;
use aloha_core::region::{forward_map, inverse_map, membership_feasibility};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn maps(c: &mut Criterion) {
    let mut g = c.benchmark_group("map");
    for n in [2, 5, 10] {
        let ps = controls(n, 256, 1);
        g.bench_with_input(BenchmarkId::new("forward", n), &ps, |b, ps| {
            b.iter(|| ps.iter().map(|p| forward_map(black_box(p))[0]).sum::<f64>())
        });
        let xs: Vec<_> = ps.iter().map(forward_map).collect();
        g.bench_with_input(BenchmarkId::new("inverse", n), &xs, |b, xs| {
            b.iter(|| xs.iter().filter(|x| inverse_map(black_box(x), 1e-12, 200).is_ok()).count())
        });
    }
    g.finish();
}

fn membership(c: &mut Criterion) {
    let mut g = c.benchmark_group("membership");
    for n in [2, 4, 8] {
        let xs = rates(n, 90, 2);
        g.bench_with_input(BenchmarkId::from_parameter(n), &xs, |b, xs| {
            b.iter(|| xs.iter().filter(|x| membership_feasibility(black_box(x), 1e-9).is_member()).count())
        });
    }
    g.finish();
}

fn volumes(c: &mut Criterion) {
    let mut g = c.benchmark_group("volume");
    g.sample_size(10);
    g.bench_function("exact_n4", |b| b.iter(|| volume_lambda_exact(black_box(4)).unwrap()));
    g.bench_function("mc_n4_65536", |b| b.iter(|| volume_lambda_mc(4, 1 << 16, black_box(7)).unwrap()));
    g.finish();
}

fn ellipsoid(c: &mut Criterion) {
    let e = build_outer_ellipsoid(5, 100.0).unwrap();
    let xs = rates(5, 256, 3);
    c.bench_function("quad_form_n5", |b| {
        b.iter(|| xs.iter().map(|x| quad_form(&e, black_box(x)).unwrap()).sum::<f64>())
    });
}

criterion_group!(benches, maps, membership, volumes, ellipsoid);
criterion_main!(benches);
