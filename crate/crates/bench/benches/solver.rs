use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use greenbvp::linalg::{lu_factor, mat_exp};
use greenbvp::solver::{dense_solve, leaf_solve, solve_prepared, solve_prepared_with, Discretization, SolveOptions};
use greenbvp::DenseMatrix;
use greenbvp_bench::{prepared, uniform};

fn solve_scaling(c: &mut Criterion) {
    let p = prepared("bessel");
    let mut group = c.benchmark_group("bessel_solve");
    group.sample_size(20);
    for panels in [64, 128, 256, 512] {
        let grid = uniform(&p, panels, 16);
        group.throughput(Throughput::Elements((2 * 16 * panels) as u64));
        group.bench_with_input(BenchmarkId::new("fast", panels), &grid, |b, g| {
            b.iter(|| solve_prepared(&p, black_box(g)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("fast_refined", panels), &grid, |b, g| {
            b.iter(|| solve_prepared_with(&p, black_box(g), SolveOptions { refinement_steps: 1 }).unwrap())
        });
    }
    group.finish();
}

fn dense_reference(c: &mut Criterion) {
    let p = prepared("bessel");
    let mut group = c.benchmark_group("bessel_dense");
    group.sample_size(10);
    for panels in [16, 32] {
        let grid = uniform(&p, panels, 16);
        group.bench_with_input(BenchmarkId::from_parameter(panels), &grid, |b, g| {
            b.iter(|| dense_solve(&p, black_box(g)).unwrap())
        });
    }
    group.finish();
}

fn leaf(c: &mut Criterion) {
    let p = prepared("beam");
    let mut group = c.benchmark_group("leaf_solve");
    for order in [8, 16, 24] {
        let disc = Discretization::new(&p, &uniform(&p, 4, order)).unwrap();
        let data = &disc.leaves()[1];
        group.bench_function(BenchmarkId::from_parameter(order), |b| {
            b.iter(|| leaf_solve(black_box(data), disc.ops(), 1).unwrap())
        });
    }
    group.finish();
}

fn linalg(c: &mut Criterion) {
    let m = DenseMatrix::from_fn(8, 8, |i, j| ((i * 8 + j) as f64 * 0.37).sin() * if i == j { 4.0 } else { 1.0 });
    c.bench_function("mat_exp_8", |b| b.iter(|| mat_exp(black_box(&m)).unwrap()));
    let a = DenseMatrix::from_fn(64, 64, |i, j| if i == j { 10.0 } else { ((i + 2 * j) as f64).cos() });
    c.bench_function("lu_factor_64", |b| b.iter(|| lu_factor(black_box(&a)).unwrap()));
}

criterion_group!(benches, solve_scaling, dense_reference, leaf, linalg);
criterion_main!(benches);
