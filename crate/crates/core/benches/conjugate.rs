use std::hint::black_box;

use asymconj::conjugate::{conjugate_brute, conjugate_fast, GridFn, GridSpec};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn quadratic(n: usize, dim: usize) -> (GridFn, GridSpec) {
    let grid = GridSpec::cube(-2.0, 2.0, n, dim).unwrap();
    let f = GridFn::from_fn(grid.clone(), |x| x.iter().map(|v| v * v).sum()).unwrap();
    (f, grid)
}

fn single_thread<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(f)
}

fn brute_vs_fast(c: &mut Criterion) {
    let mut group = c.benchmark_group("lft_1d");
    for n in [64, 256, 1024] {
        let (f, dual) = quadratic(n, 1);
        group.bench_with_input(BenchmarkId::new("brute", n), &n, |b, _| {
            b.iter(|| conjugate_brute(black_box(&f), &dual, None).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("fast", n), &n, |b, _| {
            b.iter(|| conjugate_fast(black_box(&f), &dual, None).unwrap())
        });
    }
    group.finish();

    let mut group = c.benchmark_group("lft_2d");
    group.sample_size(10);
    for n in [33, 65] {
        let (f, dual) = quadratic(n, 2);
        group.bench_with_input(BenchmarkId::new("brute", n), &n, |b, _| {
            b.iter(|| conjugate_brute(black_box(&f), &dual, None).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("fast", n), &n, |b, _| {
            b.iter(|| conjugate_fast(black_box(&f), &dual, None).unwrap())
        });
    }
    group.finish();
}

fn parallel_vs_sequential(c: &mut Criterion) {
    let mut group = c.benchmark_group("threads");
    group.sample_size(10);
    let (f2, d2) = quadratic(129, 2);
    let (f3, d3) = quadratic(41, 3);
    group.bench_function("brute_2d/pool", |b| {
        b.iter(|| conjugate_brute(&f2, &d2, None).unwrap())
    });
    group.bench_function("brute_2d/one", |b| {
        b.iter(|| single_thread(|| conjugate_brute(&f2, &d2, None).unwrap()))
    });
    group.bench_function("fast_3d/pool", |b| {
        b.iter(|| conjugate_fast(&f3, &d3, None).unwrap())
    });
    group.bench_function("fast_3d/one", |b| {
        b.iter(|| single_thread(|| conjugate_fast(&f3, &d3, None).unwrap()))
    });
    group.finish();
}

criterion_group!(benches, brute_vs_fast, parallel_vs_sequential);
criterion_main!(benches);
