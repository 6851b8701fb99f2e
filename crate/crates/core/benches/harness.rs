use asymconj::cgf::{property_checks, tilted_minimise, CgfModel};
use asymconj::wellposed::{gen_minimising_sequences, minimise, Problem, Strategy, TraceOptions};
use criterion::{criterion_group, criterion_main, Criterion};

fn single_thread<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(f)
}

fn traces(c: &mut Criterion) {
    let prob = Problem::half_euclidean_square(vec![-1.0, -1.0], 0.02, 1 << 22).unwrap();
    let report = minimise(&prob).unwrap();
    let opts = TraceOptions::default();
    let run = || {
        for s in Strategy::GENERATED {
            gen_minimising_sequences(&prob, &report, s, 64, 7, &opts).unwrap();
        }
    };
    let mut group = c.benchmark_group("traces");
    group.sample_size(10);
    group.bench_function("pool", |b| b.iter(run));
    group.bench_function("one", |b| b.iter(|| single_thread(run)));
    group.bench_function("minimise/pool", |b| b.iter(|| minimise(&prob).unwrap()));
    group.bench_function("minimise/one", |b| {
        b.iter(|| single_thread(|| minimise(&prob).unwrap()))
    });
    group.finish();
}

fn multi_start(c: &mut Criterion) {
    let model = CgfModel::random(8, 3, 1).unwrap();
    let y = vec![1.0 / 8.0; 8];
    let mut group = c.benchmark_group("cgf");
    group.sample_size(10);
    group.bench_function("tilted_64/pool", |b| {
        b.iter(|| tilted_minimise(&model, &y, 64, 0).unwrap())
    });
    group.bench_function("tilted_64/one", |b| {
        b.iter(|| single_thread(|| tilted_minimise(&model, &y, 64, 0).unwrap()))
    });
    group.bench_function("properties/pool", |b| {
        b.iter(|| property_checks(&model, 10_000, 0))
    });
    group.bench_function("properties/one", |b| {
        b.iter(|| single_thread(|| property_checks(&model, 10_000, 0)))
    });
    group.finish();
}

criterion_group!(benches, traces, multi_start);
criterion_main!(benches);
