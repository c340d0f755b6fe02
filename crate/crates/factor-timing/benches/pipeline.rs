//! Parallel-vs-sequential benchmarks for the hot loops: the expanding
//! window refit schedule and forest fitting.
//!
//! Both sides run the same code; "seq" executes inside a one-thread rayon
//! pool, "par" on the default pool. Results are bit-identical either way —
//! the point of the comparison is wall-clock scaling. (A rayon-free build
//! is available with `--no-default-features`, which removes this bench.)

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use factor_timing::models::{fit_random_forest, ForestParams};
use factor_timing::{expanding_window_forecast, synthetic, ModelKind, ModelSpec, Month, SplitSpec};

fn pools() -> [(&'static str, rayon::ThreadPool); 2] {
    let seq = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let par = rayon::ThreadPoolBuilder::new().build().unwrap();
    [("seq", seq), ("par", par)]
}

fn bench_expanding_window(c: &mut Criterion) {
    let start = Month::new(196307).unwrap();
    let ds = synthetic::dataset(start, 360, 42);
    let split = SplitSpec::new(
        start,
        start.add_months(299).unwrap(),
        start.add_months(300).unwrap(),
        start.add_months(359).unwrap(),
    )
    .unwrap();

    let mut group = c.benchmark_group("expanding_window_forecast");
    group.sample_size(10);
    for kind in [ModelKind::OlsCt, ModelKind::RandomForest] {
        let spec = {
            let mut s = ModelSpec::new(kind);
            s.rf.n_trees = 50;
            s
        };
        for (name, pool) in pools() {
            group.bench_with_input(
                BenchmarkId::new(kind.key(), name),
                &spec,
                |b, spec| {
                    b.iter(|| {
                        pool.install(|| expanding_window_forecast(&ds, &split, spec).unwrap())
                    })
                },
            );
        }
    }
    group.finish();
}

fn bench_forest_fit(c: &mut Criterion) {
    let start = Month::new(196307).unwrap();
    let ds = synthetic::dataset(start, 480, 7);
    let end = *ds.months().last().unwrap();
    let (x, y) = ds.design_between(ds.first_usable_month(), end);
    let params = ForestParams::default();

    let mut group = c.benchmark_group("forest_fit_100_trees");
    group.sample_size(10);
    for (name, pool) in pools() {
        group.bench_function(name, |b| {
            b.iter(|| pool.install(|| fit_random_forest(&x, &y, &params, 9).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_expanding_window, bench_forest_fit);
criterion_main!(benches);
