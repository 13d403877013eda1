use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use pcs_bench::gaussian_fixture;
use pcs_core::lasso::{compute_lambda_path, fit_lasso, fit_path};
use pcs_core::MinRatio;
use std::hint::black_box;

fn single_fit(c: &mut Criterion) {
    let mut group = c.benchmark_group("fit_lasso");
    for p_base in [10, 20] {
        let data = gaussian_fixture(250, p_base, 1);
        let path = compute_lambda_path(&data, 100, MinRatio::AUTO).unwrap();
        let lambda = path.values[50];
        group.bench_with_input(BenchmarkId::from_parameter(data.p()), &data, |b, d| {
            b.iter(|| fit_lasso(black_box(d), lambda, None).unwrap())
        });
    }
    group.finish();
}

fn warm_path(c: &mut Criterion) {
    let data = gaussian_fixture(250, 10, 2);
    let path = compute_lambda_path(&data, 100, MinRatio::AUTO).unwrap();
    c.bench_function("fit_path/100", |b| b.iter(|| fit_path(black_box(&data), &path.values).unwrap()));
}

criterion_group!(benches, single_fit, warm_path);
criterion_main!(benches);
