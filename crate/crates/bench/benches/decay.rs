use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use mimo_decay::lattice_codes::random_ensemble;
use mimo_decay::reduction_lemma::run_reduction_suite;
use mimo_decay::{brute_force_decay, construct_witness, gram_det, Complex64, ComplexMat};

fn bench_gram_det(c: &mut Criterion) {
    let mut group = c.benchmark_group("gram_det");
    for rows in [2usize, 4, 8] {
        let data = (0..rows * 8).map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos())).collect();
        let m = ComplexMat::new(rows, 8, data).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(rows), &m, |b, m| b.iter(|| gram_det(black_box(m))));
    }
    group.finish();
}

fn bench_oracle(c: &mut Criterion) {
    let e = random_ensemble(2, 1, 2, 1).unwrap().with_uniform_bound(1).unwrap();
    c.bench_function("brute_force_decay U=2 n=1 k=2 N=1", |b| b.iter(|| brute_force_decay(black_box(&e), u64::MAX)));
}

fn bench_witness(c: &mut Criterion) {
    let mut group = c.benchmark_group("construct_witness");
    group.sample_size(10);
    let e = random_ensemble(2, 1, 2, 1).unwrap();
    for bound in [4u64, 64] {
        let windowed = e.with_uniform_bound(bound).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(bound), &windowed, |b, w| {
            b.iter(|| construct_witness(black_box(w), 100_000, 1))
        });
    }
    group.finish();
}

fn bench_reduction_suite(c: &mut Criterion) {
    c.bench_function("reduction suite 1000", |b| b.iter(|| run_reduction_suite(1000, 0, 1e-9)));
}

criterion_group!(benches, bench_gram_det, bench_oracle, bench_witness, bench_reduction_suite);
criterion_main!(benches);
