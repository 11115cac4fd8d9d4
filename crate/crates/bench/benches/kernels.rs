use std::hint::black_box;

use activehne_core::numerics::{dense_matmul, matmul_nt, matmul_tn, spmm};
use activehne_core::{DenseMatrix, SparseMatrix};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_dense(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

fn random_sparse(rng: &mut ChaCha8Rng, n: usize, avg_degree: usize) -> SparseMatrix {
    let triplets: Vec<(usize, usize, f64)> = (0..n * avg_degree)
        .map(|_| (rng.random_range(0..n), rng.random_range(0..n), 1.0))
        .collect();
    SparseMatrix::from_triplets(n, n, triplets).unwrap()
}

fn bench_spmm(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut group = c.benchmark_group("spmm");
    for n in [1_000, 10_000] {
        let s = random_sparse(&mut rng, n, 8);
        let x = random_dense(&mut rng, n, 16);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| spmm(black_box(&s), black_box(&x)).unwrap())
        });
    }
    group.finish();
}

fn bench_dense(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let a = random_dense(&mut rng, 600, 48);
    let b = random_dense(&mut rng, 48, 16);
    let g = random_dense(&mut rng, 600, 16);
    c.bench_function("dense_matmul 600x48x16", |bch| {
        bch.iter(|| dense_matmul(black_box(&a), black_box(&b)).unwrap())
    });
    c.bench_function("matmul_tn 600x48 600x16", |bch| {
        bch.iter(|| matmul_tn(black_box(&a), black_box(&g)).unwrap())
    });
    c.bench_function("matmul_nt 600x16 48x16", |bch| {
        bch.iter(|| matmul_nt(black_box(&g), black_box(&b.transpose())).unwrap())
    });
}

criterion_group!(benches, bench_spmm, bench_dense);
criterion_main!(benches);
