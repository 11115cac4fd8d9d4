use std::hint::black_box;

use activehne_core::aqhn::{borda_select, kmeans, top_b_candidates, DEFAULT_MAX_ITERS};
use activehne_core::{Criterion as Arm, DenseMatrix};
use criterion::{criterion_group, criterion_main, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn bench_query(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let pool: Vec<usize> = (0..2_000).collect();
    let b = 20;
    let sets: Vec<_> = Arm::ARMS
        .iter()
        .map(|&arm| {
            let scores: Vec<f64> = pool.iter().map(|_| rng.random()).collect();
            top_b_candidates(&scores, &pool, b, arm).unwrap()
        })
        .collect();
    let weights = [0.4, 0.9, 1.3];
    c.bench_function("borda_select b=20", |bch| {
        bch.iter(|| borda_select(black_box(&sets), black_box(&weights), b).unwrap())
    });

    let scores: Vec<f64> = pool.iter().map(|_| rng.random()).collect();
    c.bench_function("top_b_candidates 2000", |bch| {
        bch.iter(|| top_b_candidates(black_box(&scores), &pool, b, Arm::Cie).unwrap())
    });

    let e = DenseMatrix::from_fn(600, 9, |_, _| rng.random_range(-1.0..1.0));
    c.bench_function("kmeans 600x9 k=3", |bch| {
        bch.iter(|| kmeans(black_box(&e), 3, 7, DEFAULT_MAX_ITERS).unwrap())
    });
}

criterion_group!(benches, bench_query);
criterion_main!(benches);
