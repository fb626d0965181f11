use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use robust_sparse::data::{corrupt, generate_clean, Attack, CorruptionMode, Covariance, ModelConfig};
use robust_sparse::filter::gradient_samples_with;
use robust_sparse::sparse::sparse_largest_eigenvalue_bf_with;
use robust_sparse::{Execution, SparseVector, SymMatrix};

const POLICIES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn kernels(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let model = ModelConfig::with_random_signs(500, 5, 0.3, Covariance::Identity, &mut rng).unwrap();
    let ds = generate_clean(&model, 3000, &mut rng).unwrap();
    let attack = Attack::SignFlip {
        beta_star: model.beta_star.clone(),
    };
    let ds = corrupt(&ds, 0.1, &attack, CorruptionMode::Append, &mut rng).unwrap();
    let beta = SparseVector::zeros(500, 5);
    let batch = gradient_samples_with(&ds, &beta, Execution::Sequential).unwrap();
    let support: Vec<usize> = (0..10).map(|j| j * 50).collect();
    let on = |i: usize| i % 50 == 0;
    let h = SymMatrix::from_fn(500, |i, j| match (on(i) && on(j), i == j) {
        (true, true) => 0.1,
        (true, false) => 0.01,
        _ => 0.0,
    })
    .unwrap();
    let center = batch.mean();

    let raw: Vec<f64> = (0..400).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let a = SymMatrix::from_fn(20, |i, j| raw[i * 20 + j] + raw[j * 20 + i]).unwrap();

    let mut group = c.benchmark_group("kernels");
    group.sample_size(20);
    for (name, exec) in POLICIES {
        group.bench_with_input(BenchmarkId::new("gradients_n3333_d500", name), &exec, |b, &e| {
            b.iter(|| gradient_samples_with(&ds, &beta, e).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("scores_n3333_s10", name), &exec, |b, &e| {
            b.iter(|| batch.quadratic_scores(&h, &support, &center, e))
        });
        group.bench_with_input(BenchmarkId::new("brute_force_d20_s4", name), &exec, |b, &e| {
            b.iter(|| sparse_largest_eigenvalue_bf_with(&a, 4, e).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, kernels);
criterion_main!(benches);
