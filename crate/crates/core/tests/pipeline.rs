use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use robust_sparse::data::{corrupt, generate_clean, Attack, CorruptedDataset, CorruptionMode, Covariance, ModelConfig};
use robust_sparse::ellipsoid::{estimate_sparse_mean_ellipsoid, EllipsoidConfig};
use robust_sparse::filter::{estimate_sparse_mean_filter, gradient_samples_with, FilterConfig};
use robust_sparse::iht::{iht_step, robust_iht, robust_iht_with, IhtConfig, RsgeKind, SampleMean};
use robust_sparse::sparse::hard_threshold;
use robust_sparse::{Execution, SparseVector, SymMatrix};

fn corrupted(d: usize, k: usize, n: usize, sigma: f64, eps: f64, seed: u64) -> (ModelConfig, CorruptedDataset) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let model = ModelConfig::with_random_signs(d, k, sigma, Covariance::Identity, &mut rng).unwrap();
    let ds = generate_clean(&model, n, &mut rng).unwrap();
    let attack = Attack::SignFlip {
        beta_star: model.beta_star.clone(),
    };
    let ds = corrupt(&ds, eps, &attack, CorruptionMode::Append, &mut rng).unwrap();
    (model, ds)
}

fn iht_config(k: usize, t_max: usize, rsge: RsgeKind, exec: Execution) -> IhtConfig {
    IhtConfig {
        k_prime: k,
        eta: 1.0,
        t_max,
        sample_splitting: false,
        rsge,
        seed: 17,
        execution: exec,
    }
}

fn filter(k_tilde: usize, eps: f64, exec: Execution) -> FilterConfig {
    FilterConfig {
        k_tilde,
        epsilon: Some(eps),
        removals_per_step: 4,
        execution: exec,
        ..FilterConfig::default()
    }
}

#[test]
fn clean_data_is_recovered() {
    let (model, ds) = corrupted(50, 3, 500, 0.0, 0.0, 1);
    let cfg = iht_config(3, 40, RsgeKind::Filtering(filter(6, 0.0, Execution::Sequential)), Execution::Sequential);
    let trace = robust_iht(&ds, &cfg, Some(&model.beta_star)).unwrap();
    let err = *trace.errors.unwrap().last().unwrap();
    assert!(err < 1e-6, "final error {err}");
}

#[test]
fn sample_mean_is_classical_iht() {
    let (model, ds) = corrupted(40, 3, 300, 0.1, 0.0, 2);
    let cfg = iht_config(3, 10, RsgeKind::SampleMean, Execution::Sequential);
    let trace = robust_iht_with(&ds, &cfg, &SampleMean, Some(&model.beta_star)).unwrap();

    let (n, d) = (ds.len(), ds.dim());
    let mut beta = SparseVector::zeros(d, 3);
    for t in 0..10 {
        let mut grad = vec![0.0; d];
        for i in 0..n {
            let x = ds.x(i);
            let r: f64 = x.iter().zip(beta.values()).map(|(a, b)| a * b).sum::<f64>() - ds.y(i);
            grad.iter_mut().zip(x).for_each(|(g, xi)| *g += xi * r);
        }
        grad.iter_mut().for_each(|g| *g /= n as f64);
        beta = hard_threshold(&beta.values().iter().zip(&grad).map(|(b, g)| b - g).collect::<Vec<_>>(), 3).unwrap();
        let from_lib = &trace.betas[t + 1];
        let diff = from_lib.values().iter().zip(beta.values()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(diff < 1e-12, "iteration {t}: {diff}");
        beta = from_lib.clone();
    }
    assert_eq!(robust_iht(&ds, &cfg, None).unwrap().betas, trace.betas);
}

#[test]
fn zero_iterations_return_the_initializer() {
    let (model, ds) = corrupted(10, 2, 50, 0.0, 0.1, 3);
    let cfg = iht_config(2, 0, RsgeKind::SampleMean, Execution::Sequential);
    let trace = robust_iht(&ds, &cfg, Some(&model.beta_star)).unwrap();
    assert_eq!(trace.betas, vec![SparseVector::zeros(10, 2)]);
    assert!(trace.rsge_diagnostics.is_empty());
}

#[test]
fn stationary_at_truth() {
    let star = SparseVector::new(vec![0.0, 1.5, 0.0, -1.0, 0.0], 2).unwrap();
    assert_eq!(iht_step(&star, &[0.0; 5], 0.3, 2).unwrap(), star);
    let (model, ds) = corrupted(20, 2, 200, 0.0, 0.0, 4);
    let batch = gradient_samples_with(&ds, &model.beta_star, Execution::Sequential).unwrap();
    let cfg = filter(4, 0.0, Execution::Sequential);
    let out = estimate_sparse_mean_filter(&batch, &cfg, &mut cfg.rng()).unwrap();
    assert_eq!(iht_step(&model.beta_star, out.estimate.values(), 1.0, 2).unwrap(), model.beta_star);
}

#[test]
fn sample_splitting_uses_disjoint_folds() {
    let (model, ds) = corrupted(30, 2, 600, 0.0, 0.1, 5);
    let mut cfg = iht_config(2, 6, RsgeKind::Filtering(filter(4, 0.1, Execution::Sequential)), Execution::Sequential);
    cfg.sample_splitting = true;
    let a = robust_iht(&ds, &cfg, Some(&model.beta_star)).unwrap();
    assert_eq!(a, robust_iht(&ds, &cfg, Some(&model.beta_star)).unwrap());
    let removed: usize = a.rsge_diagnostics.iter().map(|s| s.removed).sum();
    assert!(removed <= ds.len());
    cfg.t_max = ds.len() + 1;
    assert!(robust_iht(&ds, &cfg, None).is_err());
}

#[test]
fn policies_agree_on_every_kernel() {
    let (model, ds) = corrupted(80, 4, 900, 0.1, 0.1, 6);
    let beta = SparseVector::zeros(80, 4);
    let seq = gradient_samples_with(&ds, &beta, Execution::Sequential).unwrap();
    let par = gradient_samples_with(&ds, &beta, Execution::Parallel).unwrap();
    assert_eq!(seq, par);

    let support = [3, 10, 40, 79];
    let on = |i: usize| support.contains(&i);
    let h = SymMatrix::from_fn(80, |i, j| match (on(i) && on(j), i == j) {
        (true, true) => 0.25,
        (true, false) => 0.05,
        _ => 0.0,
    })
    .unwrap();
    let center = seq.mean();
    assert_eq!(
        seq.quadratic_scores(&h, &support, &center, Execution::Sequential),
        seq.quadratic_scores(&h, &support, &center, Execution::Parallel)
    );

    for exec in [Execution::Sequential, Execution::Parallel] {
        let cfg = filter(8, 0.1, exec);
        let a = estimate_sparse_mean_filter(&seq, &cfg, &mut cfg.rng()).unwrap();
        let b = estimate_sparse_mean_filter(&seq, &filter(8, 0.1, Execution::Sequential), &mut cfg.rng()).unwrap();
        assert_eq!(a, b);
        let e = EllipsoidConfig {
            k_tilde: 8,
            epsilon: 0.1,
            budget: 5,
            execution: exec,
            ..EllipsoidConfig::default()
        };
        let seq_e = EllipsoidConfig {
            execution: Execution::Sequential,
            ..e.clone()
        };
        assert_eq!(estimate_sparse_mean_ellipsoid(&seq, &e).unwrap(), estimate_sparse_mean_ellipsoid(&seq, &seq_e).unwrap());
    }

    let run = |exec| {
        let cfg = iht_config(4, 5, RsgeKind::Filtering(filter(8, 0.1, exec)), exec);
        robust_iht(&ds, &cfg, Some(&model.beta_star)).unwrap()
    };
    assert_eq!(run(Execution::Sequential), run(Execution::Parallel));
}

#[test]
fn seeded_pipeline_is_reproducible() {
    let build = || corrupted(60, 3, 500, 0.2, 0.1, 7);
    let (m1, d1) = build();
    let (m2, d2) = build();
    assert_eq!((&m1, &d1), (&m2, &d2));
    let cfg = iht_config(3, 6, RsgeKind::Filtering(filter(6, 0.1, Execution::Parallel)), Execution::Parallel);
    assert_eq!(robust_iht(&d1, &cfg, Some(&m1.beta_star)).unwrap(), robust_iht(&d2, &cfg, Some(&m2.beta_star)).unwrap());
}
