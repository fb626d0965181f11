//! Two-sample instance on which λ* falls below the sparse operator norm.

use std::time::Instant;

use robust_sparse::linalg::gram;
use robust_sparse::relax::{solve_relaxation, SolverOptions};
use robust_sparse::sparse::{hard_threshold, sparse_operator_norm_bf};
use robust_sparse::SymMatrix;
use serde::Serialize;

pub const EXPECTED_LAMBDA: f64 = 0.5625;
pub const LAMBDA_TOLERANCE: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CounterexampleReport {
    pub samples: Vec<Vec<f64>>,
    pub true_mean: Vec<f64>,
    pub k_tilde: usize,
    pub sigma_hat: Vec<Vec<f64>>,
    pub lambda_star: f64,
    pub sparse_operator_norm: f64,
    pub elapsed_ms: f64,
    pub failures: Vec<String>,
}

impl CounterexampleReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// `x₁ = [2.5, 0]`, `x₂ = [0, 0]`, `k̃ = 1`, `F = I`: `Σ̂ − F = diag(0.5625, −1)`
/// has `λ* = 0.5625` while its 1-sparse operator norm is 1.
pub fn run_counterexample() -> anyhow::Result<CounterexampleReport> {
    let start = Instant::now();
    let samples = vec![vec![2.5, 0.0], vec![0.0, 0.0]];
    let k_tilde = 1;
    let mean: Vec<f64> = (0..2).map(|j| samples.iter().map(|s| s[j]).sum::<f64>() / 2.0).collect();
    let center = hard_threshold(&mean, 2 * k_tilde)?;
    let centered = faer::Mat::from_fn(2, 2, |i, j| samples[i][j] - center.values()[j]);
    let sigma_hat = gram(centered.as_ref(), 0.5);
    let e = sigma_hat.sub(&SymMatrix::identity(2));
    let lambda_star = solve_relaxation(&e, k_tilde, &SolverOptions::default())?.lambda_star;
    let norm = sparse_operator_norm_bf(&e, k_tilde)?;

    let mut failures = Vec::new();
    if (sigma_hat.get(0, 0) - 1.5625).abs() > 1e-12 || sigma_hat.get(1, 1).abs() > 1e-12 {
        failures.push(format!("sigma_hat = {:?}", sigma_hat.to_rows()));
    }
    if (lambda_star - EXPECTED_LAMBDA).abs() > LAMBDA_TOLERANCE {
        failures.push(format!("lambda* = {lambda_star}, expected {EXPECTED_LAMBDA} ± {LAMBDA_TOLERANCE}"));
    }
    if norm != 1.0 {
        failures.push(format!("sparse operator norm = {norm}, expected 1"));
    }
    if !(lambda_star < norm) {
        failures.push(format!("lambda* = {lambda_star} is not below the sparse operator norm {norm}"));
    }
    Ok(CounterexampleReport {
        samples,
        true_mean: vec![1.0, 0.0],
        k_tilde,
        sigma_hat: sigma_hat.to_rows(),
        lambda_star,
        sparse_operator_norm: norm,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces() {
        let r = run_counterexample().unwrap();
        assert!(r.passed(), "{:?}", r.failures);
        assert_eq!(r.sigma_hat, vec![vec![1.5625, 0.0], vec![0.0, 0.0]]);
    }
}
