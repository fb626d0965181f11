//! Robust iterative hard thresholding.
//!
//! ```text
//! β⁰ = 0,   β^{t+1} = H_{k′}(β^t − η Ĝ^t)
//! ```
//!
//! where `Ĝ^t` is a robust estimate of the mean gradient at `β^t` produced by
//! any [`GradientEstimator`].

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::CorruptedDataset;
use crate::ellipsoid::{estimate_sparse_mean_ellipsoid, EllipsoidConfig};
use crate::error::{Error, Result};
use crate::filter::{estimate_sparse_mean_filter, gradient_samples_with, FilterConfig, GradientBatch, RsgeOutcome};
use crate::par::Execution;
use crate::sparse::{hard_threshold, SparseVector};

/// A robust sparse gradient estimator.
pub trait GradientEstimator {
    fn estimate(&self, batch: &GradientBatch, rng: &mut dyn RngCore) -> Result<RsgeOutcome>;
}

impl GradientEstimator for FilterConfig {
    fn estimate(&self, batch: &GradientBatch, rng: &mut dyn RngCore) -> Result<RsgeOutcome> {
        estimate_sparse_mean_filter(batch, self, rng)
    }
}

impl GradientEstimator for EllipsoidConfig {
    fn estimate(&self, batch: &GradientBatch, _rng: &mut dyn RngCore) -> Result<RsgeOutcome> {
        estimate_sparse_mean_ellipsoid(batch, self)
    }
}

/// The plain sample mean; turns the loop into classical IHT.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleMean;

impl GradientEstimator for SampleMean {
    fn estimate(&self, batch: &GradientBatch, _rng: &mut dyn RngCore) -> Result<RsgeOutcome> {
        Ok(RsgeOutcome {
            estimate: SparseVector::new(batch.mean(), batch.dim())?,
            removed_ids: Vec::new(),
            lambda_trace: Vec::new(),
            rho_trace: Vec::new(),
            certified: true,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RsgeKind {
    Filtering(FilterConfig),
    Ellipsoid(EllipsoidConfig),
    SampleMean,
}

impl GradientEstimator for RsgeKind {
    fn estimate(&self, batch: &GradientBatch, rng: &mut dyn RngCore) -> Result<RsgeOutcome> {
        match self {
            RsgeKind::Filtering(cfg) => cfg.estimate(batch, rng),
            RsgeKind::Ellipsoid(cfg) => cfg.estimate(batch, rng),
            RsgeKind::SampleMean => SampleMean.estimate(batch, rng),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IhtConfig {
    pub k_prime: usize,
    pub eta: f64,
    pub t_max: usize,
    #[serde(default)]
    pub sample_splitting: bool,
    pub rsge: RsgeKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub execution: Execution,
}

impl IhtConfig {
    pub fn validate(&self, d: usize) -> Result<()> {
        if self.k_prime == 0 || self.k_prime > d {
            return Err(Error::config(format!("k_prime must lie in [1, {d}], got {}", self.k_prime)));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::config("eta must be positive and finite"));
        }
        Ok(())
    }
}

/// `H_{k′}(β − η Ĝ)`.
pub fn iht_step(beta: &SparseVector, g_hat: &[f64], eta: f64, k_prime: usize) -> Result<SparseVector> {
    if g_hat.len() != beta.dim() {
        return Err(Error::input(format!("gradient has length {}, beta {}", g_hat.len(), beta.dim())));
    }
    let z: Vec<f64> = beta.values().iter().zip(g_hat).map(|(b, g)| b - eta * g).collect();
    hard_threshold(&z, k_prime)
}

/// `k′ = ⌈(μ_β/μ_α)² k⌉`, `η = 1/μ_β`, `T = ⌈10 ln(‖β*‖/√ψ)⌉` clamped to `[5, 100]`.
pub fn default_hyperparams(k: usize, mu_alpha: f64, mu_beta: f64, norm_beta_star: f64, psi: f64) -> Result<(usize, f64, usize)> {
    if !(mu_alpha > 0.0 && mu_alpha <= mu_beta) {
        return Err(Error::config(format!("need 0 < mu_alpha <= mu_beta, got {mu_alpha}, {mu_beta}")));
    }
    let ratio = mu_beta / mu_alpha;
    let k_prime = (ratio * ratio * k as f64 - 1e-9).ceil().max(k as f64) as usize;
    let t = (10.0 * (norm_beta_star / psi.sqrt()).ln()).ceil();
    let t_max = if t.is_nan() { 5.0 } else { t.clamp(5.0, 100.0) } as usize;
    Ok((k_prime, 1.0 / mu_beta, t_max))
}

/// `ψ = ε σ² + 1e-12`.
pub fn psi_default(epsilon: f64, sigma_sq: f64) -> f64 {
    epsilon * sigma_sq + 1e-12
}

/// Per-iteration summary of the gradient estimator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RsgeSummary {
    pub certified: bool,
    pub steps: usize,
    pub removed: usize,
    /// Removed samples that are marked as outliers in the dataset.
    pub outliers_removed: usize,
    pub final_lambda: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IhtTrace {
    /// `β⁰, …, β^T`.
    pub betas: Vec<SparseVector>,
    /// `‖β^t − β*‖` when the truth was supplied.
    pub errors: Option<Vec<f64>>,
    pub rsge_diagnostics: Vec<RsgeSummary>,
}

impl IhtTrace {
    pub fn final_beta(&self) -> &SparseVector {
        self.betas.last().expect("trace holds the initializer")
    }
}

pub fn robust_iht(ds: &CorruptedDataset, cfg: &IhtConfig, truth: Option<&SparseVector>) -> Result<IhtTrace> {
    robust_iht_with(ds, cfg, &cfg.rsge, truth)
}

/// Runs the loop with an arbitrary estimator; `cfg.rsge` is ignored.
pub fn robust_iht_with(
    ds: &CorruptedDataset,
    cfg: &IhtConfig,
    estimator: &dyn GradientEstimator,
    truth: Option<&SparseVector>,
) -> Result<IhtTrace> {
    if ds.is_empty() {
        return Err(Error::input("empty dataset"));
    }
    let d = ds.dim();
    cfg.validate(d)?;
    if let Some(t) = truth {
        if t.dim() != d {
            return Err(Error::input("truth has the wrong dimension"));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let folds: Option<Vec<Vec<usize>>> = if cfg.sample_splitting && cfg.t_max > 0 {
        if ds.len() < cfg.t_max {
            return Err(Error::config(format!("{} samples cannot be split into {} folds", ds.len(), cfg.t_max)));
        }
        let mut order: Vec<usize> = (0..ds.len()).collect();
        order.shuffle(&mut rng);
        let size = ds.len() / cfg.t_max;
        Some(order.chunks_exact(size).take(cfg.t_max).map(|c| c.to_vec()).collect())
    } else {
        None
    };

    let mut beta = SparseVector::zeros(d, cfg.k_prime);
    let mut betas = vec![beta.clone()];
    let mut diagnostics = Vec::with_capacity(cfg.t_max);
    for t in 0..cfg.t_max {
        let (batch, positions) = match &folds {
            Some(f) => {
                let sub = ds.subset(&f[t]);
                (gradient_samples_with(&sub, &beta, cfg.execution)?, Some(&f[t]))
            }
            None => (gradient_samples_with(ds, &beta, cfg.execution)?, None),
        };
        let out = estimator.estimate(&batch, &mut rng)?;
        let removed: Vec<usize> = match positions {
            Some(p) => out.removed_ids.iter().map(|&i| p[i]).collect(),
            None => out.removed_ids.clone(),
        };
        diagnostics.push(RsgeSummary {
            certified: out.certified,
            steps: out.lambda_trace.len(),
            removed: removed.len(),
            outliers_removed: removed.iter().filter(|&&i| ds.outlier_mask()[i]).count(),
            final_lambda: out.lambda_trace.last().copied(),
        });
        beta = iht_step(&beta, out.estimate.values(), cfg.eta, cfg.k_prime)?;
        betas.push(beta.clone());
    }
    let errors = truth.map(|t| betas.iter().map(|b| b.distance(t.values())).collect());
    Ok(IhtTrace {
        betas,
        errors,
        rsge_diagnostics: diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_examples() {
        let zero = SparseVector::zeros(3, 2);
        assert_eq!(iht_step(&zero, &[0.0; 3], 0.7, 2).unwrap().values(), &[0.0; 3]);
        let b = SparseVector::new(vec![1.0, 0.0], 1).unwrap();
        assert_eq!(iht_step(&b, &[1.0, -2.0], 1.0, 1).unwrap().values(), &[0.0, 2.0]);
        let star = SparseVector::new(vec![0.0, 1.0, -1.0, 0.0], 2).unwrap();
        assert_eq!(iht_step(&star, &[0.0; 4], 0.5, 3).unwrap().values(), star.values());
        assert!(iht_step(&star, &[0.0; 3], 0.5, 3).is_err());
    }

    #[test]
    fn hyperparam_examples() {
        assert_eq!(default_hyperparams(5, 1.0, 1.0, 5f64.sqrt(), 1e-3).unwrap().0, 5);
        let (kp, eta, _) = default_hyperparams(5, 0.5, 1.0, 1.0, 1.0).unwrap();
        assert_eq!((kp, eta), (20, 1.0));
        let (_, _, t) = default_hyperparams(5, 1.0, 1.0, 5f64.sqrt(), 1e-12).unwrap();
        assert!((5..=100).contains(&t));
        assert_eq!(default_hyperparams(5, 1.0, 1.0, 1.0, 1.0).unwrap().2, 5);
        assert!(default_hyperparams(5, 2.0, 1.0, 1.0, 1.0).is_err());
    }
}
