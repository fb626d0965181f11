//! Separation oracle over sample weights and a cutting-plane driver.
//!
//! For weights `w` the oracle thresholds the weighted mean to `Ĝ`, forms the
//! weighted second moment `Σ̂_w` around `Ĝ` and solves the sparse PCA
//! relaxation on `Σ̂_w − F(Ĝ)`, where
//!
//! ```text
//! F(G) = (‖G‖² + σ²) I + G Gᵀ
//! ```
//!
//! is the covariance of clean gradients under identity covariates. A small
//! optimum accepts `w`; otherwise the oracle returns the linear functional
//! `ℓ(w′) = Σ τ_i w′_i − (⟨F, H*⟩ + λ*)`, which vanishes at `w`.
//!
//! The driver replaces the ellipsoid method with projected subgradient steps
//! along the cut normals over the polytope `{Σ w = 1, 0 ≤ w ≤ 1/((1−2ε)n)}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::{GradientBatch, RhoSep, RsgeOutcome};
use crate::linalg::{gram, SymMatrix};
use crate::par::Execution;
use crate::relax::{solve_relaxation_against, SolverOptions, Verdict};
use crate::sparse::{hard_threshold, SparseVector};

/// A point of the balanced-weight polytope.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    weights: Vec<f64>,
    epsilon: f64,
}

impl WeightVector {
    pub fn uniform(n: usize, epsilon: f64) -> Result<Self> {
        Self::check(n, epsilon)?;
        Ok(WeightVector {
            weights: vec![1.0 / n as f64; n],
            epsilon,
        })
    }

    /// Euclidean projection of `v` onto the polytope.
    pub fn project(v: &[f64], epsilon: f64) -> Result<Self> {
        Self::check(v.len(), epsilon)?;
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::input("non-finite weight"));
        }
        Ok(WeightVector {
            weights: project_capped_simplex(v, Self::cap_for(v.len(), epsilon)),
            epsilon,
        })
    }

    fn check(n: usize, epsilon: f64) -> Result<()> {
        if n == 0 {
            return Err(Error::input("no samples to weight"));
        }
        if !(0.0..0.5).contains(&epsilon) {
            return Err(Error::config(format!("epsilon must lie in [0, 1/2), got {epsilon}")));
        }
        Ok(())
    }

    fn cap_for(n: usize, epsilon: f64) -> f64 {
        1.0 / ((1.0 - 2.0 * epsilon) * n as f64)
    }

    pub fn cap(&self) -> f64 {
        Self::cap_for(self.weights.len(), self.epsilon)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    fn is_uniform(&self) -> bool {
        self.weights.iter().all(|&w| w == self.weights[0])
    }
}

/// Projection onto `{Σ w = 1, 0 ≤ w ≤ cap}` (requires `n · cap ≥ 1`): the
/// shift `t` with `Σ clamp(v_i − t, 0, cap) = 1` is found by bisection.
fn project_capped_simplex(v: &[f64], cap: f64) -> Vec<f64> {
    let mass = |t: f64| v.iter().map(|x| (x - t).clamp(0.0, cap)).sum::<f64>();
    let (lo_v, hi_v) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let mut lo = lo_v - cap;
    let mut hi = hi_v;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mass(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * (1.0 + lo.abs().max(hi.abs())) {
            break;
        }
    }
    let mut w: Vec<f64> = v.iter().map(|x| (x - 0.5 * (lo + hi)).clamp(0.0, cap)).collect();
    // Spread the bisection residual over the coordinates that can absorb it.
    let excess = w.iter().sum::<f64>() - 1.0;
    let free: Vec<usize> = (0..w.len())
        .filter(|&i| if excess > 0.0 { w[i] > 0.0 } else { w[i] < cap })
        .collect();
    if !free.is_empty() {
        let share = excess / free.len() as f64;
        for i in free {
            w[i] = (w[i] - share).clamp(0.0, cap);
        }
    }
    w
}

/// `(‖G‖² + σ²) I + G Gᵀ`.
pub fn f_covariance(g: &[f64], sigma: f64) -> SymMatrix {
    let nsq: f64 = g.iter().map(|x| x * x).sum();
    let c = nsq + sigma * sigma;
    SymMatrix::from_fn(g.len(), |i, j| g[i] * g[j] + if i == j { c } else { 0.0 }).expect("finite entries")
}

/// `(L_cov, L_F) = (2‖G‖² + σ², 4‖G‖)`.
pub fn smoothness_constants(g: &[f64], sigma: f64) -> (f64, f64) {
    let nsq: f64 = g.iter().map(|x| x * x).sum();
    (2.0 * nsq + sigma * sigma, 4.0 * nsq.sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OracleVerdict {
    Yes,
    Hyperplane,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleResult {
    pub verdict: OracleVerdict,
    /// `τ_i = (g_i − Ĝ)ᵀ H* (g_i − Ĝ)`; empty on `Yes`.
    pub normal: Vec<f64>,
    /// `⟨F(Ĝ), H*⟩ + λ*`.
    pub offset: f64,
    pub lambda_star: f64,
    pub h_star: SymMatrix,
    /// `Ĝ = H_{2k̃}(Σ w_i g_i)`.
    pub estimate: SparseVector,
}

impl OracleResult {
    /// `ℓ(w′) = Σ a_i w′_i − offset`.
    pub fn evaluate(&self, w: &[f64]) -> f64 {
        self.normal.iter().zip(w).map(|(a, x)| a * x).sum::<f64>() - self.offset
    }
}

fn weighted_estimate(w: &WeightVector, batch: &GradientBatch, k_tilde: usize) -> Result<SparseVector> {
    // Uniform weights reproduce the plain mean bit for bit.
    let mean = if w.is_uniform() { batch.mean() } else { batch.weighted_mean(w.weights()) };
    hard_threshold(&mean, (2 * k_tilde).min(batch.dim()))
}

pub fn separation_oracle(
    w: &WeightVector,
    batch: &GradientBatch,
    k_tilde: usize,
    rho_sep: f64,
    sigma: f64,
    solver: &SolverOptions,
) -> Result<OracleResult> {
    separation_oracle_with(w, batch, k_tilde, rho_sep, sigma, solver, Execution::default())
}

pub fn separation_oracle_with(
    w: &WeightVector,
    batch: &GradientBatch,
    k_tilde: usize,
    rho_sep: f64,
    sigma: f64,
    solver: &SolverOptions,
    exec: Execution,
) -> Result<OracleResult> {
    if w.weights().len() != batch.len() {
        return Err(Error::input(format!("{} weights for {} samples", w.weights().len(), batch.len())));
    }
    let g_hat = weighted_estimate(w, batch, k_tilde)?;
    let roots: Vec<f64> = w.weights().iter().map(|x| x.sqrt()).collect();
    let c = batch.centered(g_hat.values(), Some(&roots));
    let sigma_w = gram(c.as_ref(), 1.0);
    let f = f_covariance(g_hat.values(), sigma);
    let sol = solve_relaxation_against(&sigma_w.sub(&f), k_tilde, solver, rho_sep)?;
    let lambda_star = sol.solution.lambda_star;
    let h_star = sol.solution.h_star;
    if sol.verdict != Verdict::Above {
        return Ok(OracleResult {
            verdict: OracleVerdict::Yes,
            normal: Vec::new(),
            offset: 0.0,
            lambda_star,
            h_star,
            estimate: g_hat,
        });
    }
    let normal = batch.quadratic_scores(&h_star, &sol.solution.support, g_hat.values(), exec);
    Ok(OracleResult {
        verdict: OracleVerdict::Hyperplane,
        normal,
        offset: f.inner(&h_star) + lambda_star,
        lambda_star,
        h_star,
        estimate: g_hat,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EllipsoidConfig {
    pub k_tilde: usize,
    pub epsilon: f64,
    /// Defaults to `10ε (‖Ĝ‖² + σ²)`.
    pub rho_sep: Option<RhoSep>,
    /// Noise standard deviation entering `F`.
    pub sigma: f64,
    /// Maximum number of weight updates.
    pub budget: usize,
    pub solver: SolverOptions,
    pub execution: Execution,
}

impl Default for EllipsoidConfig {
    fn default() -> Self {
        EllipsoidConfig {
            k_tilde: 1,
            epsilon: 0.1,
            rho_sep: None,
            sigma: 0.0,
            budget: 50,
            solver: SolverOptions::default(),
            execution: Execution::default(),
        }
    }
}

impl EllipsoidConfig {
    pub fn rho_sep(&self) -> RhoSep {
        self.rho_sep.unwrap_or(RhoSep::PlugIn {
            c_gamma: 10.0 * self.epsilon,
            sigma_sq: self.sigma * self.sigma,
            g_norm_sq: None,
        })
    }
}

/// Cutting-plane search over sample weights. Returns at the first accepted
/// weight vector; after `budget` updates, returns the estimate of the iterate
/// with the smallest λ* − ρ, uncertified. `removed_ids` lists samples whose final
/// weight is zero.
pub fn estimate_sparse_mean_ellipsoid(batch: &GradientBatch, cfg: &EllipsoidConfig) -> Result<RsgeOutcome> {
    if batch.is_empty() {
        return Err(Error::input("empty gradient batch"));
    }
    if !(0.0..0.25).contains(&cfg.epsilon) {
        return Err(Error::config(format!("epsilon must lie in [0, 1/4), got {}", cfg.epsilon)));
    }
    cfg.solver.validate()?;
    let rho = cfg.rho_sep();
    let mut w = WeightVector::uniform(batch.len(), cfg.epsilon)?;
    if cfg.budget == 0 {
        return Ok(RsgeOutcome {
            estimate: weighted_estimate(&w, batch, cfg.k_tilde)?,
            removed_ids: Vec::new(),
            lambda_trace: Vec::new(),
            rho_trace: Vec::new(),
            certified: false,
        });
    }

    let mut lambda_trace = Vec::new();
    let mut rho_trace = Vec::new();
    let mut best: Option<(f64, SparseVector, WeightVector)> = None;
    for t in 0..=cfg.budget {
        let g_hat = weighted_estimate(&w, batch, cfg.k_tilde)?;
        let threshold = rho.value(g_hat.norm2().powi(2));
        let oracle = separation_oracle_with(&w, batch, cfg.k_tilde, threshold, cfg.sigma, &cfg.solver, cfg.execution)?;
        lambda_trace.push(oracle.lambda_star);
        rho_trace.push(threshold);
        if oracle.verdict == OracleVerdict::Yes {
            return Ok(RsgeOutcome {
                estimate: oracle.estimate,
                removed_ids: zero_weight_ids(&w, batch),
                lambda_trace,
                rho_trace,
                certified: true,
            });
        }
        let margin = oracle.lambda_star - threshold;
        if best.as_ref().is_none_or(|(m, _, _)| margin < *m) {
            best = Some((margin, oracle.estimate.clone(), w.clone()));
        }
        if t == cfg.budget {
            break;
        }
        let lip = oracle.normal.iter().cloned().fold(0.0, f64::max);
        if lip <= 0.0 {
            break;
        }
        // No weight moves by more than cap/√t.
        let step = w.cap() / (lip * ((t + 1) as f64).sqrt());
        let moved: Vec<f64> = w.weights().iter().zip(&oracle.normal).map(|(x, a)| x - step * a).collect();
        w = WeightVector::project(&moved, cfg.epsilon)?;
    }
    let (_, estimate, w_best) = best.expect("at least one oracle call");
    Ok(RsgeOutcome {
        estimate,
        removed_ids: zero_weight_ids(&w_best, batch),
        lambda_trace,
        rho_trace,
        certified: false,
    })
}

fn zero_weight_ids(w: &WeightVector, batch: &GradientBatch) -> Vec<usize> {
    w.weights().iter().zip(batch.ids()).filter(|(x, _)| **x == 0.0).map(|(_, &id)| id).collect()
}
