//! Filtering-based robust sparse gradient estimation.
//!
//! Each step thresholds the sample mean to `Ĝ = H_{2k̃}(mean)`, forms the
//! second moment around `Ĝ` and solves the sparse PCA relaxation on it. If the
//! optimum is at most `ρ_sep` the batch is certified and `Ĝ` is returned;
//! otherwise samples are removed at random with probability proportional to
//! their projection scores `τ_i = (g_i − Ĝ)ᵀ H* (g_i − Ĝ)`.

use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, MatRef, Par};
use rand::distributions::WeightedIndex;
use rand::prelude::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::CorruptedDataset;
use crate::error::{Error, Result};
use crate::linalg::{gram, SymMatrix};
use crate::par::Execution;
use crate::relax::{solve_relaxation_against, SolverOptions, Verdict};
use crate::sparse::{hard_threshold, SparseVector};

/// Rows per score chunk; fixed so that results do not depend on the policy.
const SCORE_CHUNK: usize = 64;

/// Per-sample gradients, row-major, tagged with the originating sample ids.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientBatch {
    d: usize,
    data: Vec<f64>,
    ids: Vec<usize>,
}

impl GradientBatch {
    pub fn new(d: usize, data: Vec<f64>, ids: Vec<usize>) -> Result<Self> {
        if d == 0 {
            return Err(Error::input("gradient dimension must be positive"));
        }
        if data.len() != ids.len() * d {
            return Err(Error::input(format!("{} entries for {} samples of dimension {d}", data.len(), ids.len())));
        }
        let mut sorted = ids.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::input("sample ids must be unique"));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("non-finite gradient entry"));
        }
        Ok(GradientBatch { d, data, ids })
    }

    /// Rows with ids `0..rows.len()`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::input("ragged gradient rows"));
        }
        Self::new(d, rows.concat(), (0..rows.len()).collect())
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn as_mat(&self) -> MatRef<'_, f64> {
        MatRef::from_row_major_slice(&self.data, self.len(), self.d)
    }

    /// Sample mean, accumulated in row order.
    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.d];
        for i in 0..self.len() {
            m.iter_mut().zip(self.sample(i)).for_each(|(a, b)| *a += b);
        }
        let n = self.len() as f64;
        m.iter_mut().for_each(|a| *a /= n);
        m
    }

    /// Weighted mean `Σ w_i g_i`.
    pub fn weighted_mean(&self, w: &[f64]) -> Vec<f64> {
        let mut m = vec![0.0; self.d];
        for (i, &wi) in w.iter().enumerate() {
            m.iter_mut().zip(self.sample(i)).for_each(|(a, b)| *a += wi * b);
        }
        m
    }

    /// Rows `g_i − center`, scaled by `row_scale[i]` when given.
    pub(crate) fn centered(&self, center: &[f64], row_scale: Option<&[f64]>) -> Mat<f64> {
        Mat::from_fn(self.len(), self.d, |i, j| {
            let c = self.data[i * self.d + j] - center[j];
            row_scale.map_or(c, |s| s[i] * c)
        })
    }

    /// `(g_i − center)ᵀ H (g_i − center)` for every sample, where `H` is zero
    /// outside `support`.
    pub fn quadratic_scores(&self, h: &SymMatrix, support: &[usize], center: &[f64], exec: Execution) -> Vec<f64> {
        let m = support.len();
        let hs = h.principal_submatrix(support);
        let hs = hs.as_mat();
        exec.map_chunks(self.len(), SCORE_CHUNK, |rows| {
            let c = Mat::<f64>::from_fn(rows.len(), m, |r, a| {
                let j = support[a];
                self.data[(rows.start + r) * self.d + j] - center[j]
            });
            let mut ch = Mat::<f64>::zeros(rows.len(), m);
            matmul(&mut ch, Accum::Replace, &c, hs, 1.0, Par::Seq);
            (0..rows.len())
                .map(|r| (0..m).map(|a| c[(r, a)] * ch[(r, a)]).sum::<f64>().max(0.0))
                .collect()
        })
    }

    /// Keeps every sample whose position is not flagged.
    fn without_positions(&self, drop: &[bool]) -> GradientBatch {
        let mut data = Vec::with_capacity(self.data.len());
        let mut ids = Vec::with_capacity(self.len());
        for i in 0..self.len() {
            if !drop[i] {
                data.extend_from_slice(self.sample(i));
                ids.push(self.ids[i]);
            }
        }
        GradientBatch { d: self.d, data, ids }
    }
}

/// `g_i = x_i (x_iᵀβ − y_i)` for every sample; ids are dataset positions.
pub fn gradient_samples(ds: &CorruptedDataset, beta: &SparseVector) -> Result<GradientBatch> {
    gradient_samples_with(ds, beta, Execution::default())
}

pub fn gradient_samples_with(ds: &CorruptedDataset, beta: &SparseVector, exec: Execution) -> Result<GradientBatch> {
    if ds.is_empty() {
        return Err(Error::input("empty dataset"));
    }
    let d = ds.dim();
    if beta.dim() != d {
        return Err(Error::input(format!("beta has length {}, dataset has d = {d}", beta.dim())));
    }
    let support = beta.support();
    let b = beta.values();
    let rows = exec.map_indexed(ds.len(), |i| {
        let x = ds.x(i);
        let r = support.iter().map(|&j| x[j] * b[j]).sum::<f64>() - ds.y(i);
        x.iter().map(|v| v * r).collect::<Vec<f64>>()
    });
    GradientBatch::new(d, rows.concat(), (0..ds.len()).collect())
}

/// Separation threshold.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhoSep {
    Fixed(f64),
    /// `c_gamma · (‖Ĝ‖² + σ²)` with `Ĝ` the current thresholded mean, or
    /// `g_norm_sq` in place of `‖Ĝ‖²` when supplied.
    PlugIn {
        c_gamma: f64,
        sigma_sq: f64,
        g_norm_sq: Option<f64>,
    },
}

impl RhoSep {
    pub fn plug_in(sigma_sq: f64) -> Self {
        RhoSep::PlugIn {
            c_gamma: 10.0,
            sigma_sq,
            g_norm_sq: None,
        }
    }

    pub fn value(&self, g_hat_norm_sq: f64) -> f64 {
        match *self {
            RhoSep::Fixed(r) => r,
            RhoSep::PlugIn {
                c_gamma,
                sigma_sq,
                g_norm_sq,
            } => rho_sep_default(g_norm_sq.unwrap_or(g_hat_norm_sq), sigma_sq, c_gamma),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            RhoSep::Fixed(r) => r > 0.0 && r.is_finite(),
            RhoSep::PlugIn {
                c_gamma,
                sigma_sq,
                g_norm_sq,
            } => c_gamma > 0.0 && sigma_sq >= 0.0 && g_norm_sq.is_none_or(|g| g >= 0.0),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::config(format!("invalid separation threshold {self:?}")))
        }
    }
}

/// `c_gamma · (g_norm_sq + sigma_sq)`.
pub fn rho_sep_default(g_norm_sq: f64, sigma_sq: f64, c_gamma: f64) -> f64 {
    c_gamma * (g_norm_sq + sigma_sq)
}

/// Removal cap `⌈1.1 γ/(γ−1) · ε n⌉`, or `n/4` when `ε` is unknown.
pub fn max_removals_default(n: usize, epsilon: Option<f64>, gamma: f64) -> usize {
    let cap = match epsilon {
        Some(eps) => (1.1 * gamma / (gamma - 1.0) * eps * n as f64).ceil() as usize,
        None => n / 4,
    };
    cap.min(n)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    pub k_tilde: usize,
    pub rho_sep: RhoSep,
    pub gamma: f64,
    /// `None` derives the cap from `epsilon` and `gamma`.
    pub max_removals: Option<usize>,
    pub epsilon: Option<f64>,
    pub removals_per_step: usize,
    pub seed: u64,
    pub solver: SolverOptions,
    pub execution: Execution,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            k_tilde: 1,
            rho_sep: RhoSep::plug_in(0.0),
            gamma: 4.0,
            max_removals: None,
            epsilon: None,
            removals_per_step: 1,
            seed: 0,
            solver: SolverOptions::default(),
            execution: Execution::default(),
        }
    }
}

impl FilterConfig {
    pub fn validate(&self, d: usize) -> Result<()> {
        if self.k_tilde == 0 || self.k_tilde > d * d {
            return Err(Error::config(format!("k_tilde must lie in [1, d²], got {}", self.k_tilde)));
        }
        self.rho_sep.validate()?;
        if !(self.gamma >= 4.0) {
            return Err(Error::config("gamma must be at least 4"));
        }
        if self.removals_per_step == 0 {
            return Err(Error::config("removals_per_step must be at least 1"));
        }
        if self.epsilon.is_some_and(|e| !(0.0..0.5).contains(&e)) {
            return Err(Error::config("epsilon must lie in [0, 1/2)"));
        }
        self.solver.validate()
    }

    pub fn removal_cap(&self, n: usize) -> usize {
        self.max_removals.unwrap_or_else(|| max_removals_default(n, self.epsilon, self.gamma)).min(n)
    }

    /// RNG stream seeded from `seed`.
    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

/// Outcome of one filtering step.
#[derive(Clone, Debug, PartialEq)]
pub enum FilterStep {
    Certified {
        estimate: SparseVector,
        lambda_star: f64,
        rho_sep: f64,
    },
    Removed {
        batch: GradientBatch,
        removed_ids: Vec<usize>,
        scores: Vec<f64>,
        lambda_star: f64,
        rho_sep: f64,
    },
}

/// Thresholded mean and the centered second moment around it.
pub(crate) fn thresholded_moments(batch: &GradientBatch, k_tilde: usize) -> Result<(SparseVector, SymMatrix)> {
    let budget = (2 * k_tilde).min(batch.dim());
    let g_hat = hard_threshold(&batch.mean(), budget)?;
    let c = batch.centered(g_hat.values(), None);
    let sigma = gram(c.as_ref(), 1.0 / batch.len() as f64);
    Ok((g_hat, sigma))
}

/// One certify-or-remove step, removing up to `cfg.removals_per_step` samples.
pub fn filter_step<R: Rng + ?Sized>(batch: &GradientBatch, cfg: &FilterConfig, rng: &mut R) -> Result<FilterStep> {
    filter_step_limited(batch, cfg, cfg.removals_per_step, rng)
}

fn filter_step_limited<R: Rng + ?Sized>(
    batch: &GradientBatch,
    cfg: &FilterConfig,
    limit: usize,
    rng: &mut R,
) -> Result<FilterStep> {
    if batch.len() < 2 {
        return Err(Error::input("filtering needs at least two samples"));
    }
    cfg.validate(batch.dim())?;
    let (g_hat, sigma) = thresholded_moments(batch, cfg.k_tilde)?;
    let rho = cfg.rho_sep.value(g_hat.norm2().powi(2));
    let sol = solve_relaxation_against(&sigma, cfg.k_tilde, &cfg.solver, rho)?;
    let lambda_star = sol.solution.lambda_star;
    if sol.verdict != Verdict::Above {
        return Ok(FilterStep::Certified {
            estimate: g_hat,
            lambda_star,
            rho_sep: rho,
        });
    }

    let scores = batch.quadratic_scores(&sol.solution.h_star, &sol.solution.support, g_hat.values(), cfg.execution);
    let drop = sample_proportional(&scores, limit.min(batch.len() - 1), rng).ok_or(Error::DegenerateScores { lambda_star })?;
    let mut flags = vec![false; batch.len()];
    drop.iter().for_each(|&i| flags[i] = true);
    Ok(FilterStep::Removed {
        batch: batch.without_positions(&flags),
        removed_ids: drop.iter().map(|&i| batch.ids[i]).collect(),
        scores,
        lambda_star,
        rho_sep: rho,
    })
}

/// Draws up to `count` distinct positions, each successive draw proportional
/// to the remaining weights. `None` when every weight is zero.
fn sample_proportional<R: Rng + ?Sized>(weights: &[f64], count: usize, rng: &mut R) -> Option<Vec<usize>> {
    let mut dist = WeightedIndex::new(weights).ok()?;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let i = dist.sample(rng);
        out.push(i);
        if dist.update_weights(&[(i, &0.0)]).is_err() {
            break;
        }
    }
    Some(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RsgeOutcome {
    pub estimate: SparseVector,
    pub removed_ids: Vec<usize>,
    /// λ* at every step, including the final certifying one.
    pub lambda_trace: Vec<f64>,
    /// Separation threshold in force at every step.
    pub rho_trace: Vec<f64>,
    /// Whether the run ended with λ* ≤ ρ_sep rather than at the removal cap.
    pub certified: bool,
}

/// Filters until certified or until the removal cap is reached.
pub fn estimate_sparse_mean_filter<R: Rng + ?Sized>(
    batch: &GradientBatch,
    cfg: &FilterConfig,
    rng: &mut R,
) -> Result<RsgeOutcome> {
    cfg.validate(batch.dim())?;
    if batch.is_empty() {
        return Err(Error::input("empty gradient batch"));
    }
    let cap = cfg.removal_cap(batch.len());
    let mut current = batch.clone();
    let mut removed_ids = Vec::new();
    let mut lambda_trace = Vec::new();
    let mut rho_trace = Vec::new();

    loop {
        let room = cap - removed_ids.len();
        if room == 0 || current.len() < 2 {
            let budget = (2 * cfg.k_tilde).min(current.dim());
            return Ok(RsgeOutcome {
                estimate: hard_threshold(&current.mean(), budget)?,
                removed_ids,
                lambda_trace,
                rho_trace,
                certified: false,
            });
        }
        match filter_step_limited(&current, cfg, cfg.removals_per_step.min(room), rng)? {
            FilterStep::Certified {
                estimate,
                lambda_star,
                rho_sep,
            } => {
                lambda_trace.push(lambda_star);
                rho_trace.push(rho_sep);
                return Ok(RsgeOutcome {
                    estimate,
                    removed_ids,
                    lambda_trace,
                    rho_trace,
                    certified: true,
                });
            }
            FilterStep::Removed {
                batch,
                removed_ids: ids,
                lambda_star,
                rho_sep,
                ..
            } => {
                lambda_trace.push(lambda_star);
                rho_trace.push(rho_sep);
                removed_ids.extend(ids);
                current = batch;
            }
        }
    }
}
