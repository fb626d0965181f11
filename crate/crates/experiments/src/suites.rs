//! The three simulation suites.

use std::time::Instant;

use anyhow::{bail, Context};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use robust_sparse::data::{corrupt, generate_clean, Attack, CorruptedDataset, CorruptionMode, Covariance, ModelConfig};
use robust_sparse::ellipsoid::{estimate_sparse_mean_ellipsoid, EllipsoidConfig};
use robust_sparse::filter::{estimate_sparse_mean_filter, gradient_samples_with, FilterConfig, RhoSep};
use robust_sparse::iht::{robust_iht, IhtConfig, RsgeKind};
use robust_sparse::{Execution, SparseVector};

use crate::output::ResultRow;
use crate::spec::{EstimatorKind, ExperimentSpec, GridPoint, Suite};

/// Independent stream for trial `seed` at grid point `point`.
pub fn job_rng(master_seed: u64, point: usize, seed: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(((point as u64) << 32) | seed as u64);
    rng
}

struct Job<'a> {
    spec: &'a ExperimentSpec,
    point: GridPoint,
    seed: u64,
}

impl Job<'_> {
    fn row(&self, iter: Option<usize>, metric: &str, value: f64) -> ResultRow {
        ResultRow {
            suite: self.spec.suite.as_str().to_string(),
            eps: self.point.eps,
            k: self.point.k,
            d: self.point.d,
            sigma2: self.point.sigma2,
            seed: self.seed,
            iter,
            metric: metric.to_string(),
            value,
            wall_time_ms: None,
        }
    }

    fn removals_per_step(&self, n: usize) -> usize {
        match self.spec.removal_batches {
            Some(b) => ((self.point.eps * n as f64) / b as f64).ceil().max(1.0) as usize,
            None => 1,
        }
    }

    fn filter(&self, k_tilde: usize, n: usize) -> FilterConfig {
        FilterConfig {
            k_tilde,
            rho_sep: RhoSep::PlugIn {
                c_gamma: self.spec.c_gamma,
                sigma_sq: self.point.sigma2,
                g_norm_sq: None,
            },
            epsilon: Some(self.point.eps),
            removals_per_step: self.removals_per_step(n),
            execution: Execution::Sequential,
            ..FilterConfig::default()
        }
    }

    fn ellipsoid(&self, k_tilde: usize) -> EllipsoidConfig {
        EllipsoidConfig {
            k_tilde,
            epsilon: self.point.eps,
            sigma: self.point.sigma2.sqrt(),
            budget: self.spec.ellipsoid_budget,
            execution: Execution::Sequential,
            ..EllipsoidConfig::default()
        }
    }
}

/// Runs every (grid point, seed) pair in the work pool; rows come back in
/// grid order regardless of scheduling.
fn run_jobs<F>(spec: &ExperimentSpec, f: F) -> anyhow::Result<Vec<ResultRow>>
where
    F: Fn(&Job, &mut ChaCha8Rng) -> anyhow::Result<Vec<ResultRow>> + Sync + Send,
{
    spec.validate()?;
    let jobs: Vec<(usize, usize)> = (0..spec.grid.len())
        .flat_map(|p| (0..spec.seeds).map(move |s| (p, s)))
        .collect();
    let results: Vec<anyhow::Result<Vec<ResultRow>>> = Execution::Parallel.map_slice(&jobs, |&(p, s)| {
        let job = Job {
            spec,
            point: spec.grid[p],
            seed: s as u64,
        };
        let start = Instant::now();
        let mut rows = f(&job, &mut job_rng(spec.master_seed, p, s))
            .with_context(|| format!("grid point {:?}, seed {s}", spec.grid[p]))?;
        if spec.timing {
            let ms = start.elapsed().as_secs_f64() * 1e3;
            rows.iter_mut().for_each(|r| r.wall_time_ms = Some(ms));
        }
        Ok(rows)
    });
    let mut out = Vec::new();
    for r in results {
        out.extend(r?);
    }
    Ok(out)
}

pub fn run_suite(spec: &ExperimentSpec) -> anyhow::Result<Vec<ResultRow>> {
    match spec.suite {
        Suite::Mean => run_mean_estimation_suite(spec),
        Suite::Regress => run_regression_suite(spec),
        Suite::UnknownCov => run_unknown_cov_suite(spec),
    }
}

/// Sparse mean estimation under the orthogonal-mean attack. The mean `G` is a
/// random `±1` vector on `k` coordinates and the samples are the gradients
/// `x xᵀG` of the regression model with `β* = −G` at `β = 0`.
///
/// Metrics per seed: `relative_mse`, `rescaled_relative_mse` (only for
/// `ε > 0`), `removed`, `outliers_removed`.
pub fn run_mean_estimation_suite(spec: &ExperimentSpec) -> anyhow::Result<Vec<ResultRow>> {
    if spec.suite != Suite::Mean {
        bail!("spec {} is not a mean-estimation suite", spec.name);
    }
    run_jobs(spec, |job, rng| {
        let p = job.point;
        let model = ModelConfig::with_random_signs(p.d, p.k, p.sigma2.sqrt(), Covariance::Identity, rng)?;
        let g: Vec<f64> = model.beta_star.values().to_vec();
        let model = ModelConfig {
            beta_star: SparseVector::new(g.iter().map(|v| -v).collect(), p.k)?,
            ..model
        };
        let clean = generate_clean(&model, job.spec.clean_samples(&p), rng)?;
        let ds = corrupt(&clean, p.eps, &Attack::OrthogonalMean { mean: g.clone() }, CorruptionMode::Append, rng)?;
        let batch = gradient_samples_with(&ds, &SparseVector::zeros(p.d, p.k), Execution::Sequential)?;
        let out = match job.spec.estimator {
            EstimatorKind::Filtering => estimate_sparse_mean_filter(&batch, &job.filter(p.k, ds.len()), rng)?,
            EstimatorKind::Ellipsoid => estimate_sparse_mean_ellipsoid(&batch, &job.ellipsoid(p.k))?,
        };
        let err: f64 = out.estimate.values().iter().zip(&g).map(|(a, b)| (a - b) * (a - b)).sum();
        let rel = err / p.k as f64;
        let mut rows = vec![job.row(None, "relative_mse", rel)];
        if p.eps > 0.0 {
            rows.push(job.row(None, "rescaled_relative_mse", rel / p.eps));
        }
        let outliers = out.removed_ids.iter().filter(|&&i| ds.outlier_mask()[i]).count();
        rows.push(job.row(None, "removed", out.removed_ids.len() as f64));
        rows.push(job.row(None, "outliers_removed", outliers as f64));
        Ok(rows)
    })
}

/// Robust IHT under the sign-flip attack with identity covariates.
pub fn run_regression_suite(spec: &ExperimentSpec) -> anyhow::Result<Vec<ResultRow>> {
    if spec.suite != Suite::Regress {
        bail!("spec {} is not a regression suite", spec.name);
    }
    run_jobs(spec, |job, rng| regression_job(job, Covariance::Identity, rng))
}

/// Robust IHT with Toeplitz covariates; the filter budget grows to `r(k′ + k)`.
pub fn run_unknown_cov_suite(spec: &ExperimentSpec) -> anyhow::Result<Vec<ResultRow>> {
    if spec.suite != Suite::UnknownCov {
        bail!("spec {} is not an unknown-covariance suite", spec.name);
    }
    run_jobs(spec, |job, rng| regression_job(job, Covariance::Toeplitz, rng))
}

/// Builds the corrupted regression dataset of one trial.
pub fn regression_dataset(
    point: &GridPoint,
    n: usize,
    covariance: Covariance,
    rng: &mut ChaCha8Rng,
) -> anyhow::Result<(ModelConfig, CorruptedDataset)> {
    let model = ModelConfig::with_random_signs(point.d, point.k, point.sigma2.sqrt(), covariance, rng)?;
    let clean = generate_clean(&model, n, rng)?;
    let attack = Attack::SignFlip {
        beta_star: model.beta_star.clone(),
    };
    let ds = corrupt(&clean, point.eps, &attack, CorruptionMode::Append, rng)?;
    Ok((model, ds))
}

/// Metrics per iteration `t`: `sq_error` and `log_sq_error` of `β^t` for
/// `t = 0..=T`; `removed`, `outliers_removed` and `certified` of the gradient
/// estimate taken at `β^t` for `t < T`.
fn regression_job(job: &Job, covariance: Covariance, rng: &mut ChaCha8Rng) -> anyhow::Result<Vec<ResultRow>> {
    let p = job.point;
    let r = covariance.row_sparsity(p.d)?;
    let (model, ds) = regression_dataset(&p, job.spec.clean_samples(&p), covariance, rng)?;
    let k_prime = job.spec.k_prime.unwrap_or(p.k);
    let k_tilde = r * (k_prime + p.k);
    let rsge = match job.spec.estimator {
        EstimatorKind::Filtering => RsgeKind::Filtering(job.filter(k_tilde, ds.len())),
        EstimatorKind::Ellipsoid => RsgeKind::Ellipsoid(job.ellipsoid(k_tilde)),
    };
    let cfg = IhtConfig {
        k_prime,
        eta: job.spec.eta,
        t_max: job.spec.t_max,
        sample_splitting: false,
        rsge,
        seed: rng.next_u64(),
        execution: Execution::Sequential,
    };
    let trace = robust_iht(&ds, &cfg, Some(&model.beta_star))?;
    let mut rows = Vec::new();
    for (t, e) in trace.errors.iter().flatten().enumerate() {
        rows.push(job.row(Some(t), "sq_error", e * e));
        rows.push(job.row(Some(t), "log_sq_error", (e * e).ln()));
    }
    for (t, s) in trace.rsge_diagnostics.iter().enumerate() {
        rows.push(job.row(Some(t), "removed", s.removed as f64));
        rows.push(job.row(Some(t), "outliers_removed", s.outliers_removed as f64));
        rows.push(job.row(Some(t), "certified", if s.certified { 1.0 } else { 0.0 }));
    }
    Ok(rows)
}
