//! Experiment specifications and their defaults.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Mean,
    Regress,
    UnknownCov,
}

impl Suite {
    pub fn as_str(self) -> &'static str {
        match self {
            Suite::Mean => "mean",
            Suite::Regress => "regress",
            Suite::UnknownCov => "unknown-cov",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    #[default]
    Filtering,
    Ellipsoid,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub eps: f64,
    pub k: usize,
    pub d: usize,
    pub sigma2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: String,
    pub suite: Suite,
    pub grid: Vec<GridPoint>,
    /// Trials per grid point.
    pub seeds: usize,
    pub master_seed: u64,
    pub estimator: EstimatorKind,
    pub outputs: PathBuf,
    /// `n = ⌈n_multiplier · k² ln d / ε⌉` clean samples.
    pub n_multiplier: f64,
    /// Overrides the sample-size formula.
    pub samples: Option<usize>,
    /// IHT iterations.
    pub t_max: usize,
    /// Defaults to `k`.
    pub k_prime: Option<usize>,
    pub eta: f64,
    /// Filter removes `⌈εN / removal_batches⌉` samples per step; `None` removes one.
    pub removal_batches: Option<usize>,
    pub c_gamma: f64,
    pub ellipsoid_budget: usize,
    /// Record per-job wall time in the CSV.
    pub timing: bool,
    pub plots: bool,
}

/// Partial spec read from a config file; missing fields keep the suite defaults.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecOverrides {
    pub name: Option<String>,
    pub grid: Option<Vec<GridPoint>>,
    pub seeds: Option<usize>,
    pub master_seed: Option<u64>,
    pub estimator: Option<EstimatorKind>,
    pub outputs: Option<PathBuf>,
    pub n_multiplier: Option<f64>,
    pub samples: Option<usize>,
    pub t_max: Option<usize>,
    pub k_prime: Option<usize>,
    pub eta: Option<f64>,
    pub removal_batches: Option<usize>,
    pub c_gamma: Option<f64>,
    pub ellipsoid_budget: Option<usize>,
    pub timing: Option<bool>,
    pub plots: Option<bool>,
}

impl SpecOverrides {
    /// Reads JSON or TOML, chosen by extension (TOML unless `.json`).
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let parsed = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        } else {
            toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        };
        Ok(parsed)
    }
}

impl ExperimentSpec {
    fn base(name: &str, suite: Suite, grid: Vec<GridPoint>, seeds: usize) -> Self {
        ExperimentSpec {
            name: name.to_string(),
            suite,
            grid,
            seeds,
            master_seed: 0,
            estimator: EstimatorKind::Filtering,
            outputs: PathBuf::from("results").join(name),
            n_multiplier: 2.0,
            samples: None,
            t_max: 20,
            k_prime: None,
            eta: 1.0,
            removal_batches: Some(10),
            c_gamma: 10.0,
            ellipsoid_budget: 50,
            timing: false,
            plots: true,
        }
    }

    /// Sparse mean estimation: `k ∈ {3,5,7}` at `d = 50` and `d ∈ {30,50,100}`
    /// at `k = 5`, for `ε ∈ {0.1, 0.15, 0.2}`, 15 trials.
    pub fn fig1() -> Self {
        let mut grid = Vec::new();
        for eps in [0.1, 0.15, 0.2] {
            for k in [3, 5, 7] {
                grid.push(GridPoint { eps, k, d: 50, sigma2: 0.0 });
            }
            for d in [30, 100] {
                grid.push(GridPoint { eps, k: 5, d, sigma2: 0.0 });
            }
        }
        let mut spec = Self::base("fig1", Suite::Mean, grid, 15);
        spec.removal_batches = None;
        spec
    }

    /// Robust IHT at `d = 500`, `k = 5`: `ε ∈ {0.05, 0.1, 0.15}` at `σ² = 0.1`
    /// and `σ² ∈ {0, 0.01}` at `ε = 0.1`.
    pub fn fig2() -> Self {
        let mut grid: Vec<GridPoint> = [0.05, 0.1, 0.15]
            .into_iter()
            .map(|eps| GridPoint { eps, k: 5, d: 500, sigma2: 0.1 })
            .collect();
        grid.extend([0.0, 0.01].map(|sigma2| GridPoint { eps: 0.1, k: 5, d: 500, sigma2 }));
        Self::base("fig2", Suite::Regress, grid, 3)
    }

    /// Robust IHT with the Toeplitz covariance, same grid as [`fig2`](Self::fig2).
    pub fn fig3() -> Self {
        let mut spec = Self::fig2();
        spec.name = "fig3".into();
        spec.suite = Suite::UnknownCov;
        spec.outputs = PathBuf::from("results/fig3");
        spec
    }

    pub fn for_suite(suite: Suite) -> Self {
        match suite {
            Suite::Mean => Self::fig1(),
            Suite::Regress => Self::fig2(),
            Suite::UnknownCov => Self::fig3(),
        }
    }

    pub fn apply(&mut self, o: SpecOverrides) {
        macro_rules! set {
            ($($f:ident),*) => {$( if let Some(v) = o.$f { self.$f = v; } )*};
        }
        set!(name, grid, seeds, master_seed, estimator, outputs, n_multiplier, t_max, eta, c_gamma, ellipsoid_budget, timing, plots);
        if o.samples.is_some() {
            self.samples = o.samples;
        }
        if o.k_prime.is_some() {
            self.k_prime = o.k_prime;
        }
        if o.removal_batches.is_some() {
            self.removal_batches = o.removal_batches;
        }
    }

    /// Shrinks `d`, `n` and the number of seeds by `factor`. Dimensions stay
    /// at least `4k` so the sparsity levels remain meaningful.
    pub fn scaled(mut self, factor: f64) -> anyhow::Result<Self> {
        if !(factor > 0.0 && factor <= 1.0) {
            bail!("scale must lie in (0, 1], got {factor}");
        }
        if factor == 1.0 {
            return Ok(self);
        }
        for p in &mut self.grid {
            p.d = ((p.d as f64 * factor).ceil() as usize).max(4 * p.k).min(p.d);
        }
        self.seeds = ((self.seeds as f64 * factor).ceil() as usize).max(1);
        self.n_multiplier *= factor;
        if let Some(n) = self.samples.as_mut() {
            *n = ((*n as f64 * factor).ceil() as usize).max(1);
        }
        Ok(self)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.grid.is_empty() {
            bail!("grid is empty");
        }
        if self.seeds == 0 {
            bail!("seeds must be at least 1");
        }
        if !(self.n_multiplier > 0.0 && self.n_multiplier.is_finite()) {
            bail!("n_multiplier must be positive");
        }
        if self.removal_batches == Some(0) {
            bail!("removal_batches must be positive");
        }
        for p in &self.grid {
            if !(0.0..0.5).contains(&p.eps) {
                bail!("eps must lie in [0, 1/2), got {}", p.eps);
            }
            if p.k == 0 || p.k > p.d {
                bail!("need 1 <= k <= d, got k = {}, d = {}", p.k, p.d);
            }
            if !(p.sigma2 >= 0.0 && p.sigma2.is_finite()) {
                bail!("sigma2 must be finite and nonnegative");
            }
            if let Some(kp) = self.k_prime {
                if kp < p.k || kp > p.d {
                    bail!("k_prime = {kp} must lie in [k, d] at {p:?}");
                }
            }
        }
        Ok(())
    }

    /// Clean sample count at a grid point. `ε = 0` uses `ε = 0.05` in the formula.
    pub fn clean_samples(&self, p: &GridPoint) -> usize {
        if let Some(n) = self.samples {
            return n;
        }
        let eps = p.eps.max(0.05);
        let n = self.n_multiplier * (p.k * p.k) as f64 * (p.d.max(2) as f64).ln() / eps;
        (n.ceil() as usize).max(2 * p.k + 2)
    }
}
