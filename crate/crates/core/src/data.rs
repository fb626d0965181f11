//! Synthetic sparse linear regression data and corruption models.
//!
//! Clean samples follow `y = xᵀβ* + ξ` with `x ~ N(0, Σ)` and `ξ ~ N(0, σ²)`.
//! Corruptions append (or substitute) adversarial samples and mark them in
//! `outlier_mask`, which is ground truth for evaluation only.

use std::io::{Read, Write};

use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, MatRef, Par};
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{norm2, SymMatrix};
use crate::sparse::SparseVector;

/// Entries below this magnitude do not count towards a covariance's row sparsity.
pub const SPARSITY_THRESHOLD: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Covariance {
    Identity,
    /// `Σ_ij = exp(−(i − j)²)`.
    Toeplitz,
    /// A user-supplied covariance whose rows and columns are `r`-sparse.
    ExplicitSparse { matrix: SymMatrix, r: usize },
}

impl Covariance {
    pub fn matrix(&self, d: usize) -> Result<SymMatrix> {
        match self {
            Covariance::Identity => Ok(SymMatrix::identity(d)),
            Covariance::Toeplitz => Ok(covariance_toeplitz(d)),
            Covariance::ExplicitSparse { matrix, .. } => {
                if matrix.dim() != d {
                    return Err(Error::config(format!("covariance is {0}x{0}, model has d = {d}", matrix.dim())));
                }
                Ok(matrix.clone())
            }
        }
    }

    /// Row sparsity `r` used to inflate the filter budget to `r(k′ + k)`.
    pub fn row_sparsity(&self, d: usize) -> Result<usize> {
        match self {
            Covariance::Identity => Ok(1),
            Covariance::Toeplitz => Ok(row_sparsity(&covariance_toeplitz(d), SPARSITY_THRESHOLD)),
            Covariance::ExplicitSparse { r, .. } => Ok(*r),
        }
    }
}

/// Largest number of entries with `|Σ_ij| ≥ threshold` in any row.
pub fn row_sparsity(sigma: &SymMatrix, threshold: f64) -> usize {
    let d = sigma.dim();
    (0..d)
        .map(|i| (0..d).filter(|&j| sigma.get(i, j).abs() >= threshold).count())
        .max()
        .unwrap_or(0)
}

pub fn covariance_toeplitz(d: usize) -> SymMatrix {
    SymMatrix::from_fn(d, |i, j| {
        let t = i as f64 - j as f64;
        (-t * t).exp()
    })
    .expect("finite entries")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub d: usize,
    pub k: usize,
    /// Noise standard deviation.
    pub sigma: f64,
    pub beta_star: SparseVector,
    pub covariance: Covariance,
}

impl ModelConfig {
    /// `β*` with `k` entries of `±1` on a uniformly random support.
    pub fn with_random_signs<R: Rng + ?Sized>(
        d: usize,
        k: usize,
        sigma: f64,
        covariance: Covariance,
        rng: &mut R,
    ) -> Result<Self> {
        if k > d {
            return Err(Error::config(format!("k = {k} exceeds d = {d}")));
        }
        let mut beta = vec![0.0; d];
        for i in sample(rng, d, k) {
            beta[i] = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        }
        let model = ModelConfig {
            d,
            k,
            sigma,
            beta_star: SparseVector::new(beta, k)?,
            covariance,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::config("d must be positive"));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::config("sigma must be finite and nonnegative"));
        }
        if self.beta_star.dim() != self.d {
            return Err(Error::config("beta_star length differs from d"));
        }
        if self.beta_star.nnz() > self.k {
            return Err(Error::config(format!("beta_star has {} nonzeros, k = {}", self.beta_star.nnz(), self.k)));
        }
        let sigma = self.covariance.matrix(self.d)?;
        if let Some(j) = sigma.diagonal().iter().position(|&v| v > 1.0 + 1e-12) {
            return Err(Error::config(format!("covariance diagonal entry {j} exceeds 1")));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CorruptionMode {
    /// Add `εn/(1−ε)` outliers so they make up an `ε` fraction of the result.
    Append,
    /// Drop `εn` clean samples chosen uniformly, then append as many outliers.
    Replace,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Attack {
    /// Covariates are random `±1` rows `a` with responses `−aᵀβ*`.
    SignFlip { beta_star: SparseVector },
    /// Each outlier's gradient at `β = 0` is a vector of norm `‖mean‖`
    /// orthogonal to `mean`, with a Gaussian direction.
    OrthogonalMean { mean: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackDescriptor {
    pub attack: Attack,
    pub epsilon: f64,
    pub mode: CorruptionMode,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorruptedDataset {
    d: usize,
    /// Row-major `n × d`.
    xs: Vec<f64>,
    ys: Vec<f64>,
    outlier_mask: Vec<bool>,
    attack: Option<AttackDescriptor>,
}

impl CorruptedDataset {
    pub fn new(d: usize, xs: Vec<f64>, ys: Vec<f64>, outlier_mask: Vec<bool>) -> Result<Self> {
        if d == 0 {
            return Err(Error::input("d must be positive"));
        }
        if xs.len() != ys.len() * d || outlier_mask.len() != ys.len() {
            return Err(Error::input(format!(
                "{} covariate entries, {} responses and {} mask entries do not describe an n x {d} dataset",
                xs.len(),
                ys.len(),
                outlier_mask.len()
            )));
        }
        if xs.iter().chain(&ys).any(|v| !v.is_finite()) {
            return Err(Error::input("non-finite sample"));
        }
        Ok(CorruptedDataset {
            d,
            xs,
            ys,
            outlier_mask,
            attack: None,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], ys: Vec<f64>) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::input("ragged covariate rows"));
        }
        let n = ys.len();
        Self::new(d, rows.concat(), ys, vec![false; n])
    }

    pub fn len(&self) -> usize {
        self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ys.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn x(&self, i: usize) -> &[f64] {
        &self.xs[i * self.d..(i + 1) * self.d]
    }

    pub fn y(&self, i: usize) -> f64 {
        self.ys[i]
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn xs(&self) -> MatRef<'_, f64> {
        MatRef::from_row_major_slice(&self.xs, self.len(), self.d)
    }

    pub fn outlier_mask(&self) -> &[bool] {
        &self.outlier_mask
    }

    pub fn n_outliers(&self) -> usize {
        self.outlier_mask.iter().filter(|&&b| b).count()
    }

    pub fn attack(&self) -> Option<&AttackDescriptor> {
        self.attack.as_ref()
    }

    /// Samples at `idx`, in that order.
    pub fn subset(&self, idx: &[usize]) -> CorruptedDataset {
        let mut xs = Vec::with_capacity(idx.len() * self.d);
        for &i in idx {
            xs.extend_from_slice(self.x(i));
        }
        CorruptedDataset {
            d: self.d,
            xs,
            ys: idx.iter().map(|&i| self.ys[i]).collect(),
            outlier_mask: idx.iter().map(|&i| self.outlier_mask[i]).collect(),
            attack: self.attack.clone(),
        }
    }

    fn push(&mut self, x: &[f64], y: f64, outlier: bool) {
        self.xs.extend_from_slice(x);
        self.ys.push(y);
        self.outlier_mask.push(outlier);
    }
}

/// Draws `n` clean samples from the model.
pub fn generate_clean<R: Rng + ?Sized>(model: &ModelConfig, n: usize, rng: &mut R) -> Result<CorruptedDataset> {
    model.validate()?;
    if n == 0 {
        return Err(Error::config("n must be at least 1"));
    }
    let d = model.d;
    let z = Mat::<f64>::from_fn(n, d, |_, _| rng.sample(StandardNormal));
    let x = match &model.covariance {
        Covariance::Identity => z,
        cov => {
            let root = psd_sqrt(&cov.matrix(d)?)?;
            let mut x = Mat::<f64>::zeros(n, d);
            matmul(&mut x, Accum::Replace, &z, &root, 1.0, Par::Seq);
            x
        }
    };
    let beta = model.beta_star.values();
    let support = model.beta_star.support();
    let mut xs = Vec::with_capacity(n * d);
    let mut ys = Vec::with_capacity(n);
    for i in 0..n {
        let row: Vec<f64> = (0..d).map(|j| x[(i, j)]).collect();
        let signal: f64 = support.iter().map(|&j| row[j] * beta[j]).sum();
        let noise: f64 = rng.sample(StandardNormal);
        ys.push(signal + model.sigma * noise);
        xs.extend(row);
    }
    CorruptedDataset::new(d, xs, ys, vec![false; n])
}

/// Symmetric square root; rejects matrices with a negative eigenvalue below `−1e-9`.
fn psd_sqrt(sigma: &SymMatrix) -> Result<Mat<f64>> {
    let e = sigma.eigen()?;
    if let Some(&lo) = e.values.first().filter(|&&v| v < -1e-9) {
        return Err(Error::config(format!("covariance is not p.s.d. (eigenvalue {lo:e})")));
    }
    let d = sigma.dim();
    let roots: Vec<f64> = e.values.iter().map(|v| v.max(0.0).sqrt()).collect();
    let scaled = Mat::<f64>::from_fn(d, d, |i, j| e.vectors[(i, j)] * roots[j]);
    let mut out = Mat::<f64>::zeros(d, d);
    matmul(&mut out, Accum::Replace, &scaled, e.vectors.transpose(), 1.0, Par::Seq);
    Ok(out)
}

/// Number of outliers that makes up an `epsilon` fraction after corrupting `n` samples.
pub fn outlier_count(n: usize, epsilon: f64, mode: CorruptionMode) -> usize {
    match mode {
        CorruptionMode::Append => (epsilon * n as f64 / (1.0 - epsilon)).round() as usize,
        CorruptionMode::Replace => (epsilon * n as f64).round() as usize,
    }
}

/// Corrupts an `epsilon` fraction of the dataset. Clean samples keep their
/// values; outliers are appended after them.
pub fn corrupt<R: Rng + ?Sized>(
    ds: &CorruptedDataset,
    epsilon: f64,
    attack: &Attack,
    mode: CorruptionMode,
    rng: &mut R,
) -> Result<CorruptedDataset> {
    if !(0.0..0.5).contains(&epsilon) {
        return Err(Error::config(format!("epsilon must lie in [0, 1/2), got {epsilon}")));
    }
    let d = ds.dim();
    match attack {
        Attack::SignFlip { beta_star } if beta_star.dim() != d => {
            return Err(Error::config("sign-flip beta_star length differs from d"));
        }
        Attack::OrthogonalMean { mean } if mean.len() != d => {
            return Err(Error::config("orthogonal-mean target length differs from d"));
        }
        _ => {}
    }
    let m = outlier_count(ds.len(), epsilon, mode);
    let mut out = match mode {
        CorruptionMode::Append => ds.clone(),
        CorruptionMode::Replace => {
            let mut keep: Vec<usize> = sample(rng, ds.len(), ds.len() - m).into_vec();
            keep.sort_unstable();
            ds.subset(&keep)
        }
    };
    let mut x = vec![0.0; d];
    for _ in 0..m {
        let y = match attack {
            Attack::SignFlip { beta_star } => {
                x.iter_mut().for_each(|v| *v = if rng.gen_bool(0.5) { 1.0 } else { -1.0 });
                -beta_star.support().iter().map(|&j| x[j] * beta_star.values()[j]).sum::<f64>()
            }
            Attack::OrthogonalMean { mean } => {
                let v = orthogonal_direction(mean, rng);
                let norm = norm2(mean);
                let vn = norm2(&v);
                x.iter_mut().zip(&v).for_each(|(xi, vi)| *xi = vi / vn);
                // x (xᵀ0 − y) = norm · x
                -norm
            }
        };
        out.push(&x, y, true);
    }
    out.attack = Some(AttackDescriptor {
        attack: attack.clone(),
        epsilon,
        mode,
    });
    Ok(out)
}

/// Gaussian vector projected orthogonal to `g`, rescaled to `‖g‖` (to unit
/// norm when `g = 0`).
fn orthogonal_direction<R: Rng + ?Sized>(g: &[f64], rng: &mut R) -> Vec<f64> {
    let d = g.len();
    let gg: f64 = g.iter().map(|v| v * v).sum();
    loop {
        let mut z: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        if gg > 0.0 {
            let c = crate::linalg::dot(&z, g) / gg;
            z.iter_mut().zip(g).for_each(|(zi, gi)| *zi -= c * gi);
        }
        let n = norm2(&z);
        if n > 1e-12 {
            let target = if gg > 0.0 { gg.sqrt() } else { 1.0 };
            z.iter_mut().for_each(|v| *v *= target / n);
            return z;
        }
    }
}

/// `10 √(d ln n)`.
pub fn default_prune_radius(d: usize, n: usize) -> f64 {
    10.0 * (d as f64 * (n.max(2) as f64).ln()).sqrt()
}

/// Drops samples with `‖x‖ > radius` or `|y| > radius · (s + 1)`, where `s`
/// estimates `√(‖β*‖²_Σ + σ²)` from the median of `y²`.
pub fn prune_gross_outliers(ds: &CorruptedDataset, radius: f64) -> Result<CorruptedDataset> {
    if !(radius > 0.0) {
        return Err(Error::config("prune radius must be positive"));
    }
    if radius.is_infinite() || ds.is_empty() {
        return Ok(ds.clone());
    }
    // Median of a χ²₁ variable.
    const CHI2_MEDIAN: f64 = 0.454_936_423_119_572_7;
    let mut sq: Vec<f64> = ds.ys().iter().map(|y| y * y).collect();
    sq.sort_by(f64::total_cmp);
    let scale = (sq[sq.len() / 2] / CHI2_MEDIAN).sqrt();
    let y_bound = radius * (scale + 1.0);
    let keep: Vec<usize> = (0..ds.len())
        .filter(|&i| norm2(ds.x(i)) <= radius && ds.y(i).abs() <= y_bound)
        .collect();
    Ok(ds.subset(&keep))
}

/// Metadata written next to a dataset CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSidecar {
    pub n: usize,
    pub d: usize,
    pub model: Option<ModelConfig>,
    pub attack: Option<AttackDescriptor>,
    pub outlier_mask: Vec<bool>,
}

impl CorruptedDataset {
    /// One row per sample: `y, x0, …, x{d−1}`, with a header line.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["y".to_string()];
        header.extend((0..self.d).map(|j| format!("x{j}")));
        out.write_record(&header)?;
        let mut rec = Vec::with_capacity(self.d + 1);
        for i in 0..self.len() {
            rec.clear();
            rec.push(self.y(i));
            rec.extend_from_slice(self.x(i));
            out.serialize(&rec)?;
        }
        out.flush()?;
        Ok(())
    }

    /// Reads a CSV written by [`write_csv`](Self::write_csv). The mask is
    /// all-false unless restored from a sidecar.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut input = csv::Reader::from_reader(r);
        let d = input.headers()?.len().checked_sub(1).filter(|&d| d > 0).ok_or_else(|| Error::input("CSV needs y and at least one x column"))?;
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for rec in input.deserialize::<Vec<f64>>() {
            let rec = rec?;
            if rec.len() != d + 1 {
                return Err(Error::input(format!("expected {} fields, found {}", d + 1, rec.len())));
            }
            ys.push(rec[0]);
            xs.extend_from_slice(&rec[1..]);
        }
        let n = ys.len();
        CorruptedDataset::new(d, xs, ys, vec![false; n])
    }

    pub fn sidecar(&self, model: Option<&ModelConfig>) -> DatasetSidecar {
        DatasetSidecar {
            n: self.len(),
            d: self.d,
            model: model.cloned(),
            attack: self.attack.clone(),
            outlier_mask: self.outlier_mask.clone(),
        }
    }

    pub fn write_sidecar<W: Write>(&self, model: Option<&ModelConfig>, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, &self.sidecar(model))?;
        Ok(())
    }

    /// Restores mask and attack metadata from a sidecar.
    pub fn with_sidecar(mut self, sidecar: &DatasetSidecar) -> Result<Self> {
        if sidecar.n != self.len() || sidecar.d != self.d || sidecar.outlier_mask.len() != self.len() {
            return Err(Error::input("sidecar does not match the dataset shape"));
        }
        self.outlier_mask = sidecar.outlier_mask.clone();
        self.attack = sidecar.attack.clone();
        Ok(self)
    }
}
