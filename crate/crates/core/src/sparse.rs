//! Hard thresholding and brute-force sparse eigenvalue oracles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SymMatrix;
use crate::par::Execution;

/// Largest number of supports the brute-force oracles will enumerate.
pub const ENUMERATION_LIMIT: u64 = 1_000_000;

/// A dense vector carrying a sparsity budget it is guaranteed to respect.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    values: Vec<f64>,
    declared_sparsity: usize,
}

impl SparseVector {
    pub fn new(values: Vec<f64>, declared_sparsity: usize) -> Result<Self> {
        if let Some(i) = values.iter().position(|x| !x.is_finite()) {
            return Err(Error::input(format!("non-finite entry at index {i}")));
        }
        let nnz = values.iter().filter(|&&x| x != 0.0).count();
        if nnz > declared_sparsity {
            return Err(Error::input(format!(
                "{nnz} nonzeros exceed declared sparsity {declared_sparsity}"
            )));
        }
        Ok(SparseVector {
            values,
            declared_sparsity,
        })
    }

    pub fn zeros(d: usize, declared_sparsity: usize) -> Self {
        SparseVector {
            values: vec![0.0; d],
            declared_sparsity,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn declared_sparsity(&self) -> usize {
        self.declared_sparsity
    }

    pub fn nnz(&self) -> usize {
        self.values.iter().filter(|&&x| x != 0.0).count()
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&i| self.values[i] != 0.0).collect()
    }

    pub fn norm2(&self) -> f64 {
        crate::linalg::norm2(&self.values)
    }

    /// `‖self − other‖₂`.
    pub fn distance(&self, other: &[f64]) -> f64 {
        assert_eq!(self.dim(), other.len(), "dimension mismatch");
        self.values
            .iter()
            .zip(other)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

impl AsRef<[f64]> for SparseVector {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

/// Keeps the `s` largest-magnitude entries of `v` and zeroes the rest.
///
/// Among equal magnitudes the lowest index wins.
pub fn hard_threshold(v: &[f64], s: usize) -> Result<SparseVector> {
    if let Some(i) = v.iter().position(|x| !x.is_finite()) {
        return Err(Error::input(format!("non-finite entry at index {i}")));
    }
    let d = v.len();
    if s >= d {
        return Ok(SparseVector {
            values: v.to_vec(),
            declared_sparsity: s,
        });
    }
    let mut order: Vec<usize> = (0..d).collect();
    // stable sort keeps ascending index order among ties
    order.sort_by(|&a, &b| v[b].abs().total_cmp(&v[a].abs()));
    let mut values = vec![0.0; d];
    for &i in &order[..s] {
        values[i] = v[i];
    }
    Ok(SparseVector {
        values,
        declared_sparsity: s,
    })
}

/// Maximizer of `vᵀ A v` over unit vectors with at most `s` nonzeros.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseEigen {
    pub value: f64,
    pub support: Vec<usize>,
    /// Unit vector in the full dimension, zero off `support`.
    pub direction: Vec<f64>,
}

/// Number of `s`-subsets of `d` items, saturating at `u64::MAX`.
pub fn binomial(d: usize, s: usize) -> u64 {
    if s > d {
        return 0;
    }
    let s = s.min(d - s);
    let mut acc: u128 = 1;
    for i in 0..s {
        acc = acc * (d - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// Exact `max_{‖v‖₂=1, ‖v‖₀≤s} vᵀ A v` by enumerating supports.
///
/// Supports of size exactly `min(s, d)` suffice: by eigenvalue interlacing a
/// principal submatrix never has a larger top eigenvalue than any principal
/// submatrix containing it.
pub fn sparse_largest_eigenvalue_bf(a: &SymMatrix, s: usize) -> Result<SparseEigen> {
    sparse_largest_eigenvalue_bf_with(a, s, Execution::default())
}

pub fn sparse_largest_eigenvalue_bf_with(
    a: &SymMatrix,
    s: usize,
    exec: Execution,
) -> Result<SparseEigen> {
    let d = a.dim();
    if d == 0 {
        return Err(Error::input("empty matrix"));
    }
    if s == 0 {
        return Err(Error::input("sparsity budget must be at least 1"));
    }
    let s = s.min(d);
    let count = binomial(d, s);
    if count > ENUMERATION_LIMIT {
        return Err(Error::SizeLimit {
            d,
            s,
            limit: ENUMERATION_LIMIT,
        });
    }

    // One task per leading index; each task enumerates its own suffixes.
    let per_lead = exec.map_indexed(d - s + 1, |lead| -> Result<Option<(f64, Vec<usize>, Vec<f64>)>> {
        let mut best: Option<(f64, Vec<usize>, Vec<f64>)> = None;
        let mut combo: Vec<usize> = (lead..lead + s).collect();
        loop {
            let (value, vec) = top_eigenpair(a, &combo)?;
            if best.as_ref().is_none_or(|b| value > b.0) {
                best = Some((value, combo.clone(), vec));
            }
            if !next_combination(&mut combo[1..], d) {
                break;
            }
        }
        Ok(best)
    });

    let mut best: Option<(f64, Vec<usize>, Vec<f64>)> = None;
    for candidate in per_lead {
        if let Some(c) = candidate? {
            if best.as_ref().is_none_or(|b| c.0 > b.0) {
                best = Some(c);
            }
        }
    }
    let (value, support, local) = best.expect("at least one support");
    let mut direction = vec![0.0; d];
    for (&i, &x) in support.iter().zip(&local) {
        direction[i] = x;
    }
    Ok(SparseEigen {
        value,
        support,
        direction,
    })
}

/// Exact `max_{‖v‖₂=1, ‖v‖₀≤s} |vᵀ A v|`.
pub fn sparse_operator_norm_bf(a: &SymMatrix, s: usize) -> Result<f64> {
    let upper = sparse_largest_eigenvalue_bf(a, s)?.value;
    let lower = sparse_largest_eigenvalue_bf(&a.neg(), s)?.value;
    Ok(upper.max(lower))
}

/// Squared contraction factor `ζ` of `H_{k'}` towards any `k`-sparse vector:
/// `‖H_{k'}(z) − β‖₂ ≤ √ζ ‖z − β‖₂` whenever `k' ≥ k`.
pub fn threshold_contraction_factor(k: usize, k_prime: usize, d: usize) -> f64 {
    assert!(k_prime >= k, "k' must be at least k");
    let m = k.min(d.saturating_sub(k_prime));
    if m == 0 {
        return 1.0;
    }
    let rho = m as f64 / ((k_prime - k) as f64 + m as f64);
    1.0 + (rho + ((4.0 + rho) * rho).sqrt()) / 2.0
}

fn top_eigenpair(a: &SymMatrix, idx: &[usize]) -> Result<(f64, Vec<f64>)> {
    match idx.len() {
        1 => Ok((a.get(idx[0], idx[0]), vec![1.0])),
        2 => {
            let (p, q, r) = (a.get(idx[0], idx[0]), a.get(idx[0], idx[1]), a.get(idx[1], idx[1]));
            let mid = 0.5 * (p + r);
            let rad = (0.25 * (p - r) * (p - r) + q * q).sqrt();
            let value = mid + rad;
            // (q, value - p) and (value - r, q) both span the eigenspace; pick the better conditioned.
            let (x, y) = if (value - p).abs() + q.abs() >= (value - r).abs() + q.abs() {
                (q, value - p)
            } else {
                (value - r, q)
            };
            let n = (x * x + y * y).sqrt();
            if n == 0.0 {
                // scalar multiple of the identity
                Ok((value, vec![1.0, 0.0]))
            } else {
                Ok((value, vec![x / n, y / n]))
            }
        }
        _ => {
            let e = a.principal_submatrix(idx).eigen()?;
            Ok((e.max_value(), e.top_vector()))
        }
    }
}

/// Advances `tail` to the next increasing combination with entries `< n`.
/// `tail` must start strictly above the fixed leading element.
fn next_combination(tail: &mut [usize], n: usize) -> bool {
    let m = tail.len();
    for pos in (0..m).rev() {
        if tail[pos] < n - (m - pos) {
            tail[pos] += 1;
            for later in pos + 1..m {
                tail[later] = tail[later - 1] + 1;
            }
            return true;
        }
    }
    false
}
