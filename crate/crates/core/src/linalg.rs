//! Dense symmetric matrices backed by `faer`.

use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, MatRef, Par, Side};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A dense, finite, symmetric `d × d` matrix.
///
/// Construction always symmetrizes as `(A + Aᵀ) / 2`, so accumulated
/// floating-point asymmetry never leaks into eigen-solves.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "Vec<Vec<f64>>", try_from = "Vec<Vec<f64>>")]
pub struct SymMatrix {
    data: Mat<f64>,
}

/// Eigendecomposition with eigenvalues in nondecreasing order; column `j` of
/// `vectors` belongs to `values[j]`.
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: Mat<f64>,
}

impl Eigen {
    pub fn max_value(&self) -> f64 {
        *self.values.last().expect("nonempty spectrum")
    }

    /// Unit eigenvector for the largest eigenvalue.
    pub fn top_vector(&self) -> Vec<f64> {
        let j = self.values.len() - 1;
        (0..self.vectors.nrows()).map(|i| self.vectors[(i, j)]).collect()
    }
}

impl SymMatrix {
    pub fn new(mat: Mat<f64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::input(format!(
                "matrix must be square, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        let d = mat.nrows();
        for j in 0..d {
            for i in 0..d {
                if !mat[(i, j)].is_finite() {
                    return Err(Error::input(format!("non-finite entry at ({i}, {j})")));
                }
            }
        }
        let mut data = mat;
        for j in 0..d {
            for i in (j + 1)..d {
                let avg = 0.5 * (data[(i, j)] + data[(j, i)]);
                data[(i, j)] = avg;
                data[(j, i)] = avg;
            }
        }
        Ok(SymMatrix { data })
    }

    pub fn from_fn(d: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        Self::new(Mat::from_fn(d, d, f))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::input("rows must form a square matrix"));
        }
        Self::from_fn(d, |i, j| rows[i][j])
    }

    pub fn zeros(d: usize) -> Self {
        SymMatrix { data: Mat::zeros(d, d) }
    }

    pub fn identity(d: usize) -> Self {
        Self::scaled_identity(d, 1.0)
    }

    pub fn scaled_identity(d: usize, c: f64) -> Self {
        Self::from_diag(&vec![c; d])
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let d = diag.len();
        SymMatrix {
            data: Mat::from_fn(d, d, |i, j| if i == j { diag[i] } else { 0.0 }),
        }
    }

    /// `v vᵀ`.
    pub fn outer(v: &[f64]) -> Self {
        let d = v.len();
        SymMatrix {
            data: Mat::from_fn(d, d, |i, j| v[i] * v[j]),
        }
    }

    /// Skips the finiteness scan and symmetrization; callers guarantee both.
    pub(crate) fn from_symmetric_unchecked(data: Mat<f64>) -> Self {
        debug_assert_eq!(data.nrows(), data.ncols());
        SymMatrix { data }
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[(i, j)]
    }

    pub fn as_mat(&self) -> MatRef<'_, f64> {
        self.data.as_ref()
    }

    pub fn into_mat(self) -> Mat<f64> {
        self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        (0..d).map(|i| (0..d).map(|j| self.get(i, j)).collect()).collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.get(i, i)).sum()
    }

    /// Entrywise ℓ1 norm `‖A‖₁,₁ = Σᵢⱼ |Aᵢⱼ|`.
    pub fn l11_norm(&self) -> f64 {
        self.entries().map(f64::abs).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Frobenius inner product `⟨A, B⟩ = Tr(A B)`.
    pub fn inner(&self, other: &SymMatrix) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        self.entries().zip(other.entries()).map(|(a, b)| a * b).sum()
    }

    /// `vᵀ A v`.
    pub fn quad_form(&self, v: &[f64]) -> f64 {
        let d = self.dim();
        assert_eq!(v.len(), d, "dimension mismatch");
        let mut acc = 0.0;
        for j in 0..d {
            if v[j] == 0.0 {
                continue;
            }
            let col = self.data.col(j);
            let mut s = 0.0;
            for i in 0..d {
                s += col[i] * v[i];
            }
            acc += v[j] * s;
        }
        acc
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let d = self.dim();
        assert_eq!(v.len(), d, "dimension mismatch");
        let mut out = vec![0.0; d];
        for j in 0..d {
            if v[j] == 0.0 {
                continue;
            }
            let col = self.data.col(j);
            for i in 0..d {
                out[i] += col[i] * v[j];
            }
        }
        out
    }

    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, c: f64) -> SymMatrix {
        let d = self.dim();
        SymMatrix {
            data: Mat::from_fn(d, d, |i, j| c * self.data[(i, j)]),
        }
    }

    pub fn neg(&self) -> SymMatrix {
        self.scale(-1.0)
    }

    /// Principal submatrix on `idx` (in the given order).
    pub fn principal_submatrix(&self, idx: &[usize]) -> SymMatrix {
        let m = idx.len();
        SymMatrix {
            data: Mat::from_fn(m, m, |a, b| self.data[(idx[a], idx[b])]),
        }
    }

    pub fn eigen(&self) -> Result<Eigen> {
        let d = self.dim();
        if d == 0 {
            return Err(Error::input("empty matrix"));
        }
        let evd = self
            .data
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::NumericFailure(format!("eigendecomposition failed: {e:?}")))?;
        let s = evd.S().column_vector();
        let values: Vec<f64> = (0..d).map(|i| s[i]).collect();
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::NumericFailure("non-finite eigenvalue".into()));
        }
        debug_assert!(values.windows(2).all(|w| w[0] <= w[1]));
        Ok(Eigen {
            values,
            vectors: evd.U().to_owned(),
        })
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        if self.dim() == 0 {
            return Err(Error::input("empty matrix"));
        }
        let mut values = self
            .data
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::NumericFailure(format!("eigenvalue solve failed: {e:?}")))?;
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::NumericFailure("non-finite eigenvalue".into()));
        }
        values.sort_by(f64::total_cmp);
        Ok(values)
    }

    pub fn lambda_max(&self) -> Result<f64> {
        Ok(*self.eigenvalues()?.last().expect("nonempty"))
    }

    pub fn lambda_min(&self) -> Result<f64> {
        Ok(self.eigenvalues()?[0])
    }

    fn entries(&self) -> impl Iterator<Item = f64> + '_ {
        let d = self.dim();
        (0..d).flat_map(move |j| (0..d).map(move |i| self.data[(i, j)]))
    }

    fn zip_with(&self, other: &SymMatrix, f: impl Fn(f64, f64) -> f64) -> SymMatrix {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        let d = self.dim();
        SymMatrix {
            data: Mat::from_fn(d, d, |i, j| f(self.data[(i, j)], other.data[(i, j)])),
        }
    }
}

impl From<SymMatrix> for Vec<Vec<f64>> {
    fn from(m: SymMatrix) -> Self {
        m.to_rows()
    }
}

impl TryFrom<Vec<Vec<f64>>> for SymMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        SymMatrix::from_rows(&rows)
    }
}

/// `scale · Dᵀ D` for a row-major sample matrix `D` (`m × d`), i.e. the
/// (weighted) second moment of the rows when `scale = 1/m`.
pub fn gram(rows: MatRef<'_, f64>, scale: f64) -> SymMatrix {
    let d = rows.ncols();
    let mut out = Mat::<f64>::zeros(d, d);
    matmul(&mut out, Accum::Replace, rows.transpose(), rows, scale, Par::Seq);
    // gemm leaves rounding-level asymmetry; mirror the lower triangle.
    for j in 0..d {
        for i in (j + 1)..d {
            out[(j, i)] = out[(i, j)];
        }
    }
    SymMatrix::from_symmetric_unchecked(out)
}

/// Euclidean norm.
pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
