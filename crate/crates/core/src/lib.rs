//! Outlier-robust sparse linear regression.
//!
//! The crate is organised bottom-up:
//!
//! * [`linalg`] and [`sparse`]: dense symmetric matrices, hard thresholding and
//!   brute-force sparse eigenvalue oracles for small instances.
//! * [`relax`]: the convex relaxation of sparse PCA over the spectraplex with an
//!   entrywise ℓ1 budget.
//! * [`filter`] and [`ellipsoid`]: robust sparse gradient estimators built on
//!   that relaxation.
//! * [`iht`]: iterative hard thresholding driven by any gradient estimator.
//! * [`data`]: synthetic Gaussian sparse-regression data and corruption models.
//!
//! With the default `parallel` feature, per-sample kernels (gradients,
//! projection scores, support enumeration) run on rayon; without it the same
//! code paths run sequentially and produce identical results.

pub mod data;
pub mod ellipsoid;
pub mod error;
pub mod filter;
pub mod iht;
pub mod linalg;
pub mod par;
pub mod relax;
pub mod sparse;

pub use error::{Error, Result};
pub use linalg::SymMatrix;
pub use par::Execution;
pub use sparse::SparseVector;
