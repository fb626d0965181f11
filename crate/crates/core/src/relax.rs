//! Convex relaxation of sparse PCA:
//!
//! ```text
//! λ* = max ⟨A, H⟩   s.t.   H ⪰ 0,  Tr H = 1,  ‖H‖₁,₁ ≤ k̃
//! ```
//!
//! for a symmetric, possibly indefinite `A`.
//!
//! The solver splits the feasible set into the spectraplex `{H ⪰ 0, Tr H = 1}`
//! and the entrywise ℓ1 ball and runs ADMM between the two projections. Large
//! instances are solved on a growing working set of coordinates: the restricted
//! problem is solved, its dual multiplier is extended to the full matrix, and
//! the resulting upper bound `μ k̃ + λ_max(A − U)` either certifies the
//! restricted solution or points at the coordinates to add next.

use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, Par, Side};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SymMatrix;

/// Problems at or below this dimension are always solved on all coordinates.
const FULL_SOLVE_DIM: usize = 64;
const MAX_WORKING_SET_ROUNDS: usize = 12;
/// Round limit when only a threshold decision is wanted.
const MAX_DECISION_ROUNDS: usize = 4;
const GAP_CHECK_EVERY: usize = 10;
/// Against a threshold `t`, a duality gap below this fraction of `|t|` is
/// accurate enough to stop.
const DECISION_TOLERANCE: f64 = 1e-2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub max_iterations: usize,
    pub primal_tolerance: f64,
    pub dual_tolerance: f64,
    /// Augmented-Lagrangian weight, applied to the max-abs normalized matrix.
    pub penalty: f64,
    /// Recorded for reproducibility; the solver itself is deterministic.
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iterations: 5000,
            primal_tolerance: 1e-7,
            dual_tolerance: 1e-7,
            penalty: 1.0,
            seed: 0,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::config("max_iterations must be at least 1"));
        }
        if !(self.primal_tolerance > 0.0 && self.dual_tolerance > 0.0) {
            return Err(Error::config("tolerances must be positive"));
        }
        if !(self.penalty > 0.0 && self.penalty.is_finite()) {
            return Err(Error::config("penalty must be positive and finite"));
        }
        Ok(())
    }

    /// Duality-gap tolerance on the normalized problem.
    fn gap_tolerance(&self) -> f64 {
        100.0 * self.primal_tolerance.max(self.dual_tolerance)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SparsePcaSolution {
    pub lambda_star: f64,
    pub h_star: SymMatrix,
    /// Largest violation among `−λ_min(H*)`, `|Tr H* − 1|`, `‖H*‖₁,₁ − k̃`.
    pub feasibility_gap: f64,
    /// Total ADMM iterations across working-set rounds.
    pub iterations: usize,
    pub converged: bool,
    /// Dual upper bound on λ*; `upper_bound − lambda_star` is the duality gap.
    pub upper_bound: f64,
    /// Coordinates on which `h_star` may be nonzero.
    pub support: Vec<usize>,
}

impl SparsePcaSolution {
    pub fn duality_gap(&self) -> f64 {
        (self.upper_bound - self.lambda_star).max(0.0)
    }
}

/// Which side of a threshold the optimum was shown to lie on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    /// The dual bound is at or below the threshold.
    Below,
    /// A feasible `H` attains more than the threshold.
    Above,
    Undecided,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdSolution {
    pub solution: SparsePcaSolution,
    pub verdict: Verdict,
}

/// Solves the relaxation for `a` with entrywise ℓ1 budget `k_tilde`.
///
/// Never fails on slow convergence: the best feasible iterate is returned with
/// `converged = false`.
pub fn solve_relaxation(a: &SymMatrix, k_tilde: usize, opts: &SolverOptions) -> Result<SparsePcaSolution> {
    Ok(solve(a, k_tilde, opts, None)?.solution)
}

/// Like [`solve_relaxation`], but stops as soon as the optimum is known to be
/// above or below `threshold`. An `Above` solution is feasible but usually not
/// optimal; a `Below` solution carries the bound in `upper_bound`.
pub fn solve_relaxation_against(
    a: &SymMatrix,
    k_tilde: usize,
    opts: &SolverOptions,
    threshold: f64,
) -> Result<ThresholdSolution> {
    if threshold.is_nan() {
        return Err(Error::input("threshold is NaN"));
    }
    solve(a, k_tilde, opts, Some(threshold))
}

fn verdict_of(lower: f64, upper: f64, threshold: Option<f64>) -> Verdict {
    match threshold {
        Some(t) if lower > t => Verdict::Above,
        Some(t) if upper <= t => Verdict::Below,
        _ => Verdict::Undecided,
    }
}

fn solve(a: &SymMatrix, k_tilde: usize, opts: &SolverOptions, threshold: Option<f64>) -> Result<ThresholdSolution> {
    opts.validate()?;
    let d = a.dim();
    if d == 0 {
        return Err(Error::input("empty matrix"));
    }
    if !(1..=d * d).contains(&k_tilde) {
        return Err(Error::input(format!(
            "k_tilde must lie in [1, d²] = [1, {}], got {k_tilde}",
            d * d
        )));
    }

    let k_tilde = k_tilde as f64;
    let scale = a.max_abs();
    if scale == 0.0 {
        let mut h = Mat::zeros(d, d);
        h[(0, 0)] = 1.0;
        return Ok(ThresholdSolution {
            solution: SparsePcaSolution {
                lambda_star: 0.0,
                h_star: SymMatrix::from_symmetric_unchecked(h),
                feasibility_gap: 0.0,
                iterations: 0,
                converged: true,
                upper_bound: 0.0,
                support: vec![0],
            },
            verdict: verdict_of(0.0, 0.0, threshold),
        });
    }

    // ‖H‖₁,₁ ≤ (Σᵢ √Hᵢᵢ)² ≤ d·Tr H on the spectraplex, so the budget is inactive.
    if k_tilde >= d as f64 {
        let e = a.eigen()?;
        let v = e.top_vector();
        let h = SymMatrix::outer(&v);
        let lambda_star = a.inner(&h);
        let support = (0..d).filter(|&i| v[i] != 0.0).collect();
        let upper_bound = e.max_value();
        return Ok(ThresholdSolution {
            solution: SparsePcaSolution {
                lambda_star,
                feasibility_gap: feasibility_gap_dense(&h, k_tilde)?,
                h_star: h,
                iterations: 0,
                converged: true,
                upper_bound,
                support,
            },
            verdict: verdict_of(lambda_star, upper_bound, threshold),
        });
    }

    let b = a.scale(1.0 / scale);
    let threshold = threshold.map(|t| t / scale);
    let mut solver = WorkingSetSolver::new(&b, k_tilde, opts, threshold)?;
    let outcome = solver.run()?;

    let support = outcome.set.clone();
    let h_star = embed(&outcome.h_block, &outcome.set, d);
    let lambda_star = a.inner(&h_star);
    if !lambda_star.is_finite() {
        return Err(Error::NumericFailure("non-finite objective".into()));
    }
    let feasibility_gap = feasibility_gap_block(&outcome.h_block, k_tilde)?;
    let upper_bound = outcome.upper_bound * scale;
    Ok(ThresholdSolution {
        verdict: verdict_of(lambda_star, upper_bound, threshold.map(|t| t * scale)),
        solution: SparsePcaSolution {
            lambda_star,
            h_star,
            feasibility_gap,
            iterations: outcome.iterations,
            converged: outcome.converged,
            upper_bound,
            support,
        },
    })
}

struct WorkingSetOutcome {
    set: Vec<usize>,
    h_block: Mat<f64>,
    iterations: usize,
    converged: bool,
    upper_bound: f64,
}

struct WorkingSetSolver<'a> {
    b: &'a SymMatrix,
    k_tilde: f64,
    opts: &'a SolverOptions,
    threshold: Option<f64>,
}

impl<'a> WorkingSetSolver<'a> {
    fn new(b: &'a SymMatrix, k_tilde: f64, opts: &'a SolverOptions, threshold: Option<f64>) -> Result<Self> {
        Ok(WorkingSetSolver { b, k_tilde, opts, threshold })
    }

    fn initial_set(&self, top: &[f64]) -> Vec<usize> {
        let d = self.b.dim();
        if d <= FULL_SOLVE_DIM {
            return (0..d).collect();
        }
        let m0 = ((2.0 * self.k_tilde).ceil() as usize).max(16).min(d);
        let diag = self.b.diagonal();
        let mut chosen = vec![false; d];
        let mut set = Vec::with_capacity(2 * m0);
        for key in [&diag, &top.iter().map(|x| x.abs()).collect::<Vec<_>>()] {
            let mut order: Vec<usize> = (0..d).collect();
            order.sort_by(|&i, &j| key[j].total_cmp(&key[i]));
            for &i in order.iter().take(m0) {
                if !chosen[i] {
                    chosen[i] = true;
                    set.push(i);
                }
            }
        }
        if 2 * set.len() > d {
            return (0..d).collect();
        }
        set
    }

    fn run(&mut self) -> Result<WorkingSetOutcome> {
        let d = self.b.dim();
        let eigen = self.b.eigen()?;
        let top = eigen.top_vector();

        // `⟨B, H⟩ ≤ min(λ_max(B), k̃ max|B|)` and `max|B| = 1` after normalization.
        let cheap_bound = eigen.max_value().min(self.k_tilde);
        if self.threshold.is_some_and(|t| cheap_bound <= t) {
            let start = AdmmState::from_vector(&top, self.k_tilde, self.opts.penalty)?;
            let (h_block, _) = repair(&start.z, self.b.as_mat(), self.k_tilde);
            return Ok(WorkingSetOutcome {
                set: (0..d).collect(),
                h_block,
                iterations: 0,
                converged: false,
                upper_bound: cheap_bound,
            });
        }

        let mut set = self.initial_set(&top);
        let mut warm: Option<AdmmState> = None;
        let mut iterations = 0;
        let gap_tol = self.opts.gap_tolerance();
        let slack = self.threshold.map_or(0.0, |t| DECISION_TOLERANCE * t.abs());

        for round in 0.. {
            let sub = self.b.principal_submatrix(&set);
            let state = match warm.take() {
                Some(prev) => prev.extended(set.len()),
                None => AdmmState::warm_start(&sub, self.k_tilde, self.opts.penalty)?,
            };
            let budget = self.opts.max_iterations.saturating_sub(iterations).max(1);
            let result = admm(&sub, self.k_tilde, self.opts, state, budget, self.threshold, slack)?;
            iterations += result.iterations;

            let full = set.len() == d;
            let lower = result.objective;
            if self.threshold.is_some_and(|t| lower > t) {
                // Decided above; a tighter bound would not change the answer.
                return Ok(WorkingSetOutcome {
                    set,
                    h_block: result.h_feasible,
                    iterations,
                    converged: result.converged,
                    upper_bound: cheap_bound,
                });
            }
            let (upper, top) = self.dual_bound(&set, &result.state.w, result.state.rho)?;
            let gap = upper - lower;
            let gap_ok = gap <= (gap_tol * lower.abs().max(1.0)).max(slack);

            let rounds = if self.threshold.is_some() { MAX_DECISION_ROUNDS } else { MAX_WORKING_SET_ROUNDS };
            let exhausted = iterations >= self.opts.max_iterations || round + 1 >= rounds;
            let decided = self.threshold.is_some_and(|t| lower > t || upper <= t);
            if full || gap_ok || exhausted || decided {
                return Ok(WorkingSetOutcome {
                    set,
                    h_block: result.h_feasible,
                    iterations,
                    converged: result.converged && (full || gap_ok),
                    upper_bound: upper,
                });
            }

            // Grow by the coordinates the dual certificate says are missing.
            let in_set = membership(&set, d);
            let mut candidates: Vec<usize> = (0..d).filter(|&i| !in_set[i] && top[i].abs() > 1e-4).collect();
            if candidates.is_empty() {
                // The gap comes from the restricted solve itself.
                return Ok(WorkingSetOutcome {
                    set,
                    h_block: result.h_feasible,
                    iterations,
                    converged: false,
                    upper_bound: upper,
                });
            }
            candidates.sort_by(|&i, &j| top[j].abs().total_cmp(&top[i].abs()));
            let grow = (self.k_tilde.ceil() as usize).max(8);
            set.extend(candidates.into_iter().take(grow));
            if 2 * set.len() > d {
                // Cheaper to finish on everything than to keep growing.
                let mut rest: Vec<usize> = (0..d).filter(|&i| !membership(&set, d)[i]).collect();
                set.append(&mut rest);
            }
            warm = Some(result.state);
        }
        unreachable!()
    }

    /// Upper bound `μ k̃ + λ_max(B − U)` from the restricted multiplier `ρ W`,
    /// with off-block entries of `U` chosen as `clamp(B_ij, −μ, μ)`. Also
    /// returns the top eigenvector of `B − U`.
    fn dual_bound(&self, set: &[usize], w: &Mat<f64>, rho: f64) -> Result<(f64, Vec<f64>)> {
        let d = self.b.dim();
        let m = set.len();
        let mut mu = 0.0f64;
        for j in 0..m {
            for i in 0..m {
                mu = mu.max((rho * w[(i, j)]).abs());
            }
        }
        let bm = self.b.as_mat();
        let mut residual = Mat::<f64>::from_fn(d, d, |i, j| {
            let v = bm[(i, j)];
            v - v.clamp(-mu, mu)
        });
        for (a, &i) in set.iter().enumerate() {
            for (c, &j) in set.iter().enumerate() {
                residual[(i, j)] = bm[(i, j)] - rho * w[(a, c)];
            }
        }
        let e = SymMatrix::new(residual)?.eigen()?;
        Ok((mu * self.k_tilde + e.max_value(), e.top_vector()))
    }
}

#[derive(Clone)]
struct AdmmState {
    z: Mat<f64>,
    /// Scaled multiplier; the unscaled one is `rho * w`.
    w: Mat<f64>,
    rho: f64,
}

impl AdmmState {
    /// Starts from `v vᵀ`, `v` the top eigenvector of `B` thresholded to
    /// `⌊k̃⌋` entries, which is feasible for both constraint sets.
    fn warm_start(b: &SymMatrix, k_tilde: f64, rho: f64) -> Result<Self> {
        Self::from_vector(&b.eigen()?.top_vector(), k_tilde, rho)
    }

    fn from_vector(top: &[f64], k_tilde: f64, rho: f64) -> Result<Self> {
        let m = top.len();
        let keep = (k_tilde.floor() as usize).max(1);
        let mut v = crate::sparse::hard_threshold(top, keep)?.into_values();
        let n = crate::linalg::norm2(&v);
        if n > 0.0 {
            v.iter_mut().for_each(|x| *x /= n);
        } else {
            v[0] = 1.0;
        }
        Ok(AdmmState {
            z: Mat::from_fn(m, m, |i, j| v[i] * v[j]),
            w: Mat::zeros(m, m),
            rho,
        })
    }

    /// Pads to `m` coordinates, keeping the existing block in the top-left.
    fn extended(self, m: usize) -> Self {
        let old = self.z.nrows();
        let pad = |x: &Mat<f64>| Mat::from_fn(m, m, |i, j| if i < old && j < old { x[(i, j)] } else { 0.0 });
        AdmmState {
            z: pad(&self.z),
            w: pad(&self.w),
            rho: self.rho,
        }
    }
}

struct AdmmResult {
    state: AdmmState,
    /// Feasible iterate (after repair) reported to the caller.
    h_feasible: Mat<f64>,
    /// `⟨B, h_feasible⟩`.
    objective: f64,
    iterations: usize,
    converged: bool,
}

fn admm(
    b: &SymMatrix,
    k_tilde: f64,
    opts: &SolverOptions,
    start: AdmmState,
    budget: usize,
    threshold: Option<f64>,
    slack: f64,
) -> Result<AdmmResult> {
    let m = b.dim();
    let bm = b.as_mat();
    let gap_tol = opts.gap_tolerance();
    let AdmmState { mut z, mut w, mut rho } = start;
    let mut best: Option<(f64, Mat<f64>)> = None;

    for it in 1..=budget {
        let target = Mat::from_fn(m, m, |i, j| z[(i, j)] - w[(i, j)] + bm[(i, j)] / rho);
        let h = project_spectraplex_mat(&target)?;

        let mut z_new = Mat::from_fn(m, m, |i, j| h[(i, j)] + w[(i, j)]);
        project_l1_ball_mat(&mut z_new, k_tilde);

        let mut primal = 0.0;
        let mut dual = 0.0;
        for j in 0..m {
            for i in 0..m {
                let r = h[(i, j)] - z_new[(i, j)];
                w[(i, j)] += r;
                primal += r * r;
                let s = z_new[(i, j)] - z[(i, j)];
                dual += s * s;
            }
        }
        z = z_new;
        let primal = primal.sqrt();
        let dual = rho * dual.sqrt();
        if !(primal.is_finite() && dual.is_finite()) {
            return Err(Error::NumericFailure("non-finite ADMM iterate".into()));
        }

        let residuals_met = primal <= opts.primal_tolerance && dual <= opts.dual_tolerance;
        if residuals_met || it % GAP_CHECK_EVERY == 0 || it == budget {
            let (hf, obj) = repair(&h, bm, k_tilde);
            let above = threshold.is_some_and(|t| obj > t);
            let certified = residuals_met
                || restricted_upper_bound(bm, &w, rho, k_tilde)? - obj <= (gap_tol * obj.abs().max(1.0)).max(slack);
            if certified || above {
                return Ok(AdmmResult {
                    state: AdmmState { z, w, rho },
                    h_feasible: hf,
                    objective: obj,
                    iterations: it,
                    converged: certified,
                });
            }
            if best.as_ref().is_none_or(|(o, _)| obj > *o) {
                best = Some((obj, hf));
            }
        }

        // Residual balancing; the scaled multiplier follows the penalty.
        if it % 10 == 0 {
            let factor = if primal > 10.0 * dual {
                2.0
            } else if dual > 10.0 * primal {
                0.5
            } else {
                1.0
            };
            if factor != 1.0 {
                rho *= factor;
                for j in 0..m {
                    for i in 0..m {
                        w[(i, j)] /= factor;
                    }
                }
            }
        }
    }
    let (objective, h_feasible) = best.expect("budget >= 1 records an iterate");
    Ok(AdmmResult {
        state: AdmmState { z, w, rho },
        h_feasible,
        objective,
        iterations: budget,
        converged: false,
    })
}

/// `μ k̃ + λ_max(B − ρW)` with `μ = max |ρW|`, valid for the restricted problem.
fn restricted_upper_bound(b: faer::MatRef<'_, f64>, w: &Mat<f64>, rho: f64, k_tilde: f64) -> Result<f64> {
    let m = w.nrows();
    let mut mu = 0.0f64;
    let resid = Mat::from_fn(m, m, |i, j| {
        let u = rho * w[(i, j)];
        mu = mu.max(u.abs());
        b[(i, j)] - u
    });
    let top = SymMatrix::new(resid)?.lambda_max()?;
    Ok(mu * k_tilde + top)
}

/// Mixes a spectraplex point with `e_i e_iᵀ` until the ℓ1 budget holds.
/// Returns the feasible matrix and its objective against `b`.
fn repair(h: &Mat<f64>, b: faer::MatRef<'_, f64>, k_tilde: f64) -> (Mat<f64>, f64) {
    let m = h.nrows();
    let mut l1 = 0.0;
    let mut obj = 0.0;
    for j in 0..m {
        for i in 0..m {
            l1 += h[(i, j)].abs();
            obj += h[(i, j)] * b[(i, j)];
        }
    }
    if l1 <= k_tilde {
        return (h.clone(), obj);
    }
    let pivot = (0..m).max_by(|&i, &j| b[(i, i)].total_cmp(&b[(j, j)])).unwrap_or(0);
    let t = (l1 - k_tilde) / (l1 - 1.0);
    let mut out = Mat::from_fn(m, m, |i, j| (1.0 - t) * h[(i, j)]);
    out[(pivot, pivot)] += t;
    (out, (1.0 - t) * obj + t * b[(pivot, pivot)])
}

/// Euclidean projection onto `{H ⪰ 0, Tr H = 1}`.
pub fn project_spectraplex(m: &SymMatrix) -> Result<SymMatrix> {
    Ok(SymMatrix::from_symmetric_unchecked(project_spectraplex_mat(&m.as_mat().to_owned())?))
}

fn project_spectraplex_mat(m: &Mat<f64>) -> Result<Mat<f64>> {
    let n = m.nrows();
    let evd = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::NumericFailure(format!("eigendecomposition failed: {e:?}")))?;
    let s = evd.S().column_vector();
    let values: Vec<f64> = (0..n).map(|i| s[i]).collect();
    if values.iter().any(|x| !x.is_finite()) {
        return Err(Error::NumericFailure("non-finite eigenvalue".into()));
    }
    let weights = project_simplex(&values);
    let keep: Vec<usize> = (0..n).filter(|&j| weights[j] > 0.0).collect();
    let u = evd.U();
    let y = Mat::from_fn(n, keep.len(), |i, c| u[(i, keep[c])] * weights[keep[c]].sqrt());
    let mut out = Mat::<f64>::zeros(n, n);
    matmul(&mut out, Accum::Replace, &y, y.transpose(), 1.0, Par::Seq);
    for j in 0..n {
        for i in (j + 1)..n {
            let avg = 0.5 * (out[(i, j)] + out[(j, i)]);
            out[(i, j)] = avg;
            out[(j, i)] = avg;
        }
    }
    Ok(out)
}

/// Euclidean projection of `v` onto the probability simplex.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &x) in sorted.iter().enumerate() {
        cumsum += x;
        let t = (cumsum - 1.0) / (j + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Entrywise projection of `m` onto `{‖H‖₁,₁ ≤ radius}`.
pub fn project_l1_ball(m: &SymMatrix, radius: f64) -> Result<SymMatrix> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::input("radius must be positive and finite"));
    }
    let mut out = m.as_mat().to_owned();
    project_l1_ball_mat(&mut out, radius);
    Ok(SymMatrix::from_symmetric_unchecked(out))
}

fn project_l1_ball_mat(m: &mut Mat<f64>, radius: f64) {
    let n = m.nrows();
    let mut mags = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            mags.push(m[(i, j)].abs());
        }
    }
    let theta = l1_threshold(&mut mags, radius);
    if theta <= 0.0 {
        return;
    }
    for j in 0..n {
        for i in 0..n {
            let x = m[(i, j)];
            m[(i, j)] = x.signum() * (x.abs() - theta).max(0.0);
        }
    }
}

/// Soft-threshold level putting `mags` on the ℓ1 sphere of `radius`, or 0 when
/// already inside. Reorders `mags`.
fn l1_threshold(mags: &mut [f64], radius: f64) -> f64 {
    let total: f64 = mags.iter().sum();
    if total <= radius {
        return 0.0;
    }
    mags.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &x) in mags.iter().enumerate() {
        cumsum += x;
        let t = (cumsum - radius) / (j + 1) as f64;
        if x > t {
            theta = t;
        } else {
            break;
        }
    }
    theta
}

fn embed(block: &Mat<f64>, set: &[usize], d: usize) -> SymMatrix {
    let mut out = Mat::<f64>::zeros(d, d);
    for (a, &i) in set.iter().enumerate() {
        for (c, &j) in set.iter().enumerate() {
            out[(i, j)] = block[(a, c)];
        }
    }
    SymMatrix::from_symmetric_unchecked(out)
}

fn membership(set: &[usize], d: usize) -> Vec<bool> {
    let mut v = vec![false; d];
    for &i in set {
        v[i] = true;
    }
    v
}

fn feasibility_gap_block(h: &Mat<f64>, k_tilde: f64) -> Result<f64> {
    feasibility_gap_dense(&SymMatrix::from_symmetric_unchecked(h.clone()), k_tilde)
}

fn feasibility_gap_dense(h: &SymMatrix, k_tilde: f64) -> Result<f64> {
    let psd = (-h.lambda_min()?).max(0.0);
    let trace = (h.trace() - 1.0).abs();
    let l1 = (h.l11_norm() - k_tilde).max(0.0);
    Ok(psd.max(trace).max(l1))
}
