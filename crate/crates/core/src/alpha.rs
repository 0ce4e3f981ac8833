//! Single-layer α-divergence NMF.
//!
//! The cost between a data matrix `Y` and a reconstruction `Ŷ = AX` is
//!
//! ```text
//! D_α(Y ‖ Ŷ) = 1/(α(α−1)) Σ_it ( y^α ŷ^(1−α) − α y + (α−1) ŷ )
//! ```
//!
//! and is minimised by the multiplicative updates
//!
//! ```text
//! x_jt ← x_jt · ( Σ_i a_ij (y_it/ŷ_it)^α / Σ_i a_ij )^(1/α)
//! a_ij ← a_ij · ( Σ_t x_jt (y_it/ŷ_it)^α / Σ_t x_jt )^(1/α)
//! ```
//!
//! Each update is the exact minimiser of a Jensen-type majoriser
//! ([`auxiliary_g`]), so the cost never increases. The limits α → 0 and
//! α → 1 (the two KL divergences) are not supported.
//!
//! Zero handling: reconstructions are floored at `eps` before use, factors
//! are floored after every update, and for α < 0 the data is floored too so
//! every negative power stays finite.

use ndarray::{Array2, Axis, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{EpsilonPolicy, NonNegMatrix};

/// Negative round-off below this magnitude is reported as zero divergence.
const NEGATIVE_ROUNDOFF: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub alpha: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub eps: EpsilonPolicy,
    pub seed: u64,
}

impl SolverConfig {
    pub const DEFAULT_MAX_ITER: usize = 500;
    pub const DEFAULT_TOL: f64 = 1e-6;

    pub fn new(alpha: f64, seed: u64) -> Result<Self> {
        let cfg = Self {
            alpha,
            max_iter: Self::DEFAULT_MAX_ITER,
            tol: Self::DEFAULT_TOL,
            eps: EpsilonPolicy::default(),
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_eps(mut self, eps: EpsilonPolicy) -> Self {
        self.eps = eps;
        self
    }

    pub fn validate(&self) -> Result<()> {
        validate_alpha(self.alpha)?;
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be at least 1".into()));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::Config(format!("tol must be positive, got {}", self.tol)));
        }
        Ok(())
    }
}

pub(crate) fn validate_alpha(alpha: f64) -> Result<()> {
    if !alpha.is_finite() || alpha == 0.0 || alpha == 1.0 {
        return Err(Error::Config(format!(
            "alpha must be finite and not 0 or 1, got {alpha}"
        )));
    }
    Ok(())
}

/// Basis `A` (I×J) and activations `X` (J×T).
#[derive(Debug, Clone, PartialEq)]
pub struct FactorPair {
    pub a: NonNegMatrix,
    pub x: NonNegMatrix,
}

impl FactorPair {
    pub fn new(a: NonNegMatrix, x: NonNegMatrix) -> Result<Self> {
        if a.cols() != x.rows() {
            return Err(Error::ShapeMismatch {
                op: "FactorPair::new",
                left: a.shape(),
                right: x.shape(),
            });
        }
        Ok(Self { a, x })
    }

    pub fn rank(&self) -> usize {
        self.a.cols()
    }

    pub fn reconstruct(&self) -> NonNegMatrix {
        self.a.matmul(&self.x).expect("inner dimensions checked at construction")
    }
}

/// Divergence after each completed iteration, preceded by the divergence of
/// the starting point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveTrace {
    pub initial: f64,
    pub divergences: Vec<f64>,
    pub iterations_run: usize,
    pub converged: bool,
}

impl SolveTrace {
    pub fn final_divergence(&self) -> f64 {
        self.divergences.last().copied().unwrap_or(self.initial)
    }

    /// Largest divergence along the path, including the starting point.
    pub fn max_divergence(&self) -> f64 {
        self.divergences.iter().copied().fold(self.initial, f64::max)
    }

    /// Largest single-step increase, starting from the initial divergence.
    /// Non-positive for a monotone trace.
    pub fn max_increase(&self) -> f64 {
        let mut prev = self.initial;
        let mut worst = f64::NEG_INFINITY;
        for &d in &self.divergences {
            worst = worst.max(d - prev);
            prev = d;
        }
        worst
    }
}

/// Data as seen by the cost: for α < 0 zeros would make `y^α` infinite.
fn effective_data(y: &Array2<f64>, alpha: f64, eps: EpsilonPolicy) -> Option<Array2<f64>> {
    (alpha < 0.0).then(|| y.mapv(|v| eps.apply(v)))
}

fn divergence_raw(y: &Array2<f64>, yhat: &Array2<f64>, alpha: f64, eps: EpsilonPolicy) -> f64 {
    let scale = 1.0 / (alpha * (alpha - 1.0));
    let floored = effective_data(y, alpha, eps);
    let y = floored.as_ref().unwrap_or(y);
    let mut total = 0.0;
    Zip::from(y).and(yhat).for_each(|&yv, &hv| {
        let h = eps.apply(hv);
        let term = scale * (yv.powf(alpha) * h.powf(1.0 - alpha) - alpha * yv + (alpha - 1.0) * h);
        // Each summand is itself a non-negative scalar divergence.
        total += term.max(0.0);
    });
    if (-NEGATIVE_ROUNDOFF..0.0).contains(&total) {
        0.0
    } else {
        total
    }
}

/// α-divergence `D_α(Y ‖ Ŷ)`.
pub fn alpha_divergence(
    y: &NonNegMatrix,
    yhat: &NonNegMatrix,
    alpha: f64,
    eps: EpsilonPolicy,
) -> Result<f64> {
    validate_alpha(alpha)?;
    y.check_same_shape("alpha_divergence", yhat)?;
    Ok(divergence_raw(y.as_array(), yhat.as_array(), alpha, eps))
}

fn check_system(y: &NonNegMatrix, a: &NonNegMatrix, x: &NonNegMatrix) -> Result<()> {
    if a.cols() != x.rows() {
        return Err(Error::ShapeMismatch {
            op: "factor product",
            left: a.shape(),
            right: x.shape(),
        });
    }
    if y.shape() != (a.rows(), x.cols()) {
        return Err(Error::ShapeMismatch {
            op: "data vs A·X",
            left: y.shape(),
            right: (a.rows(), x.cols()),
        });
    }
    Ok(())
}

/// `(y/ŷ)^α` with ŷ floored; the ratio is floored too when α < 0.
fn powered_ratio(y: &Array2<f64>, yhat: &Array2<f64>, alpha: f64, eps: EpsilonPolicy) -> Array2<f64> {
    let mut r = y.clone();
    if alpha < 0.0 {
        r.zip_mut_with(yhat, |v, &h| *v = eps.apply(eps.apply(*v) / eps.apply(h)).powf(alpha));
    } else {
        r.zip_mut_with(yhat, |v, &h| *v = (*v / eps.apply(h)).powf(alpha));
    }
    r
}

/// Gradient of `D_α(Y ‖ AX)` with respect to `X`:
/// `(1/α) Σ_i a_ij [1 − (y_it/[AX]_it)^α]`. Signed, so returned as a plain array.
pub fn divergence_grad_x(
    y: &NonNegMatrix,
    a: &NonNegMatrix,
    x: &NonNegMatrix,
    alpha: f64,
    eps: EpsilonPolicy,
) -> Result<Array2<f64>> {
    validate_alpha(alpha)?;
    check_system(y, a, x)?;
    let yhat = a.as_array().dot(x.as_array());
    let r = powered_ratio(y.as_array(), &yhat, alpha, eps);
    let at = a.as_array().t();
    let weighted = at.dot(&r);
    let col_sums = a.as_array().sum_axis(Axis(0));
    let mut grad = weighted;
    for (j, mut row) in grad.axis_iter_mut(Axis(0)).enumerate() {
        let s = col_sums[j];
        row.mapv_inplace(|w| (s - w) / alpha);
    }
    Ok(grad)
}

#[inline]
fn apply_step(value: f64, ratio: f64, inv_alpha: f64, eps: EpsilonPolicy) -> f64 {
    let v = value * ratio.powf(inv_alpha);
    if v.is_finite() {
        eps.apply(v)
    } else {
        f64::MAX
    }
}

/// One multiplicative update of `X`.
pub fn update_x(
    y: &NonNegMatrix,
    a: &NonNegMatrix,
    x: &NonNegMatrix,
    alpha: f64,
    eps: EpsilonPolicy,
) -> Result<NonNegMatrix> {
    validate_alpha(alpha)?;
    check_system(y, a, x)?;
    Ok(NonNegMatrix::from_array_unchecked(update_x_raw(
        y.as_array(),
        a.as_array(),
        x.as_array(),
        alpha,
        eps,
    )))
}

fn update_x_raw(
    y: &Array2<f64>,
    a: &Array2<f64>,
    x: &Array2<f64>,
    alpha: f64,
    eps: EpsilonPolicy,
) -> Array2<f64> {
    let yhat = a.dot(x);
    let r = powered_ratio(y, &yhat, alpha, eps);
    let num = a.t().dot(&r);
    let den = a.sum_axis(Axis(0));
    let inv = 1.0 / alpha;
    let mut out = x.clone();
    Zip::indexed(&mut out).and(&num).for_each(|(j, _), v, &n| {
        *v = apply_step(*v, n / eps.apply(den[j]), inv, eps);
    });
    out
}

/// One multiplicative update of `A`.
pub fn update_a(
    y: &NonNegMatrix,
    a: &NonNegMatrix,
    x: &NonNegMatrix,
    alpha: f64,
    eps: EpsilonPolicy,
) -> Result<NonNegMatrix> {
    validate_alpha(alpha)?;
    check_system(y, a, x)?;
    Ok(NonNegMatrix::from_array_unchecked(update_a_raw(
        y.as_array(),
        a.as_array(),
        x.as_array(),
        alpha,
        eps,
    )))
}

fn update_a_raw(
    y: &Array2<f64>,
    a: &Array2<f64>,
    x: &Array2<f64>,
    alpha: f64,
    eps: EpsilonPolicy,
) -> Array2<f64> {
    let yhat = a.dot(x);
    let r = powered_ratio(y, &yhat, alpha, eps);
    let num = r.dot(&x.t());
    let den = x.sum_axis(Axis(1));
    let inv = 1.0 / alpha;
    let mut out = a.clone();
    Zip::indexed(&mut out).and(&num).for_each(|(_, j), v, &n| {
        *v = apply_step(*v, n / eps.apply(den[j]), inv, eps);
    });
    out
}

/// Rescales every column of `A` to unit 1-norm and moves the scale into the
/// matching row of `X`, leaving `AX` unchanged. A column whose mass is at or
/// below the floor is replaced by the uniform column `1/I` and its `X` row is
/// set to the floor.
pub fn normalize_pair(pair: &FactorPair, eps: EpsilonPolicy) -> FactorPair {
    let mut a = pair.a.as_array().clone();
    let mut x = pair.x.as_array().clone();
    normalize_raw(&mut a, &mut x, eps);
    FactorPair {
        a: NonNegMatrix::from_array_unchecked(a),
        x: NonNegMatrix::from_array_unchecked(x),
    }
}

fn normalize_raw(a: &mut Array2<f64>, x: &mut Array2<f64>, eps: EpsilonPolicy) {
    let rows = a.nrows() as f64;
    for (mut col, mut xrow) in a.axis_iter_mut(Axis(1)).zip(x.axis_iter_mut(Axis(0))) {
        let s: f64 = col.sum();
        if s <= eps.floor() {
            col.fill(1.0 / rows);
            xrow.fill(eps.floor());
        } else {
            col.mapv_inplace(|v| v / s);
            xrow.mapv_inplace(|v| v * s);
        }
    }
}

/// i.i.d. uniform entries on `[eps.floor(), 1]` from a ChaCha8 stream.
pub fn random_init(rows: usize, cols: usize, seed: u64, eps: EpsilonPolicy) -> Result<NonNegMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_fill(&mut rng, rows, cols, eps)
}

pub(crate) fn random_fill<R: Rng>(
    rng: &mut R,
    rows: usize,
    cols: usize,
    eps: EpsilonPolicy,
) -> Result<NonNegMatrix> {
    if rows == 0 || cols == 0 {
        return Err(Error::EmptyMatrix { rows, cols });
    }
    let data: Vec<f64> = (0..rows * cols)
        .map(|_| rng.random_range(eps.floor()..=1.0))
        .collect();
    NonNegMatrix::new(rows, cols, data)
}

/// Random `A` then random `X`, both drawn from the stream seeded by `cfg.seed`.
pub fn random_pair(
    rows: usize,
    rank: usize,
    cols: usize,
    seed: u64,
    eps: EpsilonPolicy,
) -> Result<FactorPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = random_fill(&mut rng, rows, rank, eps)?;
    let x = random_fill(&mut rng, rank, cols, eps)?;
    FactorPair::new(a, x)
}

/// Runs X-update, A-update, normalisation until the relative divergence
/// change `|D_t − D_{t−1}| / max(D_0, eps)` drops under `tol`, the fit becomes
/// exact (divergence at or below the floor), or `max_iter` is reached.
pub fn solve_single_layer(
    y: &NonNegMatrix,
    rank: usize,
    cfg: &SolverConfig,
    init: Option<FactorPair>,
) -> Result<(FactorPair, SolveTrace)> {
    cfg.validate()?;
    let (rows, cols) = y.shape();
    let max_rank = rows.min(cols);
    if rank == 0 || rank > max_rank {
        return Err(Error::RankTooLarge { rank, max: max_rank });
    }
    let init = match init {
        Some(p) => {
            if p.a.shape() != (rows, rank) || p.x.shape() != (rank, cols) {
                return Err(Error::ShapeMismatch {
                    op: "solve_single_layer init",
                    left: p.a.shape(),
                    right: p.x.shape(),
                });
            }
            p
        }
        None => random_pair(rows, rank, cols, cfg.seed, cfg.eps)?,
    };

    let alpha = cfg.alpha;
    let eps = cfg.eps;
    let yd = y.as_array();
    let mut a = init.a.into_array();
    let mut x = init.x.into_array();

    let initial = divergence_raw(yd, &a.dot(&x), alpha, eps);
    let scale = initial.max(eps.floor());
    let mut prev = initial;
    let mut divergences = Vec::with_capacity(cfg.max_iter.min(4096));
    let mut converged = false;

    for _ in 0..cfg.max_iter {
        x = update_x_raw(yd, &a, &x, alpha, eps);
        a = update_a_raw(yd, &a, &x, alpha, eps);
        normalize_raw(&mut a, &mut x, eps);
        let d = divergence_raw(yd, &a.dot(&x), alpha, eps);
        if !d.is_finite() {
            return Err(Error::Config(format!(
                "divergence became non-finite at iteration {} (alpha = {alpha})",
                divergences.len() + 1
            )));
        }
        divergences.push(d);
        if (prev - d).abs() / scale < cfg.tol || d <= eps.floor() {
            converged = true;
            break;
        }
        prev = d;
    }

    let trace = SolveTrace {
        initial,
        iterations_run: divergences.len(),
        divergences,
        converged,
    };
    let pair = FactorPair {
        a: NonNegMatrix::from_array_unchecked(a),
        x: NonNegMatrix::from_array_unchecked(x),
    };
    Ok((pair, trace))
}

/// Majoriser `G(X, X')` of `F(X) = D_α(Y ‖ AX)` built from the weights
/// `ζ_itj = a_ij x'_jt / Σ_j a_ij x'_jt`. Test oracle for the update rules.
pub fn auxiliary_g(
    x: &NonNegMatrix,
    x_prev: &NonNegMatrix,
    y: &NonNegMatrix,
    a: &NonNegMatrix,
    alpha: f64,
    eps: EpsilonPolicy,
) -> Result<f64> {
    validate_alpha(alpha)?;
    check_system(y, a, x)?;
    x.check_same_shape("auxiliary_g", x_prev)?;
    let scale = 1.0 / (alpha * (alpha - 1.0));
    let floored = effective_data(y.as_array(), alpha, eps);
    let yd = floored.as_ref().unwrap_or(y.as_array());
    let ad = a.as_array();
    let xd = x.as_array();
    let xp = x_prev.as_array();
    let yhat_prev = ad.dot(xp);
    let (rows, cols) = yd.dim();
    let rank = ad.ncols();

    let mut total = 0.0;
    for i in 0..rows {
        for t in 0..cols {
            let yv = yd[[i, t]];
            let denom = eps.apply(yhat_prev[[i, t]]);
            for j in 0..rank {
                let zeta = ad[[i, j]] * xp[[j, t]] / denom;
                if zeta <= 0.0 {
                    continue;
                }
                let w = yv * zeta; // y_it ζ_itj
                let u = ad[[i, j]] * xd[[j, t]]; // a_ij x_jt
                // y ζ [ (u/(yζ))^(1−α) + (α−1) u/(yζ) − α ], expanded to avoid dividing by y.
                total += scale * (w.powf(alpha) * u.powf(1.0 - alpha) + (alpha - 1.0) * u - alpha * w);
            }
        }
    }
    Ok(total)
}
