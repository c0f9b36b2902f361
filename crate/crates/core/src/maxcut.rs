//! The Max-Cut form of the two-component maximum likelihood problem.
//!
//! With the covariance profiled out, the label likelihood depends on the data
//! only through the projection H onto Range(X) and is maximized by
//! `max_{y ∈ {±1}ⁿ} yᵀHy`. This module holds that objective, an exhaustive
//! solver for small n, greedy local search, and a low-rank (Burer–Monteiro)
//! solver for the semi-definite relaxation together with eigenvector rounding.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{DataMatrix, SignLabels};
use crate::numerics::{projection_onto_range, sym_eig, ProjectionMatrix};
use crate::seeded_rng;

/// Largest n accepted by [`maxcut_exact`].
pub const EXACT_MAX_N: usize = 24;

/// Moves must improve the objective by more than this to count, so that
/// rounding noise never drives a search.
const GAIN_TOL: f64 = 1e-9;

fn check_dims(h: &ProjectionMatrix, y: &SignLabels) -> Result<()> {
    if h.dim() != y.len() {
        return Err(Error::DimensionMismatch { expected: h.dim(), found: y.len() });
    }
    Ok(())
}

/// `yᵀHy`.
pub fn maxcut_objective(h: &ProjectionMatrix, y: &SignLabels) -> Result<f64> {
    check_dims(h, y)?;
    Ok(h.quad_form(&y.to_vector()))
}

/// Profile log-likelihood `-(n/2)·log(1 - yᵀHy/n)` of a labeling.
pub fn profile_loglik(x: &DataMatrix, y: &SignLabels) -> Result<f64> {
    let h = projection_onto_range(x);
    let n = y.len() as f64;
    let ratio = maxcut_objective(&h, y)? / n;
    if ratio >= 1.0 - 1e-12 {
        return Err(Error::DegenerateLikelihood { ratio });
    }
    Ok(-0.5 * n * (1.0 - ratio).ln())
}

/// Global maximizer of `yᵀHy` by enumeration.
///
/// The first coordinate is pinned to +1 and the remaining 2^{n-1} patterns
/// are walked in Gray-code order with O(n) incremental updates. The space is
/// split into blocks on the high bits; ties resolve to the earliest pattern.
pub fn maxcut_exact(h: &ProjectionMatrix) -> Result<SignLabels> {
    let n = h.dim();
    if n > EXACT_MAX_N {
        return Err(Error::TooLarge { size: n, limit: EXACT_MAX_N });
    }
    if n <= 1 {
        return Ok(SignLabels::ones(n));
    }
    let dense = h.to_dense();
    let free = n - 1;
    let block_bits = free.saturating_sub(12).min(8);
    let low_bits = free - block_bits;

    let best = (0..1u64 << block_bits)
        .into_par_iter()
        .map(|block| enumerate_block(&dense, block, block_bits, low_bits))
        .collect::<Vec<_>>()
        .into_iter()
        .enumerate()
        .fold(None::<(usize, f64, Vec<i8>)>, |acc, (i, (value, y))| match acc {
            Some((_, best, _)) if value <= best + GAIN_TOL => acc,
            _ => Some((i, value, y)),
        })
        .expect("at least one block");
    SignLabels::new(best.2)
}

/// Exhausts the `2^low_bits` patterns of one block. Bit `b` of a pattern
/// sets coordinate `b + 1` to -1; block bits sit above the low bits.
fn enumerate_block(h: &DMatrix<f64>, block: u64, block_bits: usize, low_bits: usize) -> (f64, Vec<i8>) {
    let n = h.nrows();
    let mut y: Vec<f64> = vec![1.0; n];
    for b in 0..block_bits {
        if block >> b & 1 == 1 {
            y[1 + low_bits + b] = -1.0;
        }
    }
    let yv = DVector::from_column_slice(&y);
    let mut hy: Vec<f64> = (h * &yv).iter().copied().collect();
    let mut value: f64 = y.iter().zip(&hy).map(|(a, b)| a * b).sum();
    let mut best_value = value;
    let mut best_y = y.clone();

    for step in 1u64..(1u64 << low_bits) {
        let i = 1 + step.trailing_zeros() as usize;
        let yi = y[i];
        value += -4.0 * yi * hy[i] + 4.0 * h[(i, i)];
        for (k, hyk) in hy.iter_mut().enumerate() {
            *hyk -= 2.0 * yi * h[(k, i)];
        }
        y[i] = -yi;
        if value > best_value + GAIN_TOL {
            best_value = value;
            best_y.copy_from_slice(&y);
        }
    }
    (best_value, best_y.iter().map(|&v| if v < 0.0 { -1 } else { 1 }).collect())
}

/// Greedy single-flip ascent on `yᵀHy`.
///
/// Each sweep visits coordinates in order and flips any whose flip strictly
/// increases the objective. Stops after a sweep with no flip or after
/// `max_sweeps` sweeps.
pub fn maxcut_local_search(h: &ProjectionMatrix, y0: &SignLabels, max_sweeps: usize) -> Result<SignLabels> {
    check_dims(h, y0)?;
    let n = y0.len();
    let mut y = y0.clone();
    let mut hy = h.apply(&y.to_vector());
    let diag = h.diagonal();
    for _ in 0..max_sweeps {
        let mut moved = false;
        for i in 0..n {
            let yi = f64::from(y.get(i));
            let gain = -4.0 * yi * hy[i] + 4.0 * diag[i];
            if gain > GAIN_TOL {
                let col = h.column(i);
                hy.axpy(-2.0 * yi, &col, 1.0);
                y.flip(i);
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
    Ok(y)
}

/// Best of `starts` local searches from seeded uniform random labelings.
pub fn maxcut_multistart(h: &ProjectionMatrix, starts: usize, seed: u64) -> Result<SignLabels> {
    let mut rng = seeded_rng(seed);
    let mut best: Option<(f64, SignLabels)> = None;
    for _ in 0..starts.max(1) {
        let y0 = SignLabels::sign_of((0..h.dim()).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }));
        let y = maxcut_local_search(h, &y0, 10 * h.dim() + 10)?;
        let v = maxcut_objective(h, &y)?;
        if best.as_ref().is_none_or(|(b, _)| v > b + GAIN_TOL) {
            best = Some((v, y));
        }
    }
    Ok(best.expect("at least one start").1)
}

/// `y*ᵀHy* - yᵀHy` minus `‖(I-H)(y-y*)‖² - (2/√SNR)⟨y-y*, (I-H)z⟩` on
/// canonical data, where z is the noise of the first column. Zero up to
/// rounding.
pub fn optimality_gap_residual(
    x: &DataMatrix,
    y: &SignLabels,
    y_star: &SignLabels,
    z: &DVector<f64>,
    snr: f64,
) -> Result<f64> {
    let n = x.n();
    for len in [y.len(), y_star.len(), z.len()] {
        if len != n {
            return Err(Error::DimensionMismatch { expected: n, found: len });
        }
    }
    if !(snr > 0.0 && snr.is_finite()) {
        return Err(Error::Invalid(format!("snr must be finite and positive, got {snr}")));
    }
    let h = projection_onto_range(x);
    let lhs = maxcut_objective(&h, y_star)? - maxcut_objective(&h, y)?;
    let diff = y.to_vector() - y_star.to_vector();
    let resid_diff = &diff - h.apply(&diff);
    let resid_z = z - h.apply(z);
    let rhs = resid_diff.norm_squared() - 2.0 / snr.sqrt() * diff.dot(&resid_z);
    Ok(lhs - rhs)
}

/// Low-rank factor V of the relaxation variable `Y = VVᵀ`; rows have unit norm.
#[derive(Debug, Clone)]
pub struct SdpFactor(DMatrix<f64>);

impl SdpFactor {
    /// Normalizes each row to unit length. Zero rows become `e₁`.
    pub fn from_rows(mut v: DMatrix<f64>) -> Self {
        normalize_rows(&mut v);
        Self(v)
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn rank(&self) -> usize {
        self.0.ncols()
    }

    /// `⟨H, VVᵀ⟩ = ‖QᵀV‖²_F`.
    pub fn objective(&self, h: &ProjectionMatrix) -> f64 {
        h.basis().tr_mul(&self.0).norm_squared()
    }
}

fn normalize_rows(v: &mut DMatrix<f64>) {
    for mut row in v.row_iter_mut() {
        let norm = row.norm();
        if norm > 0.0 {
            row /= norm;
        } else {
            row.fill(0.0);
            row[0] = 1.0;
        }
    }
}

/// Solver settings for [`sdp_solve`].
#[derive(Debug, Clone, Copy)]
pub struct SdpOptions {
    /// Factor rank; `None` means ⌈√(2n)⌉.
    pub rank: Option<usize>,
    pub max_iters: usize,
    /// Relative objective change below which the ascent stops.
    pub tol: f64,
    pub seed: u64,
}

impl Default for SdpOptions {
    fn default() -> Self {
        Self { rank: None, max_iters: 2000, tol: 1e-9, seed: 0 }
    }
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub factor: SdpFactor,
    pub objective: f64,
    pub iterations: usize,
    /// Objective after each accepted step, starting with the initial point.
    pub history: Vec<f64>,
}

pub fn default_sdp_rank(n: usize) -> usize {
    ((2.0 * n as f64).sqrt().ceil() as usize).clamp(1, n.max(1))
}

/// Row-normalized projected gradient ascent on `⟨H, VVᵀ⟩` over unit-row V.
///
/// Steps start at 1 and halve until the objective does not decrease, so the
/// objective is monotone across iterations.
pub fn sdp_solve(h: &ProjectionMatrix, opts: &SdpOptions) -> SdpSolution {
    let n = h.dim();
    let r = opts.rank.unwrap_or_else(|| default_sdp_rank(n)).max(1);
    let mut rng = seeded_rng(opts.seed);
    let mut v = DMatrix::from_fn(n, r, |_, _| rng.sample::<f64, _>(StandardNormal));
    normalize_rows(&mut v);
    let mut factor = SdpFactor(v);
    let mut value = factor.objective(h);
    let mut history = vec![value];
    let mut iterations = 0;

    while iterations < opts.max_iters {
        iterations += 1;
        let grad = h.apply_mat(factor.as_matrix()) * 2.0;
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let mut cand = factor.as_matrix() + &grad * step;
            normalize_rows(&mut cand);
            let cand = SdpFactor(cand);
            let cv = cand.objective(h);
            if cv >= value {
                accepted = Some((cand, cv));
                break;
            }
            step *= 0.5;
        }
        let Some((cand, cv)) = accepted else { break };
        let change = (cv - value) / value.abs().max(1e-300);
        factor = cand;
        value = cv;
        history.push(value);
        if change < opts.tol {
            break;
        }
    }
    SdpSolution { factor, objective: value, iterations, history }
}

/// Sign pattern of the leading eigenvector of `VVᵀ`, i.e. the leading left
/// singular vector of V, with `sgn(0) = +1`.
pub fn gw_round(v: &SdpFactor) -> SignLabels {
    let m = v.as_matrix();
    let gram = m.tr_mul(m);
    let eig = sym_eig(&gram).expect("Gram matrix is symmetric");
    let top = eig.vectors.column(eig.values.len() - 1).clone_owned();
    let u = m * top;
    SignLabels::sign_of(u.iter().copied())
}
