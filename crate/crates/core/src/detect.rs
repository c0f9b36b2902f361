//! Detecting a planted Boolean vector in a random subspace, and the test
//! built from a clustering estimator by smoothing the data with noise.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DataMatrix, SignLabels};
use crate::numerics::projection_onto_range;
use crate::spectral::two_stage;
use crate::{seeded_rng, Rng as CrateRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Hypothesis {
    /// Gaussian columns: Range(X) is a uniformly random subspace.
    H0,
    /// Range(X) contains a ±1 vector.
    H1,
}

/// Decision threshold `2/π + 0.1` on `‖Hφ‖²/n`.
pub fn psi_threshold() -> f64 {
    2.0 / std::f64::consts::PI + 0.1
}

/// Haar-distributed d×d orthogonal matrix: QR of a Gaussian matrix with the
/// signs of R's diagonal moved into Q.
pub fn haar_orthogonal(d: usize, rng: &mut CrateRng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            let mut col = q.column_mut(j);
            col *= -1.0;
        }
    }
    q
}

/// An instance and, under H1, the planted vector.
pub fn gen_instance_with_truth(h: Hypothesis, n: usize, d: usize, seed: u64) -> Result<(DataMatrix, Option<SignLabels>)> {
    if d == 0 || d > n {
        return Err(Error::Invalid(format!("need 1 <= d <= n, got n = {n}, d = {d}")));
    }
    let mut rng = seeded_rng(seed);
    match h {
        Hypothesis::H0 => {
            let x = DMatrix::from_fn(n, d, |_, _| rng.sample::<f64, _>(StandardNormal));
            Ok((DataMatrix::new(x)?, None))
        }
        Hypothesis::H1 => {
            let y = SignLabels::sign_of((0..n).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }));
            let mut xt = DMatrix::from_fn(n, d, |_, _| rng.sample::<f64, _>(StandardNormal));
            xt.set_column(0, &y.to_vector());
            let q = haar_orthogonal(d, &mut rng);
            Ok((DataMatrix::new(xt * q)?, Some(y)))
        }
    }
}

/// H0: i.i.d. standard normal entries. H1: `(y*, g₂, ..., g_d)·Q` with Q Haar.
pub fn gen_instance(h: Hypothesis, n: usize, d: usize, seed: u64) -> Result<DataMatrix> {
    gen_instance_with_truth(h, n, d, seed).map(|(x, _)| x)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiOutcome {
    pub decision: Hypothesis,
    /// `‖Hφ(X + εZ)‖²/n` with H the projection onto Range(X).
    pub statistic: f64,
}

/// The test with the two-stage clusterer.
pub fn psi_test(x: &DataMatrix, eps: f64, seed: u64) -> Result<PsiOutcome> {
    psi_test_with(x, eps, seed, two_stage)
}

/// Clusters `X + εZ` with `clusterer` and compares `‖Hφ‖²/n` against
/// [`psi_threshold`]; H0 when at or below it.
pub fn psi_test_with(
    x: &DataMatrix,
    eps: f64,
    seed: u64,
    clusterer: impl Fn(&DataMatrix) -> Result<SignLabels>,
) -> Result<PsiOutcome> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Invalid(format!("eps must be positive, got {eps}")));
    }
    let mut rng = seeded_rng(seed);
    let noisy = x.as_matrix() + DMatrix::from_fn(x.n(), x.d(), |_, _| eps * rng.sample::<f64, _>(StandardNormal));
    let phi = clusterer(&DataMatrix::new(noisy)?)?;
    if phi.len() != x.n() {
        return Err(Error::DimensionMismatch { expected: x.n(), found: phi.len() });
    }
    let h = projection_onto_range(x);
    let statistic = h.quad_form(&phi.to_vector()) / x.n() as f64;
    let decision = if statistic <= psi_threshold() { Hypothesis::H0 } else { Hypothesis::H1 };
    Ok(PsiOutcome { decision, statistic })
}
