//! Misclassification rates and the Bayes-optimal reference error.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{MembershipMatrix, SignLabels};
use crate::multiclass;

/// Fraction of disagreements after the better of the two global signs.
pub fn misclass_binary(yhat: &SignLabels, ystar: &SignLabels) -> Result<f64> {
    if yhat.len() != ystar.len() {
        return Err(Error::DimensionMismatch { expected: ystar.len(), found: yhat.len() });
    }
    let n = ystar.len();
    if n == 0 {
        return Ok(0.0);
    }
    let differ = yhat.as_slice().iter().zip(ystar.as_slice()).filter(|(a, b)| a != b).count();
    Ok(differ.min(n - differ) as f64 / n as f64)
}

/// Fraction of disagreements after the best relabeling of `y2`.
pub fn misclass_labels(y1: &[usize], y2: &[usize], k: usize) -> Result<f64> {
    if y1.len() != y2.len() {
        return Err(Error::DimensionMismatch { expected: y1.len(), found: y2.len() });
    }
    if y1.is_empty() {
        return Ok(0.0);
    }
    let tau = multiclass::align(y1, y2, k)?;
    Ok(multiclass::mismatches(y1, y2, &tau) as f64 / y1.len() as f64)
}

pub fn misclass_multiclass(y1: &MembershipMatrix, y2: &MembershipMatrix) -> Result<f64> {
    if y1.k() != y2.k() {
        return Err(Error::DimensionMismatch { expected: y1.k(), found: y2.k() });
    }
    misclass_labels(y1.labels(), y2.labels(), y1.k())
}

/// `1 - Φ(√snr)`, the error of the optimal classifier with known parameters.
pub fn bayes_error(snr: f64) -> f64 {
    if snr.is_infinite() {
        return 0.0;
    }
    1.0 - normal_cdf(snr.max(0.0).sqrt())
}

/// Standard normal CDF via [`erfc`].
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Complementary error function.
///
/// Uses the positive-term series `erf(x) = 2/√π · e^{-x²} Σ (2x²)ᵏ x / (2k+1)!!`
/// below 2.5 and the Laplace continued fraction above, giving absolute
/// error near machine precision on the whole line.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    let two_over_sqrt_pi = std::f64::consts::FRAC_2_SQRT_PI;
    if x < 2.5 {
        let x2 = x * x;
        let mut term = x;
        let mut sum = x;
        let mut k = 0.0;
        while term > 1e-17 * sum {
            k += 1.0;
            term *= 2.0 * x2 / (2.0 * k + 1.0);
            sum += term;
        }
        return 1.0 - two_over_sqrt_pi * (-x2).exp() * sum;
    }
    if x > 27.0 {
        return 0.0;
    }
    // erfc(x) = e^{-x²}/√π · 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...)))), modified Lentz.
    let tiny = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for j in 1..500 {
        let a = j as f64 / 2.0;
        d = x + a * d;
        d = if d.abs() < tiny { tiny } else { d };
        c = x + a / c;
        c = if c.abs() < tiny { tiny } else { c };
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    0.5 * two_over_sqrt_pi * (-x * x).exp() / f
}

/// One Monte-Carlo run. Serializes to one CSV row of the experiment output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub algorithm: String,
    pub n: usize,
    pub d: usize,
    pub snr: f64,
    pub trial_id: i64,
    pub seed: u64,
    pub error_rate: f64,
    pub wall_time_s: f64,
    pub status: String,
}
