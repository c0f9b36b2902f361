//! Projected power iteration and the closed-form EM update.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::model::SignLabels;
use crate::numerics::ProjectionMatrix;

/// Soft labels `y ∈ [-1, 1]ⁿ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftLabels(DVector<f64>);

impl SoftLabels {
    pub fn new(values: DVector<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(-1.0..=1.0).contains(*v)) {
            return Err(Error::Invalid(format!("soft label {v} outside [-1, 1]")));
        }
        Ok(Self(values))
    }

    pub fn zeros(n: usize) -> Self {
        Self(DVector::zeros(n))
    }

    /// `scale · y`. A scale below 1 keeps the first EM denominator away from
    /// zero when `y` lies in the column space.
    pub fn from_signs(y: &SignLabels, scale: f64) -> Self {
        Self(y.to_vector() * scale.clamp(-1.0, 1.0))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }
}

/// Scale applied by [`em_from_signs`] to hard starting labels.
pub const SIGN_START_SCALE: f64 = 0.999;

/// Denominator threshold of [`em_step`].
pub const EM_DEGENERATE_TOL: f64 = 1e-10;

/// Iteration budget `4⌈log₂ n⌉ + 4`.
pub fn ppi_budget(n: usize) -> usize {
    let log2 = if n <= 1 { 0 } else { usize::BITS - (n - 1).leading_zeros() } as usize;
    4 * log2 + 4
}

#[derive(Debug, Clone)]
pub struct PpiOutcome {
    pub labels: SignLabels,
    /// Number of updates applied, counting the one that confirmed a fixed point.
    pub iterations: usize,
    pub converged: bool,
}

/// `y ← sgn(Hy)` for at most [`ppi_budget`] steps, stopping at a fixed point.
pub fn ppi(h: &ProjectionMatrix, y0: &SignLabels) -> Result<SignLabels> {
    ppi_traced(h, y0).map(|o| o.labels)
}

pub fn ppi_traced(h: &ProjectionMatrix, y0: &SignLabels) -> Result<PpiOutcome> {
    if h.dim() != y0.len() {
        return Err(Error::DimensionMismatch { expected: h.dim(), found: y0.len() });
    }
    let budget = ppi_budget(y0.len());
    let mut y = y0.clone();
    for t in 1..=budget {
        let next = SignLabels::sign_of(h.apply(&y.to_vector()).iter().copied());
        if next == y {
            return Ok(PpiOutcome { labels: y, iterations: t, converged: true });
        }
        y = next;
    }
    Ok(PpiOutcome { labels: y, iterations: budget, converged: false })
}

/// `tanh(Hy / (1 - ⟨y, Hy⟩/n))`.
pub fn em_step(h: &ProjectionMatrix, y: &SoftLabels) -> Result<SoftLabels> {
    if h.dim() != y.len() {
        return Err(Error::DimensionMismatch { expected: h.dim(), found: y.len() });
    }
    let hy = h.apply(&y.0);
    let ratio = y.0.dot(&hy) / y.len().max(1) as f64;
    if ratio >= 1.0 - EM_DEGENERATE_TOL {
        return Err(Error::DegenerateDenominator { ratio });
    }
    let denom = 1.0 - ratio;
    Ok(SoftLabels(hy.map(|v| (v / denom).tanh())))
}

#[derive(Debug, Clone)]
pub struct EmOutcome {
    pub labels: SoftLabels,
    pub iterations: usize,
    /// `‖Hyᵗ‖` for t = 0, 1, ...
    pub trace: Vec<f64>,
    /// The iteration stopped because the next denominator vanished: the
    /// iterate had already saturated onto a sign vector in the column space.
    pub saturated: bool,
}

/// Iterates [`em_step`] until the sup-norm change drops below `tol` or
/// `max_iters` steps have run.
///
/// A degenerate denominator at the starting point is an error. Reached later,
/// it means the iterate has saturated at a sign vector in Range(X) (a perfect
/// fit) and the run stops there with `saturated` set.
pub fn em_run(h: &ProjectionMatrix, y0: &SoftLabels, max_iters: usize, tol: f64) -> Result<EmOutcome> {
    let mut y = y0.clone();
    let mut trace = vec![h.apply(&y.0).norm()];
    let mut iterations = 0;
    while iterations < max_iters {
        let next = match em_step(h, &y) {
            Ok(next) => next,
            Err(Error::DegenerateDenominator { .. }) if iterations > 0 => {
                return Ok(EmOutcome { labels: y, iterations, trace, saturated: true });
            }
            Err(e) => return Err(e),
        };
        iterations += 1;
        let change = (&next.0 - &y.0).amax();
        y = next;
        trace.push(h.apply(&y.0).norm());
        if change < tol {
            break;
        }
    }
    Ok(EmOutcome { labels: y, iterations, trace, saturated: false })
}

/// EM started from `scale · y0` with the default scale.
pub fn em_from_signs(h: &ProjectionMatrix, y0: &SignLabels, max_iters: usize, tol: f64) -> Result<EmOutcome> {
    em_run(h, &SoftLabels::from_signs(y0, SIGN_START_SCALE), max_iters, tol)
}

/// Entrywise sign with `sgn(0) = +1`.
pub fn harden(y: &SoftLabels) -> SignLabels {
    SignLabels::sign_of(y.0.iter().copied())
}
