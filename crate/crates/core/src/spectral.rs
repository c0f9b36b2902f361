//! Fourth-moment spectral initialization and the two-stage estimator.
//!
//! After whitening without centering, `W = √n X(XᵀX)^{-1/2}`, the weighted
//! covariance `S = n⁻¹ Σ (‖wᵢ‖² - d) wᵢwᵢᵀ` has expectation
//! `2I - 2(1-σ²)² ννᵀ/‖ν‖²`, so the signal direction is its bottom
//! eigenvector. (The planted-sparse-vector problem reads the top one instead.)

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::iterative::ppi;
use crate::model::{DataMatrix, SignLabels};
use crate::numerics::{projection_onto_range, sym_eig, RANK_TOL};

/// The symmetric d×d matrix S.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedCov(DMatrix<f64>);

impl WeightedCov {
    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }
}

/// `√n X (XᵀX)^{-1/2}`; satisfies `WᵀW = nI`.
pub fn whiten_nocentering(x: &DataMatrix) -> Result<DataMatrix> {
    let gram = x.tr_mul(x);
    let eig = sym_eig(&gram)?;
    let (lo, hi) = (eig.min(), eig.max());
    if hi <= 0.0 || lo <= RANK_TOL * hi {
        return Err(Error::SingularMatrix { min_eig: lo });
    }
    let root_inv = eig.map_spectrum(|l| 1.0 / l.sqrt());
    DataMatrix::new(x.as_matrix() * root_inv * (x.n() as f64).sqrt())
}

/// `n⁻¹ Σᵢ (‖wᵢ‖² - d) wᵢwᵢᵀ`, accumulated row by row in order.
pub fn weighted_fourth_moment(w: &DataMatrix) -> WeightedCov {
    let (n, d) = (w.n(), w.d());
    let mut s = DMatrix::zeros(d, d);
    for i in 0..n {
        let row = w.row(i);
        let weight = row.norm_squared() - d as f64;
        for a in 0..d {
            let wa = weight * row[a];
            for b in 0..=a {
                s[(a, b)] += wa * row[b];
            }
        }
    }
    for a in 0..d {
        for b in 0..a {
            s[(b, a)] = s[(a, b)];
        }
    }
    WeightedCov(s / n.max(1) as f64)
}

#[derive(Debug, Clone)]
pub struct SpectralOutcome {
    pub labels: SignLabels,
    pub eigenvalues: Vec<f64>,
    /// The two smallest eigenvalues of S coincide (to 1e-12 relative), so the
    /// chosen direction is the lowest-index one of a degenerate eigenspace.
    pub eigen_tie: bool,
}

/// `sgn(Wv)` for the bottom eigenvector v of S.
pub fn spectral_init(x: &DataMatrix) -> Result<SignLabels> {
    spectral_init_detailed(x).map(|o| o.labels)
}

pub fn spectral_init_detailed(x: &DataMatrix) -> Result<SpectralOutcome> {
    let w = whiten_nocentering(x)?;
    let s = weighted_fourth_moment(&w);
    let eig = sym_eig(s.as_matrix())?;
    let v = eig.vectors.column(0);
    let scale = eig.values.amax().max(f64::MIN_POSITIVE);
    let eigen_tie = eig.values.len() > 1 && (eig.values[1] - eig.values[0]) <= 1e-12 * scale;
    let labels = SignLabels::sign_of((w.as_matrix() * v).iter().copied());
    Ok(SpectralOutcome { labels, eigenvalues: eig.values.iter().copied().collect(), eigen_tie })
}

/// Projected power iteration started from [`spectral_init`].
pub fn two_stage(x: &DataMatrix) -> Result<SignLabels> {
    let y0 = spectral_init(x)?;
    ppi(&projection_onto_range(x), &y0)
}
