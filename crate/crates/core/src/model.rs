//! Generative models, signal statistics and whitening.
//!
//! Three generators live here: the symmetric two-component Gaussian mixture
//! with shared covariance, its canonical form (first coordinate carries the
//! labels, the rest is pure noise), and the K-component mixture with an
//! arbitrary positive semi-definite covariance.

use std::ops::Deref;

use nalgebra::{DMatrix, DVector};
use rand::distr::weighted::WeightedIndex;
use rand::prelude::*;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{self, sym_eig, RANK_TOL};
use crate::seeded_rng;

/// An n×d sample matrix, one observation per row. All entries finite.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix(DMatrix<f64>);

impl DataMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("data matrix has non-finite entries".into()));
        }
        Ok(Self(values))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch { expected: d, found: bad.len() });
        }
        Self::new(DMatrix::from_fn(n, d, |i, j| rows[i][j]))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn d(&self) -> usize {
        self.0.ncols()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    /// Row `i` as a column vector.
    pub fn row_vector(&self, i: usize) -> DVector<f64> {
        self.0.row(i).transpose()
    }

    /// Rows `range` as a new matrix.
    pub fn rows_range(&self, start: usize, len: usize) -> DataMatrix {
        DataMatrix(self.0.rows(start, len).clone_owned())
    }
}

impl Deref for DataMatrix {
    type Target = DMatrix<f64>;

    fn deref(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// Binary labels in {-1, +1}.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SignLabels(Vec<i8>);

impl SignLabels {
    pub fn new(values: Vec<i8>) -> Result<Self> {
        if let Some(&bad) = values.iter().find(|&&v| v != 1 && v != -1) {
            return Err(Error::Invalid(format!("sign label {bad} is not ±1")));
        }
        Ok(Self(values))
    }

    pub fn ones(n: usize) -> Self {
        Self(vec![1; n])
    }

    /// Entrywise sign with `sgn(0) = +1`.
    pub fn sign_of(values: impl IntoIterator<Item = f64>) -> Self {
        Self(values.into_iter().map(|v| if v < 0.0 { -1 } else { 1 }).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    pub fn get(&self, i: usize) -> i8 {
        self.0[i]
    }

    pub fn flip(&mut self, i: usize) {
        self.0[i] = -self.0[i];
    }

    /// The globally flipped labeling `-y`.
    pub fn negated(&self) -> Self {
        Self(self.0.iter().map(|&v| -v).collect())
    }

    pub fn to_vector(&self) -> DVector<f64> {
        DVector::from_iterator(self.0.len(), self.0.iter().map(|&v| f64::from(v)))
    }
}

/// One-hot class membership, stored as the label of each row (0-based).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MembershipMatrix {
    labels: Vec<usize>,
    k: usize,
}

impl MembershipMatrix {
    pub fn from_labels(labels: Vec<usize>, k: usize) -> Result<Self> {
        if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
            return Err(Error::BadLabelRange { label: bad, k });
        }
        Ok(Self { labels, k })
    }

    /// Builds from a dense n×K 0/1 matrix with exactly one 1 per row.
    pub fn from_dense(y: &DMatrix<f64>) -> Result<Self> {
        let k = y.ncols();
        let mut labels = Vec::with_capacity(y.nrows());
        for (i, row) in y.row_iter().enumerate() {
            let ones: Vec<usize> = (0..k).filter(|&j| row[j] == 1.0).collect();
            let zeros = (0..k).filter(|&j| row[j] == 0.0).count();
            if ones.len() != 1 || zeros != k - 1 {
                return Err(Error::Invalid(format!("row {i} is not one-hot")));
            }
            labels.push(ones[0]);
        }
        Ok(Self { labels, k })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.k];
        for &l in &self.labels {
            c[l] += 1;
        }
        c
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut y = DMatrix::zeros(self.labels.len(), self.k);
        for (i, &l) in self.labels.iter().enumerate() {
            y[(i, l)] = 1.0;
        }
        y
    }
}

fn rows_to_matrix(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|row| row.len() != c) {
        return Err(Error::Invalid(format!("{what}: ragged rows")));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Parameters of the symmetric two-component mixture
/// `½N(μ*, Σ*) + ½N(-μ*, Σ*)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TwoComponentRepr", into = "TwoComponentRepr")]
pub struct TwoComponentSpec {
    pub mu_star: DVector<f64>,
    pub sigma_star: DMatrix<f64>,
}

#[derive(Serialize, Deserialize)]
struct TwoComponentRepr {
    mu_star: Vec<f64>,
    sigma_star: Vec<Vec<f64>>,
}

impl TryFrom<TwoComponentRepr> for TwoComponentSpec {
    type Error = Error;

    fn try_from(r: TwoComponentRepr) -> Result<Self> {
        let sigma = rows_to_matrix(&r.sigma_star, "sigma_star")?;
        Self::new(DVector::from_vec(r.mu_star), sigma)
    }
}

impl From<TwoComponentSpec> for TwoComponentRepr {
    fn from(s: TwoComponentSpec) -> Self {
        Self { mu_star: s.mu_star.iter().copied().collect(), sigma_star: matrix_to_rows(&s.sigma_star) }
    }
}

impl TwoComponentSpec {
    pub fn new(mu_star: DVector<f64>, sigma_star: DMatrix<f64>) -> Result<Self> {
        let d = mu_star.len();
        if d == 0 {
            return Err(Error::Invalid("dimension must be at least 1".into()));
        }
        if sigma_star.nrows() != d || sigma_star.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: sigma_star.nrows() });
        }
        Ok(Self { mu_star, sigma_star })
    }

    pub fn d(&self) -> usize {
        self.mu_star.len()
    }
}

/// Mahalanobis signal-to-noise ratio `μ*ᵀ Σ*⁻¹ μ*`.
///
/// Returns `+∞` when Σ* is singular and μ* has a component in its null space;
/// a singular Σ* with μ* inside its range is rejected.
pub fn snr(spec: &TwoComponentSpec) -> Result<f64> {
    let eig = sym_eig(&spec.sigma_star)?;
    let (lo, hi) = (eig.min(), eig.max());
    if hi <= 0.0 || lo < -RANK_TOL * hi {
        return Err(Error::NotPositiveDefinite { min_eig: lo, max_eig: hi });
    }
    if lo > RANK_TOL * hi {
        let v = numerics::solve_spd(&spec.sigma_star, &spec.mu_star)
            .ok_or(Error::NotPositiveDefinite { min_eig: lo, max_eig: hi })?;
        return Ok(spec.mu_star.dot(&v).max(0.0));
    }
    let mu_norm = spec.mu_star.norm();
    let null_part: f64 = eig
        .values
        .iter()
        .enumerate()
        .filter(|(_, &l)| l <= RANK_TOL * hi)
        .map(|(j, _)| eig.vectors.column(j).dot(&spec.mu_star).powi(2))
        .sum::<f64>()
        .sqrt();
    if mu_norm > 0.0 && null_part > 1e-8 * mu_norm {
        Ok(f64::INFINITY)
    } else {
        Err(Error::NotPositiveDefinite { min_eig: lo, max_eig: hi })
    }
}

/// Euclidean separation `‖μ*‖² / ‖Σ*‖₂`.
pub fn s_ratio(spec: &TwoComponentSpec) -> Result<f64> {
    let eig = sym_eig(&spec.sigma_star)?;
    let spectral = eig.min().abs().max(eig.max().abs());
    let num = spec.mu_star.norm_squared();
    if num == 0.0 {
        return Ok(0.0);
    }
    if spectral == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(num / spectral)
}

/// Draws n labeled samples `x_i = y_i μ* + Σ*^{1/2} z_i` with uniform ±1 labels.
pub fn sample_two_component(spec: &TwoComponentSpec, n: usize, seed: u64) -> Result<(DataMatrix, SignLabels)> {
    if n == 0 {
        return Err(Error::Invalid("n must be at least 1".into()));
    }
    let chol = spec.sigma_star.clone().cholesky().ok_or_else(|| {
        let eig = sym_eig(&spec.sigma_star).ok();
        Error::NotPositiveDefinite {
            min_eig: eig.as_ref().map_or(f64::NAN, |e| e.min()),
            max_eig: eig.as_ref().map_or(f64::NAN, |e| e.max()),
        }
    })?;
    let l = chol.l();
    let d = spec.d();
    let mut rng = seeded_rng(seed);
    let mut x = DMatrix::zeros(n, d);
    let mut labels = Vec::with_capacity(n);
    let mut z = DVector::zeros(d);
    for i in 0..n {
        let y: i8 = if rng.random::<bool>() { 1 } else { -1 };
        for zj in z.iter_mut() {
            *zj = rng.sample(StandardNormal);
        }
        let row = &spec.mu_star * f64::from(y) + &l * &z;
        x.row_mut(i).copy_from(&row.transpose());
        labels.push(y);
    }
    Ok((DataMatrix::new(x)?, SignLabels(labels)))
}

/// Canonical-form parameters: n samples in d dimensions at a given SNR.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CanonicalSpec {
    pub n: usize,
    pub d: usize,
    /// Signal-to-noise ratio; `null` in JSON means +∞.
    #[serde(with = "snr_serde")]
    pub snr: f64,
}

mod snr_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_none()
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

impl CanonicalSpec {
    pub fn new(n: usize, d: usize, snr: f64) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::Invalid("n and d must be at least 1".into()));
        }
        if snr.is_nan() || snr < 0.0 {
            return Err(Error::Invalid(format!("snr must be nonnegative, got {snr}")));
        }
        Ok(Self { n, d, snr })
    }

    /// Noise level `σ = 1/√(SNR + 1)`; zero at infinite SNR.
    pub fn sigma(&self) -> f64 {
        if self.snr.is_infinite() {
            0.0
        } else {
            1.0 / (self.snr + 1.0).sqrt()
        }
    }
}

/// A canonical-model draw together with the noise vector `g₁` of column 1.
#[derive(Debug, Clone)]
pub struct CanonicalSample {
    pub x: DataMatrix,
    pub labels: SignLabels,
    pub g1: DVector<f64>,
}

/// Canonical data: column 1 is `√(1-σ²) y* + σ g₁`, columns 2..d are i.i.d.
/// standard normal.
pub fn sample_canonical_with_noise(spec: &CanonicalSpec, seed: u64) -> Result<CanonicalSample> {
    let spec = CanonicalSpec::new(spec.n, spec.d, spec.snr)?;
    let sigma = spec.sigma();
    let signal = (1.0 - sigma * sigma).sqrt();
    let mut rng = seeded_rng(seed);
    let mut x = DMatrix::zeros(spec.n, spec.d);
    let mut labels = Vec::with_capacity(spec.n);
    let mut g1 = DVector::zeros(spec.n);
    for i in 0..spec.n {
        let y: i8 = if rng.random::<bool>() { 1 } else { -1 };
        let g: f64 = rng.sample(StandardNormal);
        x[(i, 0)] = if sigma == 0.0 { f64::from(y) } else { signal * f64::from(y) + sigma * g };
        for j in 1..spec.d {
            x[(i, j)] = rng.sample(StandardNormal);
        }
        labels.push(y);
        g1[i] = g;
    }
    Ok(CanonicalSample { x: DataMatrix::new(x)?, labels: SignLabels(labels), g1 })
}

pub fn sample_canonical(spec: &CanonicalSpec, seed: u64) -> Result<(DataMatrix, SignLabels)> {
    let s = sample_canonical_with_noise(spec, seed)?;
    Ok((s.x, s.labels))
}

/// Noise law `ℚ` of the multi-class model. Only the standard Gaussian is
/// implemented; any zero-mean isotropic law would slot in here.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseLaw {
    #[default]
    Gaussian,
}

/// Parameters of the K-component mixture `x = μ*_{y} + Σ*^{1/2} z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MixtureRepr", into = "MixtureRepr")]
pub struct MixtureSpec {
    pub pi_star: Vec<f64>,
    /// d×K matrix whose columns are the component means.
    pub m_star: DMatrix<f64>,
    pub sigma_star: DMatrix<f64>,
    pub noise: NoiseLaw,
}

#[derive(Serialize, Deserialize)]
struct MixtureRepr {
    pi_star: Vec<f64>,
    m_star: Vec<Vec<f64>>,
    sigma_star: Vec<Vec<f64>>,
    #[serde(default)]
    noise: NoiseLaw,
}

impl TryFrom<MixtureRepr> for MixtureSpec {
    type Error = Error;

    fn try_from(r: MixtureRepr) -> Result<Self> {
        Self::new(r.pi_star, rows_to_matrix(&r.m_star, "m_star")?, rows_to_matrix(&r.sigma_star, "sigma_star")?)
    }
}

impl From<MixtureSpec> for MixtureRepr {
    fn from(s: MixtureSpec) -> Self {
        Self {
            pi_star: s.pi_star,
            m_star: matrix_to_rows(&s.m_star),
            sigma_star: matrix_to_rows(&s.sigma_star),
            noise: s.noise,
        }
    }
}

impl MixtureSpec {
    pub fn new(pi_star: Vec<f64>, m_star: DMatrix<f64>, sigma_star: DMatrix<f64>) -> Result<Self> {
        let k = pi_star.len();
        if k == 0 {
            return Err(Error::Invalid("need at least one component".into()));
        }
        if pi_star.iter().any(|&p| p.is_nan() || p < 0.0) || (pi_star.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Invalid("pi_star must be a probability vector".into()));
        }
        if m_star.ncols() != k {
            return Err(Error::DimensionMismatch { expected: k, found: m_star.ncols() });
        }
        let d = m_star.nrows();
        if sigma_star.nrows() != d || sigma_star.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: sigma_star.nrows() });
        }
        Ok(Self { pi_star, m_star, sigma_star, noise: NoiseLaw::Gaussian })
    }

    pub fn k(&self) -> usize {
        self.pi_star.len()
    }

    pub fn d(&self) -> usize {
        self.m_star.nrows()
    }

    /// Equal weights, means `R·e_j`, identity covariance (requires d ≥ K).
    pub fn separated_simplex(k: usize, d: usize, r: f64) -> Result<Self> {
        if d < k {
            return Err(Error::Invalid(format!("need d >= K, got d = {d}, K = {k}")));
        }
        let m = DMatrix::from_fn(d, k, |i, j| if i == j { r } else { 0.0 });
        Self::new(vec![1.0 / k as f64; k], m, DMatrix::identity(d, d))
    }
}

/// Draws n samples from the K-component mixture.
pub fn sample_multiclass(spec: &MixtureSpec, n: usize, seed: u64) -> Result<(DataMatrix, MembershipMatrix)> {
    if n == 0 {
        return Err(Error::Invalid("n must be at least 1".into()));
    }
    let root = numerics::sqrt_psd(&spec.sigma_star)?;
    let weights = WeightedIndex::new(&spec.pi_star).map_err(|e| Error::Invalid(e.to_string()))?;
    let d = spec.d();
    let mut rng = seeded_rng(seed);
    let mut x = DMatrix::zeros(n, d);
    let mut labels = Vec::with_capacity(n);
    let mut z = DVector::zeros(d);
    for i in 0..n {
        let class = weights.sample(&mut rng);
        match spec.noise {
            NoiseLaw::Gaussian => {
                for zj in z.iter_mut() {
                    *zj = rng.sample(StandardNormal);
                }
            }
        }
        let row = spec.m_star.column(class) + &root * &z;
        x.row_mut(i).copy_from(&row.transpose());
        labels.push(class);
    }
    Ok((DataMatrix::new(x)?, MembershipMatrix { labels, k: spec.k() }))
}

/// Output of [`whiten`].
#[derive(Debug, Clone)]
pub struct Whitened {
    /// `x̂_i = Σ̃^{-1/2}(x_i - x̄)`.
    pub x_hat: DataMatrix,
    /// Sample covariance `n⁻¹XᵀJX`.
    pub sigma_tilde: DMatrix<f64>,
    pub xbar: DVector<f64>,
}

pub fn column_means(x: &DMatrix<f64>) -> DVector<f64> {
    let n = x.nrows().max(1) as f64;
    DVector::from_iterator(x.ncols(), x.column_iter().map(|c| c.sum() / n))
}

/// Centers the data and rescales it so that its sample covariance is I.
pub fn whiten(x: &DataMatrix) -> Result<Whitened> {
    let n = x.n();
    let xbar = column_means(x);
    let mut centered = x.as_matrix().clone();
    for mut row in centered.row_iter_mut() {
        row -= xbar.transpose();
    }
    let sigma_tilde = centered.tr_mul(&centered) / n as f64;
    let eig = sym_eig(&sigma_tilde)?;
    let (lo, hi) = (eig.min(), eig.max());
    if hi <= 0.0 || lo <= RANK_TOL * hi {
        return Err(Error::SingularCovariance { min_eig: lo });
    }
    let root_inv = eig.map_spectrum(|l| 1.0 / l.sqrt());
    let x_hat = centered * root_inv;
    Ok(Whitened { x_hat: DataMatrix::new(x_hat)?, sigma_tilde, xbar })
}
