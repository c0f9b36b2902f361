//! Projection pursuit: `min_β Σᵢ (|βᵀxᵢ| - 1)²` and its population landscape.
//!
//! The empirical loss has the same minimizers as Max-Cut on Range(X) (signs
//! of `Xβ̂`). The population loss `F(β) = E(|βᵀx| - 1)²` has a critical point
//! along every direction orthogonal to the mean; [`spurious_point`] locates it
//! and evaluates gradient and Hessian there by quadrature.
//!
//! For β ⊥ μ, `s = βᵀx ~ N(0, v)` with `v = βᵀΣβ`. Regressing `x` on `s`
//! and applying Gaussian integration by parts gives
//!
//! ```text
//! ∇F(β)  = A · E[s f'(s)],                         A = Σβ / v
//! ∇²F(β) = AAᵀ · E[f'(s)(s³/v - 2s)] + C · E[s f'(s)] / v,
//!          C = μμᵀ + Σ - ΣββᵀΣ / v
//! ```
//!
//! so only one-dimensional Gaussian expectations are needed.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{DataMatrix, SignLabels};
use crate::numerics::{inv_sqrt, sqrt_psd, sym_eig, RANK_TOL};

fn check_beta(x: &DataMatrix, beta: &DVector<f64>) -> Result<()> {
    if beta.len() != x.d() {
        return Err(Error::DimensionMismatch { expected: x.d(), found: beta.len() });
    }
    Ok(())
}

/// `Σᵢ (|βᵀxᵢ| - 1)²`.
pub fn pp_loss(x: &DataMatrix, beta: &DVector<f64>) -> Result<f64> {
    check_beta(x, beta)?;
    Ok((x.as_matrix() * beta).iter().map(|p| (p.abs() - 1.0).powi(2)).sum())
}

/// `Σᵢ 2(|βᵀxᵢ| - 1) sgn(βᵀxᵢ) xᵢ`, taking `sgn(0) = 0` at the kinks.
pub fn pp_grad(x: &DataMatrix, beta: &DVector<f64>) -> Result<DVector<f64>> {
    check_beta(x, beta)?;
    let p = x.as_matrix() * beta;
    let coef = p.map(|v| if v == 0.0 { 0.0 } else { 2.0 * (v.abs() - 1.0) * v.signum() });
    Ok(x.tr_mul(&coef))
}

/// `sgn(Xβ)` with `sgn(0) = +1`.
pub fn pp_to_labels(x: &DataMatrix, beta: &DVector<f64>) -> Result<SignLabels> {
    check_beta(x, beta)?;
    Ok(SignLabels::sign_of((x.as_matrix() * beta).iter().copied()))
}

/// `pp_loss - (n‖γ‖² - 2Σᵢ|γᵀwᵢ| + n)` with `Σ̃ = XᵀX/n`, `γ = Σ̃^{1/2}β`
/// and `wᵢ = Σ̃^{-1/2}xᵢ`. Zero up to rounding.
pub fn abs_moment_identity(x: &DataMatrix, beta: &DVector<f64>) -> Result<f64> {
    check_beta(x, beta)?;
    let n = x.n() as f64;
    let sigma = x.tr_mul(x) / n;
    let root_inv = inv_sqrt(&sigma).map_err(|e| match e {
        Error::SingularMatrix { min_eig } => Error::SingularCovariance { min_eig },
        other => other,
    })?;
    let gamma = sqrt_psd(&sigma)? * beta;
    let w = x.as_matrix() * root_inv;
    let rhs = n * gamma.norm_squared() - 2.0 * (w * &gamma).iter().map(|v| v.abs()).sum::<f64>() + n;
    Ok(pp_loss(x, beta)? - rhs)
}

/// β with its empirical loss and gradient norm.
#[derive(Debug, Clone)]
pub struct PursuitPoint {
    pub beta: DVector<f64>,
    pub loss: f64,
    pub grad_norm: f64,
}

impl PursuitPoint {
    pub fn evaluate(x: &DataMatrix, beta: DVector<f64>) -> Result<Self> {
        let loss = pp_loss(x, &beta)?;
        let grad_norm = pp_grad(x, &beta)?.norm();
        Ok(Self { beta, loss, grad_norm })
    }
}

/// A scalar loss `f` applied to `βᵀx`.
pub trait Loss {
    fn value(&self, s: f64) -> f64;
    /// Derivative, with any kink placed at 0.
    fn deriv(&self, s: f64) -> f64;
}

/// `(|s| - 1)²`.
#[derive(Debug, Clone, Copy, Default)]
pub struct AbsLoss;

impl Loss for AbsLoss {
    fn value(&self, s: f64) -> f64 {
        (s.abs() - 1.0).powi(2)
    }

    fn deriv(&self, s: f64) -> f64 {
        2.0 * s - 2.0 * s.signum()
    }
}

/// `(s² - 1)²`.
#[derive(Debug, Clone, Copy, Default)]
pub struct QuarticLoss;

impl Loss for QuarticLoss {
    fn value(&self, s: f64) -> f64 {
        (s * s - 1.0).powi(2)
    }

    fn deriv(&self, s: f64) -> f64 {
        4.0 * s * (s * s - 1.0)
    }
}

/// Gauss rule for the weight `e^{-x²}` on `[0, ∞)`.
#[derive(Debug, Clone)]
pub struct HalfRangeHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Default node count of [`HalfRangeHermite`].
pub const DEFAULT_NODES: usize = 64;

impl HalfRangeHermite {
    /// Recurrence coefficients by the discretized Stieltjes procedure on a
    /// composite Gauss–Legendre grid over `[0, 32]`, then Golub–Welsch.
    pub fn new(n: usize) -> Self {
        let (grid, gw) = composite_legendre(0.0, 32.0, 64, 40);
        let w: Vec<f64> = grid.iter().zip(&gw).map(|(x, g)| g * (-x * x).exp()).collect();
        let mass: f64 = w.iter().sum();
        // Orthonormal recurrence: q_{k+1} b_{k+1} = (x - a_k) q_k - b_k q_{k-1}.
        let mut alpha = vec![0.0; n];
        let mut b = vec![0.0; n];
        let mut q_prev = vec![0.0; grid.len()];
        let mut q = vec![1.0 / mass.sqrt(); grid.len()];
        for k in 0..n {
            alpha[k] = q.iter().zip(&w).zip(&grid).map(|((q, w), x)| x * q * q * w).sum();
            if k + 1 == n {
                break;
            }
            let r: Vec<f64> = (0..grid.len()).map(|i| (grid[i] - alpha[k]) * q[i] - b[k] * q_prev[i]).collect();
            b[k + 1] = r.iter().zip(&w).map(|(r, w)| r * r * w).sum::<f64>().sqrt();
            let next = r.iter().map(|r| r / b[k + 1]).collect();
            q_prev = std::mem::replace(&mut q, next);
        }
        let jacobi = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                alpha[i]
            } else if i.abs_diff(j) == 1 {
                b[i.max(j)]
            } else {
                0.0
            }
        });
        let eig = sym_eig(&jacobi).expect("Jacobi matrix is symmetric");
        let nodes = eig.values.iter().copied().collect();
        let weights = (0..n).map(|i| mass * eig.vectors[(0, i)].powi(2)).collect();
        Self { nodes, weights }
    }

    /// `E h(√v Z)` for `Z ~ N(0, 1)`, splitting the line at 0.
    pub fn normal_expectation(&self, v: f64, h: impl Fn(f64) -> f64) -> f64 {
        let scale = (2.0 * v).sqrt();
        let sum: f64 = self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * (h(scale * x) + h(-scale * x))).sum();
        sum / std::f64::consts::PI.sqrt()
    }
}

impl Default for HalfRangeHermite {
    fn default() -> Self {
        Self::new(DEFAULT_NODES)
    }
}

/// Nodes and weights of `m`-point Gauss–Legendre on `[-1, 1]` (Newton on Pₘ).
fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=m {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn composite_legendre(a: f64, b: f64, panels: usize, m: usize) -> (Vec<f64>, Vec<f64>) {
    let (t, tw) = gauss_legendre(m);
    let h = (b - a) / panels as f64;
    let mut xs = Vec::with_capacity(panels * m);
    let mut ws = Vec::with_capacity(panels * m);
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        for (ti, wi) in t.iter().zip(&tw) {
            xs.push(mid + 0.5 * h * ti);
            ws.push(0.5 * h * wi);
        }
    }
    (xs, ws)
}

/// Population loss, gradient and Hessian at a β orthogonal to μ.
#[derive(Debug, Clone)]
pub struct PopulationProbe {
    pub loss: f64,
    pub grad: DVector<f64>,
    pub hessian: DMatrix<f64>,
}

fn check_population(mu: &DVector<f64>, sigma: &DMatrix<f64>, beta: &DVector<f64>) -> Result<()> {
    let d = mu.len();
    if sigma.shape() != (d, d) {
        return Err(Error::DimensionMismatch { expected: d, found: sigma.nrows() });
    }
    if beta.len() != d {
        return Err(Error::DimensionMismatch { expected: d, found: beta.len() });
    }
    if beta.dot(mu).abs() > 1e-8 * mu.norm() * beta.norm() {
        return Err(Error::Invalid("beta must be orthogonal to the mean".into()));
    }
    let eig = sym_eig(sigma)?;
    if eig.min() <= RANK_TOL * eig.max().max(0.0) {
        return Err(Error::NotPositiveDefinite { min_eig: eig.min(), max_eig: eig.max() });
    }
    if beta.norm() == 0.0 {
        return Err(Error::Invalid("beta must be nonzero".into()));
    }
    Ok(())
}

/// `F`, `∇F` and `∇²F` at β ⊥ μ for `x = yμ + Σ^{1/2}z`.
pub fn population_probe(
    loss: &impl Loss,
    quad: &HalfRangeHermite,
    mu: &DVector<f64>,
    sigma: &DMatrix<f64>,
    beta: &DVector<f64>,
) -> Result<PopulationProbe> {
    check_population(mu, sigma, beta)?;
    let sb = sigma * beta;
    let v = beta.dot(&sb);
    let value = quad.normal_expectation(v, |s| loss.value(s));
    let m1 = quad.normal_expectation(v, |s| s * loss.deriv(s));
    let m3 = quad.normal_expectation(v, |s| loss.deriv(s) * (s * s * s / v - 2.0 * s));
    let a = &sb / v;
    let c = mu * mu.transpose() + sigma - &sb * sb.transpose() / v;
    let hessian = &a * a.transpose() * m3 + c * (m1 / v);
    Ok(PopulationProbe { loss: value, grad: a * m1, hessian })
}

#[derive(Debug, Clone)]
pub struct SpuriousPoint {
    pub t0: f64,
    pub grad_norm: f64,
    /// Smallest Hessian eigenvalue on the orthogonal complement of Σβ.
    pub hessian_min_eig_offray: f64,
    /// `a` in `∇²F(t₀β) ≈ a(Σβ)(Σβ)ᵀ`, fitted as `(Σβ)ᵀ∇²F(Σβ)/‖Σβ‖⁴`.
    pub rank_one_coeff: f64,
    pub hessian: DMatrix<f64>,
}

/// Bracket scan points `2⁻⁶, ..., 2⁷`.
const BRACKET: std::ops::RangeInclusive<i32> = -6..=7;

/// Critical point of `t ↦ F(tβ)` for the absolute-value loss.
pub fn spurious_point(mu: &DVector<f64>, sigma: &DMatrix<f64>, beta: &DVector<f64>) -> Result<SpuriousPoint> {
    spurious_point_with(&AbsLoss, &HalfRangeHermite::default(), mu, sigma, beta)
}

/// Finds `t₀` by bisection on `g(t) = ⟨β, ∇F(tβ)⟩` over the first sign change
/// among the bracket points, then probes `t₀β`.
pub fn spurious_point_with(
    loss: &impl Loss,
    quad: &HalfRangeHermite,
    mu: &DVector<f64>,
    sigma: &DMatrix<f64>,
    beta: &DVector<f64>,
) -> Result<SpuriousPoint> {
    check_population(mu, sigma, beta)?;
    let g = |t: f64| -> Result<f64> { Ok(beta.dot(&population_probe(loss, quad, mu, sigma, &(beta * t))?.grad)) };
    let ts: Vec<f64> = BRACKET.map(|e| 2f64.powi(e)).collect();
    let mut bracket = None;
    let mut prev = (ts[0], g(ts[0])?);
    for &t in &ts[1..] {
        let cur = (t, g(t)?);
        if prev.1 == 0.0 {
            bracket = Some((prev.0, prev.0));
            break;
        }
        if prev.1.signum() != cur.1.signum() {
            bracket = Some((prev.0, cur.0));
            break;
        }
        prev = cur;
    }
    let Some((mut lo, mut hi)) = bracket else {
        return Err(Error::NoBracket { upper: *ts.last().expect("nonempty") });
    };
    let g_lo = g(lo)?.signum();
    for _ in 0..200 {
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let gm = g(mid)?;
        if gm == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if gm.signum() == g_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t0 = 0.5 * (lo + hi);
    let probe = population_probe(loss, quad, mu, sigma, &(beta * t0))?;
    let sb = sigma * beta;
    let basis = complement_basis(&sb);
    let restricted = basis.tr_mul(&probe.hessian) * &basis;
    let restricted = (&restricted + restricted.transpose()) * 0.5;
    let hessian_min_eig_offray = if restricted.nrows() == 0 { 0.0 } else { sym_eig(&restricted)?.min() };
    let rank_one_coeff = sb.dot(&(&probe.hessian * &sb)) / sb.norm_squared().powi(2);
    Ok(SpuriousPoint { t0, grad_norm: probe.grad.norm(), hessian_min_eig_offray, rank_one_coeff, hessian: probe.hessian })
}

/// Orthonormal basis (d×(d-1)) of the complement of `a`, from the Householder
/// reflection sending e₁ to `a/‖a‖`.
pub fn complement_basis(a: &DVector<f64>) -> DMatrix<f64> {
    let d = a.len();
    let unit = a / a.norm();
    let mut w = unit.clone();
    w[0] -= 1.0;
    let reflector = if w.norm() < 1e-12 {
        DMatrix::identity(d, d)
    } else {
        DMatrix::identity(d, d) - &w * w.transpose() * (2.0 / w.norm_squared())
    };
    reflector.columns(1, d - 1).into_owned()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maxcut::maxcut_exact;
    use crate::metrics::misclass_binary;
    use crate::model::{sample_canonical, CanonicalSpec};
    use crate::numerics::projection_onto_range;
    use crate::seeded_rng;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn gaussian(n: usize, d: usize, seed: u64) -> DataMatrix {
        let mut rng = seeded_rng(seed);
        DataMatrix::new(DMatrix::from_fn(n, d, |_, _| rng.sample::<f64, _>(StandardNormal))).unwrap()
    }

    #[test]
    fn loss_trivial_values() {
        let x = DataMatrix::new(DMatrix::from_row_slice(3, 2, &[1.0, 0.0, -1.0, 5.0, 1.0, -2.0])).unwrap();
        let e1 = DVector::from_vec(vec![1.0, 0.0]);
        assert_eq!(pp_loss(&x, &e1).unwrap(), 0.0);
        assert_eq!(pp_grad(&x, &e1).unwrap(), DVector::zeros(2));
        assert_eq!(pp_loss(&x, &DVector::zeros(2)).unwrap(), 3.0);
        assert!(pp_loss(&x, &DVector::zeros(3)).is_err());
    }

    #[test]
    fn loss_and_grad_match_loops() {
        let x = gaussian(40, 4, 1);
        let beta = DVector::from_vec(vec![0.3, -0.7, 0.2, 1.1]);
        let mut loss = 0.0;
        let mut grad = [0.0; 4];
        for i in 0..40 {
            let p: f64 = (0..4).map(|a| x[(i, a)] * beta[a]).sum();
            loss += (p.abs() - 1.0) * (p.abs() - 1.0);
            for (a, g) in grad.iter_mut().enumerate() {
                *g += 2.0 * (p.abs() - 1.0) * p.signum() * x[(i, a)];
            }
        }
        assert!((pp_loss(&x, &beta).unwrap() - loss).abs() < 1e-12);
        let g = pp_grad(&x, &beta).unwrap();
        for a in 0..4 {
            assert!((g[a] - grad[a]).abs() < 1e-12);
        }
        assert_eq!(pp_grad(&x, &(-&beta)).unwrap(), -g);
    }

    #[test]
    fn grad_matches_finite_differences() {
        let x = gaussian(50, 3, 2);
        let beta = DVector::from_vec(vec![0.4, 0.9, -0.5]);
        let g = pp_grad(&x, &beta).unwrap();
        let h = 1e-6;
        for a in 0..3 {
            let mut up = beta.clone();
            up[a] += h;
            let mut dn = beta.clone();
            dn[a] -= h;
            let fd = (pp_loss(&x, &up).unwrap() - pp_loss(&x, &dn).unwrap()) / (2.0 * h);
            assert!((fd - g[a]).abs() <= 1e-4 * g.norm(), "{fd} vs {}", g[a]);
        }
    }

    #[test]
    fn labels_from_beta() {
        let (x, y) = sample_canonical(&CanonicalSpec::new(30, 3, f64::INFINITY).unwrap(), 3).unwrap();
        let e1 = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        assert_eq!(pp_to_labels(&x, &e1).unwrap(), y);
        assert_eq!(pp_to_labels(&x, &(-e1)).unwrap(), y.negated());
    }

    #[test]
    fn maxcut_round_trip() {
        for seed in 0..10 {
            let (x, _) = sample_canonical(&CanonicalSpec::new(14, 3, 4.0).unwrap(), seed).unwrap();
            let yhat = maxcut_exact(&projection_onto_range(&x)).unwrap();
            let beta = (x.tr_mul(&x)).try_inverse().unwrap() * x.tr_mul(&yhat.to_vector());
            assert_eq!(misclass_binary(&pp_to_labels(&x, &beta).unwrap(), &yhat).unwrap(), 0.0);
        }
    }

    #[test]
    fn abs_moment_identity_residuals() {
        assert!(abs_moment_identity(&gaussian(10, 2, 0), &DVector::zeros(2)).unwrap().abs() < 1e-12);
        for seed in 0..20 {
            let x = gaussian(100, 5, 10 + seed);
            let mut rng = seeded_rng(seed);
            let beta = DVector::from_fn(5, |_, _| rng.sample::<f64, _>(StandardNormal));
            assert!(abs_moment_identity(&x, &beta).unwrap().abs() <= 1e-8 * 100.0);
        }
        let singular = DataMatrix::new(DMatrix::from_fn(5, 2, |i, _| i as f64)).unwrap();
        assert!(matches!(abs_moment_identity(&singular, &DVector::zeros(2)), Err(Error::SingularCovariance { .. })));
    }

    #[test]
    fn pursuit_point_fields() {
        let x = gaussian(20, 2, 4);
        let p = PursuitPoint::evaluate(&x, DVector::from_vec(vec![0.5, 0.5])).unwrap();
        assert!(p.loss >= 0.0 && p.grad_norm >= 0.0);
    }

    #[test]
    fn quadrature_moments() {
        let q = HalfRangeHermite::default();
        assert!((q.weights.iter().sum::<f64>() - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-13);
        assert!(q.nodes.iter().all(|&x| x > 0.0));
        let e = |h: &dyn Fn(f64) -> f64| q.normal_expectation(1.0, h);
        assert!((e(&|s| s * s) - 1.0).abs() < 1e-13);
        assert!((e(&|s| s.powi(4)) - 3.0).abs() < 1e-12);
        assert!((e(&|s| s.abs()) - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-13);
        assert!((q.normal_expectation(4.0, |s| s.abs()) - 2.0 * (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-13);
        // A smooth non-polynomial integrand: E cos(Z) = e^{-1/2}.
        assert!((e(&|s| s.cos()) - (-0.5f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn quadrature_node_count_convergence() {
        let (q64, q128) = (HalfRangeHermite::new(64), HalfRangeHermite::new(128));
        let mu = DVector::from_vec(vec![5.0, 0.0, 0.0]);
        let sigma = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.0, 0.3, 1.0, 0.2, 0.0, 0.2, 1.5]);
        for beta in [vec![0.0, 1.0, 0.0], vec![0.0, 0.6, -0.8], vec![0.0, 2.0, 1.0]] {
            let beta = DVector::from_vec(beta);
            let a = population_probe(&AbsLoss, &q64, &mu, &sigma, &beta).unwrap();
            let b = population_probe(&AbsLoss, &q128, &mu, &sigma, &beta).unwrap();
            assert!((a.loss - b.loss).abs() <= 1e-9);
            assert!((a.grad - b.grad).amax() <= 1e-9);
        }
    }

    #[test]
    fn population_derivatives_match_finite_differences() {
        let q = HalfRangeHermite::default();
        let mu = DVector::from_vec(vec![3.0, 0.0, 0.0]);
        let sigma = DMatrix::from_row_slice(3, 3, &[1.5, 0.4, 0.1, 0.4, 1.0, 0.3, 0.1, 0.3, 2.0]);
        let beta = DVector::from_vec(vec![0.0, 0.7, 0.4]);
        let p = population_probe(&AbsLoss, &q, &mu, &sigma, &beta).unwrap();
        let h = 1e-5;
        // Directions orthogonal to μ keep β on the probe family.
        for a in 1..3 {
            let mut up = beta.clone();
            up[a] += h;
            let mut dn = beta.clone();
            dn[a] -= h;
            let pu = population_probe(&AbsLoss, &q, &mu, &sigma, &up).unwrap();
            let pd = population_probe(&AbsLoss, &q, &mu, &sigma, &dn).unwrap();
            let fd = (pu.loss - pd.loss) / (2.0 * h);
            assert!((fd - p.grad[a]).abs() <= 1e-6, "grad {a}: {fd} vs {}", p.grad[a]);
            for b in 1..3 {
                let fd = (pu.grad[b] - pd.grad[b]) / (2.0 * h);
                assert!((fd - p.hessian[(a, b)]).abs() <= 1e-5, "hess {a}{b}");
            }
        }
    }

    #[test]
    fn spurious_point_identity_covariance() {
        let mu = DVector::from_vec(vec![5.0, 0.0, 0.0]);
        let sigma = DMatrix::identity(3, 3);
        let beta = DVector::from_vec(vec![0.0, 1.0, 0.0]);
        let sp = spurious_point(&mu, &sigma, &beta).unwrap();
        assert!((sp.t0 - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-10);
        assert!(sp.grad_norm <= 1e-12);
        assert!(sp.hessian_min_eig_offray >= -1e-10);
        assert!(sp.hessian_min_eig_offray.abs() < 1e-10);
        // At t₀ the Hessian is a multiple of (Σβ)(Σβ)ᵀ = e₂e₂ᵀ.
        let mut resid = sp.hessian.clone();
        resid[(1, 1)] -= sp.rank_one_coeff;
        assert!(resid.amax() < 1e-10);
        assert!(sp.rank_one_coeff > 0.0);
    }

    #[test]
    fn spurious_point_general_covariance() {
        let mu = DVector::from_vec(vec![2.0, -1.0, 0.0]);
        let sigma = DMatrix::from_row_slice(3, 3, &[2.0, 0.5, 0.1, 0.5, 1.0, 0.2, 0.1, 0.2, 0.7]);
        let beta = DVector::from_vec(vec![1.0, 2.0, 0.5]);
        let sp = spurious_point(&mu, &sigma, &beta).unwrap();
        let v = beta.dot(&(&sigma * &beta));
        assert!((sp.t0 - (2.0 / std::f64::consts::PI / v).sqrt()).abs() < 1e-10);
        assert!(sp.grad_norm < 1e-10);
        assert!(sp.hessian_min_eig_offray.abs() < 1e-9);
        for u in complement_basis(&(&sigma * &beta)).column_iter() {
            assert!(u.dot(&(&sigma * &beta)).abs() < 1e-12);
        }
    }

    #[test]
    fn spurious_point_quartic_loss() {
        // E[s f'(s)] = 4(3v² - v) vanishes at v = 1/3.
        let mu = DVector::from_vec(vec![1.0, 0.0]);
        let sigma = DMatrix::identity(2, 2);
        let beta = DVector::from_vec(vec![0.0, 1.0]);
        let sp = spurious_point_with(&QuarticLoss, &HalfRangeHermite::default(), &mu, &sigma, &beta).unwrap();
        assert!((sp.t0 - (1.0f64 / 3.0).sqrt()).abs() < 1e-10);
    }

    #[test]
    fn spurious_point_input_checks() {
        let mu = DVector::from_vec(vec![1.0, 0.0]);
        let sigma = DMatrix::identity(2, 2);
        assert!(spurious_point(&mu, &sigma, &DVector::from_vec(vec![1.0, 1.0])).is_err());
        assert!(spurious_point(&mu, &DMatrix::zeros(2, 2), &DVector::from_vec(vec![0.0, 1.0])).is_err());
        // Ray far beyond the bracket: v tiny makes t₀ exceed 2⁷.
        let tiny = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1e-6]);
        assert!(matches!(spurious_point(&mu, &tiny, &DVector::from_vec(vec![0.0, 1.0])), Err(Error::NoBracket { .. })));
    }
}
