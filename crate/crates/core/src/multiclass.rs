//! K-component clustering: k-means on whitened data, label alignment, the
//! cross-validated variant and the induced linear classifier.
//!
//! Labels are 0-based (`0..K`) throughout.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{whiten, DataMatrix, MembershipMatrix};
use crate::numerics::inv_sqrt;
use crate::{derive_seed, seeded_rng};

/// Default number of k-means++ restarts.
pub const DEFAULT_RESTARTS: usize = 20;

const MAX_LLOYD_ITERS: usize = 500;

#[derive(Debug, Clone)]
pub struct KMeansResult {
    pub membership: MembershipMatrix,
    /// d×K matrix of centroids in whitened coordinates.
    pub centers: DMatrix<f64>,
    pub sigma_tilde: DMatrix<f64>,
    pub xbar: DVector<f64>,
    /// Within-cluster sum of squares.
    pub objective: f64,
}

/// Centroids and within-cluster sum of squares of a labeling. An empty
/// cluster keeps a zero center and contributes nothing.
pub fn centroids_and_objective(x: &DMatrix<f64>, labels: &[usize], k: usize) -> (DMatrix<f64>, f64) {
    let d = x.ncols();
    let mut centers = DMatrix::zeros(d, k);
    let mut counts = vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        for a in 0..d {
            centers[(a, l)] += x[(i, a)];
        }
    }
    for (j, &c) in counts.iter().enumerate() {
        if c > 0 {
            let mut col = centers.column_mut(j);
            col /= c as f64;
        }
    }
    let objective = labels.iter().enumerate().map(|(i, &l)| sq_dist_row(x, i, &centers, l)).sum();
    (centers, objective)
}

fn sq_dist_row(x: &DMatrix<f64>, i: usize, centers: &DMatrix<f64>, j: usize) -> f64 {
    (0..x.ncols()).map(|a| (x[(i, a)] - centers[(a, j)]).powi(2)).sum()
}

/// Nearest center with ties to the smallest index.
fn nearest(x: &DMatrix<f64>, i: usize, centers: &DMatrix<f64>) -> usize {
    let mut best = (0, f64::INFINITY);
    for j in 0..centers.ncols() {
        let dist = sq_dist_row(x, i, centers, j);
        if dist < best.1 {
            best = (j, dist);
        }
    }
    best.0
}

fn kmeans_pp_seed(x: &DMatrix<f64>, k: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let n = x.nrows();
    let mut centers = DMatrix::zeros(x.ncols(), k);
    let first = rng.random_range(0..n);
    centers.set_column(0, &x.row(first).transpose());
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist_row(x, i, &centers, 0)).collect();
    for j in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut idx = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if u < w {
                    idx = i;
                    break;
                }
                u -= w;
            }
            idx
        } else {
            rng.random_range(0..n)
        };
        centers.set_column(j, &x.row(pick).transpose());
        for (i, di) in d2.iter_mut().enumerate() {
            *di = di.min(sq_dist_row(x, i, &centers, j));
        }
    }
    centers
}

/// One k-means++ seeded Lloyd run. Returns labels, objective and the
/// objective after every iteration.
fn lloyd_once(x: &DMatrix<f64>, k: usize, seed: u64) -> (Vec<usize>, f64, Vec<f64>) {
    let n = x.nrows();
    let mut rng = seeded_rng(seed);
    let mut centers = kmeans_pp_seed(x, k, &mut rng);
    let mut labels: Vec<usize> = (0..n).map(|i| nearest(x, i, &centers)).collect();
    repair_empty(x, &mut labels, &centers, k);
    let mut trace = Vec::new();
    for _ in 0..MAX_LLOYD_ITERS {
        let (c, obj) = centroids_and_objective(x, &labels, k);
        centers = c;
        trace.push(obj);
        let mut next: Vec<usize> = (0..n).map(|i| nearest(x, i, &centers)).collect();
        repair_empty(x, &mut next, &centers, k);
        if next == labels {
            break;
        }
        labels = next;
    }
    let obj = *trace.last().expect("at least one iteration");
    (labels, obj, trace)
}

/// Moves the point farthest from its own center into each empty cluster,
/// taking only from clusters with at least two members.
fn repair_empty(x: &DMatrix<f64>, labels: &mut [usize], centers: &DMatrix<f64>, k: usize) {
    let mut counts = vec![0usize; k];
    for &l in labels.iter() {
        counts[l] += 1;
    }
    for j in 0..k {
        if counts[j] > 0 {
            continue;
        }
        let far = (0..labels.len())
            .filter(|&i| counts[labels[i]] > 1)
            .map(|i| (i, sq_dist_row(x, i, centers, labels[i])))
            .fold(None::<(usize, f64)>, |acc, (i, dist)| match acc {
                Some((_, best)) if dist <= best => acc,
                _ => Some((i, dist)),
            });
        if let Some((i, _)) = far {
            counts[labels[i]] -= 1;
            labels[i] = j;
            counts[j] = 1;
        }
    }
}

/// Best of `restarts` k-means++ seeded Lloyd runs on already whitened data.
/// Restart r uses seed `derive_seed(seed, [r])`; the lowest restart index
/// wins ties. `sigma_tilde` and `xbar` of the result are I and 0.
pub fn lloyd(xhat: &DataMatrix, k: usize, restarts: usize, seed: u64) -> Result<KMeansResult> {
    let (n, d) = (xhat.n(), xhat.d());
    if k == 0 || n < k {
        return Err(Error::TooFewPoints { n, k });
    }
    let runs: Vec<(Vec<usize>, f64)> = (0..restarts.max(1) as u64)
        .into_par_iter()
        .map(|r| {
            let (labels, obj, _) = lloyd_once(xhat.as_matrix(), k, derive_seed(seed, &[r]));
            (labels, obj)
        })
        .collect();
    let (labels, _) = runs
        .into_iter()
        .reduce(|best, cand| if cand.1 < best.1 { cand } else { best })
        .expect("at least one restart");
    finish(xhat.as_matrix(), labels, k, DMatrix::identity(d, d), DVector::zeros(d))
}

fn finish(x: &DMatrix<f64>, labels: Vec<usize>, k: usize, sigma_tilde: DMatrix<f64>, xbar: DVector<f64>) -> Result<KMeansResult> {
    let (centers, objective) = centroids_and_objective(x, &labels, k);
    Ok(KMeansResult { membership: MembershipMatrix::from_labels(labels, k)?, centers, sigma_tilde, xbar, objective })
}

/// Largest `Kⁿ` accepted by [`kmeans_exact`].
pub const EXACT_KMEANS_LIMIT: f64 = 1e6;

/// Global k-means minimum by enumerating labelings in canonical form
/// (first occurrences of labels in increasing order).
pub fn kmeans_exact(xhat: &DataMatrix, k: usize) -> Result<KMeansResult> {
    let (n, d) = (xhat.n(), xhat.d());
    if k == 0 || n < k {
        return Err(Error::TooFewPoints { n, k });
    }
    let size = (k as f64).powi(n as i32);
    if size > EXACT_KMEANS_LIMIT {
        return Err(Error::TooLarge { size: size.min(usize::MAX as f64) as usize, limit: EXACT_KMEANS_LIMIT as usize });
    }
    let x = xhat.as_matrix();
    let rows: Vec<DVector<f64>> = (0..n).map(|i| x.row(i).transpose()).collect();
    let total_sq: f64 = rows.iter().map(|r| r.norm_squared()).sum();
    let mut search = ExactSearch {
        rows: &rows,
        k,
        sums: vec![DVector::zeros(d); k],
        counts: vec![0; k],
        labels: vec![0; n],
        best: (f64::INFINITY, Vec::new()),
        total_sq,
    };
    search.descend(0, 0);
    let labels = search.best.1;
    finish(x, labels, k, DMatrix::identity(d, d), DVector::zeros(d))
}

struct ExactSearch<'a> {
    rows: &'a [DVector<f64>],
    k: usize,
    sums: Vec<DVector<f64>>,
    counts: Vec<usize>,
    labels: Vec<usize>,
    best: (f64, Vec<usize>),
    total_sq: f64,
}

impl ExactSearch<'_> {
    fn descend(&mut self, i: usize, used: usize) {
        let n = self.rows.len();
        if i == n {
            if used < self.k {
                return;
            }
            let between: f64 = self.sums.iter().zip(&self.counts).map(|(s, &c)| s.norm_squared() / c as f64).sum();
            let obj = self.total_sq - between;
            if obj < self.best.0 - 1e-12 * self.total_sq.max(1.0) {
                self.best = (obj, self.labels.clone());
            }
            return;
        }
        // Not enough points left to open the remaining clusters.
        if n - i < self.k - used {
            return;
        }
        for j in 0..(used + 1).min(self.k) {
            self.labels[i] = j;
            self.sums[j] += &self.rows[i];
            self.counts[j] += 1;
            self.descend(i + 1, used.max(j + 1));
            self.sums[j] -= &self.rows[i];
            self.counts[j] -= 1;
        }
    }
}

/// Both sides of `⟨X̂X̂ᵀ, Y(YᵀY)†Yᵀ⟩ + Σᵢⱼ yᵢⱼ‖x̂ᵢ - μⱼ‖² = nd` for whitened X̂.
/// Returns `(trace_form, distance_form)`.
pub fn objective_identity(xhat: &DataMatrix, y: &MembershipMatrix) -> Result<(f64, f64)> {
    let (n, d) = (xhat.n(), xhat.d());
    if y.n() != n {
        return Err(Error::DimensionMismatch { expected: n, found: y.n() });
    }
    let gram = xhat.tr_mul(xhat);
    let deviation = (gram - DMatrix::identity(d, d) * n as f64).amax();
    if deviation > 1e-6 * n as f64 {
        return Err(Error::NotWhitened { deviation });
    }
    let k = y.k();
    let dense = y.to_dense();
    let col_sums = xhat.tr_mul(&dense);
    let counts = y.counts();
    let trace_form = (0..k).filter(|&j| counts[j] > 0).map(|j| col_sums.column(j).norm_squared() / counts[j] as f64).sum();
    let (_, distance_form) = centroids_and_objective(xhat.as_matrix(), y.labels(), k);
    Ok((trace_form, distance_form))
}

/// Centers and whitens the data, then runs [`lloyd`]. Returns the labels
/// with the full fit (centers, Σ̃, x̄).
pub fn whitened_kmeans(x: &DataMatrix, k: usize, restarts: usize, seed: u64) -> Result<(Vec<usize>, KMeansResult)> {
    let w = whiten(x)?;
    let mut fit = lloyd(&w.x_hat, k, restarts, seed)?;
    fit.sigma_tilde = w.sigma_tilde;
    fit.xbar = w.xbar;
    Ok((fit.membership.labels().to_vec(), fit))
}

/// A bijection on `0..K`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    mapping: Vec<usize>,
}

impl Permutation {
    pub fn new(mapping: Vec<usize>) -> Result<Self> {
        let k = mapping.len();
        let mut seen = vec![false; k];
        for &m in &mapping {
            if m >= k || seen[m] {
                return Err(Error::Invalid(format!("{mapping:?} is not a permutation")));
            }
            seen[m] = true;
        }
        Ok(Self { mapping })
    }

    pub fn identity(k: usize) -> Self {
        Self { mapping: (0..k).collect() }
    }

    pub fn mapping(&self) -> &[usize] {
        &self.mapping
    }

    pub fn apply(&self, label: usize) -> usize {
        self.mapping[label]
    }

    pub fn apply_all(&self, labels: &[usize]) -> Vec<usize> {
        labels.iter().map(|&l| self.mapping[l]).collect()
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.mapping.len()];
        for (i, &m) in self.mapping.iter().enumerate() {
            inv[m] = i;
        }
        Self { mapping: inv }
    }
}

/// `|{i : y1ᵢ ≠ τ(y2ᵢ)}|`.
pub fn mismatches(y1: &[usize], y2: &[usize], tau: &Permutation) -> usize {
    y1.iter().zip(y2).filter(|(a, b)| **a != tau.apply(**b)).count()
}

/// Largest K solved by exhaustive search in [`align`].
pub const ALIGN_EXHAUSTIVE_MAX_K: usize = 8;

/// A permutation τ minimizing `|{i : y1ᵢ ≠ τ(y2ᵢ)}|`.
///
/// Exhaustive over all K! permutations (lexicographic, first minimum wins)
/// for K ≤ 8; optimal assignment on the confusion matrix beyond.
pub fn align(y1: &[usize], y2: &[usize], k: usize) -> Result<Permutation> {
    if y1.len() != y2.len() {
        return Err(Error::DimensionMismatch { expected: y1.len(), found: y2.len() });
    }
    if let Some(&label) = y1.iter().chain(y2).find(|&&l| l >= k) {
        return Err(Error::BadLabelRange { label, k });
    }
    // agree[a][b] = |{i : y1ᵢ = a, y2ᵢ = b}|
    let mut agree = vec![vec![0usize; k]; k];
    for (&a, &b) in y1.iter().zip(y2) {
        agree[a][b] += 1;
    }
    if k <= ALIGN_EXHAUSTIVE_MAX_K {
        Ok(exhaustive_align(&agree, k))
    } else {
        Ok(hungarian_align(&agree, k))
    }
}

fn exhaustive_align(agree: &[Vec<usize>], k: usize) -> Permutation {
    let mut perm: Vec<usize> = (0..k).collect();
    let score = |p: &[usize]| (0..k).map(|b| agree[p[b]][b]).sum::<usize>();
    let mut best = (score(&perm), perm.clone());
    while next_permutation(&mut perm) {
        let s = score(&perm);
        if s > best.0 {
            best = (s, perm.clone());
        }
    }
    Permutation { mapping: best.1 }
}

fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else {
        return false;
    };
    let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).expect("pivot has a successor");
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Maximum-agreement assignment (Kuhn–Munkres with potentials, O(K³)).
/// Rows are y2 labels, columns y1 labels.
fn hungarian_align(agree: &[Vec<usize>], k: usize) -> Permutation {
    let max = agree.iter().flatten().copied().max().unwrap_or(0) as i64;
    let cost = |b: usize, a: usize| max - agree[a][b] as i64;
    let inf = i64::MAX / 4;
    let (mut u, mut v) = (vec![0i64; k + 1], vec![0i64; k + 1]);
    let mut owner = vec![0usize; k + 1];
    let mut way = vec![0usize; k + 1];
    for row in 1..=k {
        owner[0] = row;
        let mut j0 = 0;
        let mut minv = vec![inf; k + 1];
        let mut used = vec![false; k + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=k {
                if !used[j] {
                    let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=k {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut mapping = vec![0; k];
    for j in 1..=k {
        mapping[owner[j] - 1] = j - 1;
    }
    Permutation { mapping }
}

/// The linear rule `argmin_j ‖Σ̃^{-1/2}(x - x̄) - μ̂ⱼ‖²` of a fitted model.
#[derive(Debug, Clone)]
pub struct Classifier {
    root_inv: DMatrix<f64>,
    xbar: DVector<f64>,
    centers: DMatrix<f64>,
}

impl Classifier {
    pub fn new(fit: &KMeansResult) -> Result<Self> {
        let root_inv = inv_sqrt(&fit.sigma_tilde).map_err(|e| match e {
            Error::SingularMatrix { min_eig } => Error::SingularCovariance { min_eig },
            other => other,
        })?;
        Ok(Self { root_inv, xbar: fit.xbar.clone(), centers: fit.centers.clone() })
    }

    /// Ties go to the smallest index.
    pub fn classify(&self, x: &DVector<f64>) -> Result<usize> {
        if x.len() != self.xbar.len() {
            return Err(Error::DimensionMismatch { expected: self.xbar.len(), found: x.len() });
        }
        let z = &self.root_inv * (x - &self.xbar);
        let mut best = (0, f64::INFINITY);
        for (j, c) in self.centers.column_iter().enumerate() {
            let dist = (&z - c).norm_squared();
            if dist < best.1 {
                best = (j, dist);
            }
        }
        Ok(best.0)
    }

    pub fn classify_rows(&self, x: &DataMatrix) -> Result<Vec<usize>> {
        (0..x.n()).map(|i| self.classify(&x.row_vector(i))).collect()
    }
}

pub fn classify(x: &DVector<f64>, fit: &KMeansResult) -> Result<usize> {
    Classifier::new(fit)?.classify(x)
}

/// Cross-validated whitened k-means.
///
/// Fits each half separately, labels every point with the model of the other
/// half, and relabels the first half by the permutation aligning its
/// cross-labels with the first half's own fit. The second half's
/// cross-labels come from that same fit, so the result uses one labeling
/// throughout. Both halves are fitted with `seed`.
pub fn cv_whitened_kmeans(x: &DataMatrix, k: usize, restarts: usize, seed: u64) -> Result<Vec<usize>> {
    let n = x.n();
    if n % 2 == 1 {
        return Err(Error::OddSampleSize { n });
    }
    let half = n / 2;
    let first = x.rows_range(0, half);
    let second = x.rows_range(half, half);
    let (y1, fit1) = whitened_kmeans(&first, k, restarts, seed)?;
    let (_, fit2) = whitened_kmeans(&second, k, restarts, seed)?;
    let cross_first = Classifier::new(&fit2)?.classify_rows(&first)?;
    let cross_second = Classifier::new(&fit1)?.classify_rows(&second)?;
    let tau = align(&y1, &cross_first, k)?;
    let mut out = tau.apply_all(&cross_first);
    out.extend(cross_second);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::misclass_labels;
    use crate::model::{sample_multiclass, MixtureSpec};
    use rand_distr::StandardNormal;

    fn gaussian(n: usize, d: usize, seed: u64) -> DataMatrix {
        let mut rng = seeded_rng(seed);
        DataMatrix::new(DMatrix::from_fn(n, d, |_, _| rng.sample::<f64, _>(StandardNormal))).unwrap()
    }

    fn brute_force_kmeans(x: &DMatrix<f64>, k: usize) -> f64 {
        let n = x.nrows();
        let mut best = f64::INFINITY;
        let mut labels = vec![0usize; n];
        loop {
            let (_, obj) = centroids_and_objective(x, &labels, k);
            best = best.min(obj);
            let mut i = 0;
            while i < n {
                labels[i] += 1;
                if labels[i] < k {
                    break;
                }
                labels[i] = 0;
                i += 1;
            }
            if i == n {
                return best;
            }
        }
    }

    #[test]
    fn lloyd_each_point_own_cluster() {
        let x = DataMatrix::new(DMatrix::from_row_slice(3, 2, &[0.0, 0.0, 5.0, 1.0, -2.0, 7.0])).unwrap();
        let fit = lloyd(&x, 3, 5, 1).unwrap();
        assert!(fit.objective.abs() < 1e-12);
        let mut labels = fit.membership.labels().to_vec();
        labels.sort();
        assert_eq!(labels, vec![0, 1, 2]);
        assert!(matches!(lloyd(&x, 4, 1, 0), Err(Error::TooFewPoints { .. })));
    }

    #[test]
    fn lloyd_trace_monotone_and_centers_are_means() {
        for seed in 0..20 {
            let x = gaussian(60, 3, seed);
            let (labels, obj, trace) = lloyd_once(x.as_matrix(), 4, seed);
            assert!(trace.windows(2).all(|w| w[1] <= w[0] + 1e-9), "{trace:?}");
            let (_, direct) = centroids_and_objective(x.as_matrix(), &labels, 4);
            assert!((obj - direct).abs() < 1e-9);
        }
        let x = gaussian(50, 2, 3);
        let fit = lloyd(&x, 3, 4, 9).unwrap();
        for j in 0..3 {
            let members: Vec<usize> = (0..50).filter(|&i| fit.membership.labels()[i] == j).collect();
            assert!(!members.is_empty());
            for a in 0..2 {
                let mean = members.iter().map(|&i| x[(i, a)]).sum::<f64>() / members.len() as f64;
                assert!((fit.centers[(a, j)] - mean).abs() < 1e-8);
            }
        }
        let best_single = (0..4).map(|r| lloyd_once(x.as_matrix(), 3, derive_seed(9, &[r])).1).fold(f64::INFINITY, f64::min);
        assert_eq!(fit.objective, best_single);
    }

    #[test]
    fn repair_fills_empty_clusters() {
        // Identical points except one: k-means++ cannot place distinct centers.
        let mut m = DMatrix::zeros(6, 1);
        m[(5, 0)] = 1.0;
        let fit = lloyd(&DataMatrix::new(m).unwrap(), 3, 3, 0).unwrap();
        assert!(fit.membership.counts().iter().all(|&c| c > 0));
    }

    #[test]
    fn exact_matches_brute_force_and_bounds_lloyd() {
        for seed in 0..15 {
            let n = 5 + seed as usize % 4;
            let k = 2 + seed as usize % 2;
            let x = gaussian(n, 2, 40 + seed);
            let exact = kmeans_exact(&x, k).unwrap();
            assert!((exact.objective - brute_force_kmeans(x.as_matrix(), k)).abs() < 1e-9);
            assert!(lloyd(&x, k, 10, seed).unwrap().objective >= exact.objective - 1e-9);
        }
        assert!(matches!(kmeans_exact(&gaussian(13, 2, 0), 3), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn exact_trivial_cases() {
        let x = gaussian(7, 2, 1);
        let one = kmeans_exact(&x, 1).unwrap();
        let mean = crate::model::column_means(x.as_matrix());
        let tv: f64 = (0..7).map(|i| (x.row_vector(i) - &mean).norm_squared()).sum();
        assert!((one.objective - tv).abs() < 1e-10);
        let pairs = DataMatrix::new(DMatrix::from_row_slice(4, 1, &[0.0, 0.1, 10.0, 10.1])).unwrap();
        assert_eq!(kmeans_exact(&pairs, 2).unwrap().membership.labels(), &[0, 0, 1, 1]);
    }

    #[test]
    fn objective_identity_sums_to_nd() {
        for seed in 0..10 {
            let w = whiten(&gaussian(30, 3, seed)).unwrap();
            let labels: Vec<usize> = (0..30).map(|i| (i * 7 + seed as usize) % 3).collect();
            let y = MembershipMatrix::from_labels(labels, 3).unwrap();
            let (t, dist) = objective_identity(&w.x_hat, &y).unwrap();
            assert!((t + dist - 90.0).abs() < 1e-8 * 90.0);
            // Trace form straight from the dense projection Y(YᵀY)⁻¹Yᵀ.
            let yd = y.to_dense();
            let proj = &yd * (yd.tr_mul(&yd)).try_inverse().unwrap() * yd.transpose();
            let direct = (w.x_hat.as_matrix() * w.x_hat.transpose()).component_mul(&proj).sum();
            assert!((t - direct).abs() < 1e-8);
        }
        let raw = gaussian(30, 3, 0);
        let y = MembershipMatrix::from_labels(vec![0; 30], 1).unwrap();
        assert!(matches!(objective_identity(&raw, &y), Err(Error::NotWhitened { .. })));
    }

    #[test]
    fn whitened_kmeans_single_cluster() {
        let x = gaussian(40, 3, 2);
        let (labels, fit) = whitened_kmeans(&x, 1, 2, 0).unwrap();
        assert!(labels.iter().all(|&l| l == 0));
        assert!(fit.centers.amax() < 1e-10);
    }

    #[test]
    fn align_examples() {
        let y = vec![0, 1, 2, 3, 1, 2];
        let id = align(&y, &y, 4).unwrap();
        assert_eq!(id, Permutation::identity(4));
        let shifted: Vec<usize> = y.iter().map(|&l| (l + 1) % 4).collect();
        let tau = align(&y, &shifted, 4).unwrap();
        assert_eq!(tau.mapping(), &[3, 0, 1, 2]);
        assert_eq!(mismatches(&y, &shifted, &tau), 0);
        assert!(matches!(align(&[0, 5], &[0, 1], 4), Err(Error::BadLabelRange { label: 5, .. })));
        let p = Permutation::new(vec![2, 0, 1]).unwrap();
        assert_eq!(p.inverse().apply(p.apply(1)), 1);
        assert!(Permutation::new(vec![0, 0]).is_err());
    }

    #[test]
    fn hungarian_matches_exhaustive() {
        let mut rng = seeded_rng(12);
        for _ in 0..100 {
            let k = 2 + rng.random_range(0..6);
            let n = rng.random_range(1..60);
            let y1: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
            let y2: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
            let mut agree = vec![vec![0usize; k]; k];
            for (&a, &b) in y1.iter().zip(&y2) {
                agree[a][b] += 1;
            }
            let h = hungarian_align(&agree, k);
            let e = exhaustive_align(&agree, k);
            assert_eq!(mismatches(&y1, &y2, &h), mismatches(&y1, &y2, &e));
            assert!(mismatches(&y1, &y2, &e) <= mismatches(&y1, &y2, &Permutation::identity(k)));
        }
        // K > 8 goes through the assignment path.
        let y1: Vec<usize> = (0..50).map(|i| i % 10).collect();
        let y2: Vec<usize> = y1.iter().map(|&l| (l * 3 + 1) % 10).collect();
        let tau = align(&y1, &y2, 10).unwrap();
        assert_eq!(mismatches(&y1, &y2, &tau), 0);
    }

    #[test]
    fn classifier_rules() {
        let fit = KMeansResult {
            membership: MembershipMatrix::from_labels(vec![0, 1], 2).unwrap(),
            centers: DMatrix::from_column_slice(2, 2, &[1.0, 0.0, -1.0, 0.0]),
            sigma_tilde: DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 1.0]),
            xbar: DVector::from_vec(vec![1.0, 1.0]),
            objective: 0.0,
        };
        // Σ̃^{1/2}μ̂ⱼ + x̄ maps back to j.
        assert_eq!(classify(&DVector::from_vec(vec![3.0, 1.0]), &fit).unwrap(), 0);
        assert_eq!(classify(&DVector::from_vec(vec![-1.0, 1.0]), &fit).unwrap(), 1);
        assert_eq!(classify(&DVector::from_vec(vec![1.0, 5.0]), &fit).unwrap(), 0);
        let singular = KMeansResult { sigma_tilde: DMatrix::zeros(2, 2), ..fit };
        assert!(matches!(classify(&DVector::zeros(2), &singular), Err(Error::SingularCovariance { .. })));
    }

    #[test]
    fn classifier_agrees_with_training_assignment() {
        let spec = MixtureSpec::separated_simplex(3, 4, 6.0).unwrap();
        let (x, _) = sample_multiclass(&spec, 300, 4).unwrap();
        let (labels, fit) = whitened_kmeans(&x, 3, 5, 1).unwrap();
        let c = Classifier::new(&fit).unwrap();
        assert_eq!(c.classify_rows(&x).unwrap(), labels);
    }

    #[test]
    fn cv_duplicated_halves_and_errors() {
        let spec = MixtureSpec::separated_simplex(3, 3, 10.0).unwrap();
        let (x, truth) = sample_multiclass(&spec, 200, 7).unwrap();
        let doubled = DataMatrix::new(DMatrix::from_fn(400, 3, |i, j| x[(i % 200, j)])).unwrap();
        let out = cv_whitened_kmeans(&doubled, 3, 10, 3).unwrap();
        assert_eq!(&out[..200], &out[200..]);
        let (single, _) = whitened_kmeans(&x, 3, 10, 3).unwrap();
        assert_eq!(misclass_labels(&out[..200], &single, 3).unwrap(), 0.0);
        assert!(misclass_labels(truth.labels(), &single, 3).unwrap() < 0.05);
        let odd = x.rows_range(0, 199);
        assert!(matches!(cv_whitened_kmeans(&odd, 3, 2, 0), Err(Error::OddSampleSize { .. })));
    }

    #[test]
    fn whitened_kmeans_affine_invariance() {
        let spec = MixtureSpec::separated_simplex(3, 4, 8.0).unwrap();
        let (x, _) = sample_multiclass(&spec, 300, 13).unwrap();
        let mut rng = seeded_rng(14);
        let a = DMatrix::from_fn(4, 4, |_, _| rng.sample::<f64, _>(StandardNormal));
        let b = DVector::from_fn(4, |_, _| rng.sample::<f64, _>(StandardNormal));
        let mut moved = x.as_matrix() * a;
        for mut row in moved.row_iter_mut() {
            row += b.transpose();
        }
        let (l0, f0) = whitened_kmeans(&x, 3, 20, 1).unwrap();
        let (l1, f1) = whitened_kmeans(&DataMatrix::new(moved).unwrap(), 3, 20, 1).unwrap();
        assert!((f0.objective - f1.objective).abs() < 1e-6 * f0.objective);
        assert_eq!(misclass_labels(&l0, &l1, 3).unwrap(), 0.0);
    }
}
