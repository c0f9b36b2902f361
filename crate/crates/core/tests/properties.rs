use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

use covclust::detect::{gen_instance, psi_test, Hypothesis};
use covclust::iterative::{ppi_budget, ppi_traced};
use covclust::maxcut::{maxcut_exact, maxcut_objective};
use covclust::metrics::misclass_binary;
use covclust::model::{sample_canonical, whiten, CanonicalSpec, DataMatrix, MembershipMatrix, SignLabels};
use covclust::multiclass::{align, mismatches, objective_identity, Permutation};
use covclust::numerics::{inv_sqrt, projection_onto_range};
use covclust::pursuit::{abs_moment_identity, pp_loss, pp_to_labels};
use covclust::seeded_rng;
use covclust::spectral::{weighted_fourth_moment, whiten_nocentering};

fn gaussian(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = seeded_rng(seed);
    DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

fn data(rows: usize, cols: usize, seed: u64) -> DataMatrix {
    DataMatrix::new(gaussian(rows, cols, seed)).unwrap()
}

fn signs(n: usize, seed: u64) -> SignLabels {
    let mut rng = seeded_rng(seed);
    SignLabels::sign_of((0..n).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }))
}

fn well_conditioned(d: usize, seed: u64) -> DMatrix<f64> {
    gaussian(d, d, seed) + DMatrix::identity(d, d) * (2.0 * d as f64).sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn projection_is_idempotent_symmetric_and_invariant(seed in any::<u64>(), n in 8usize..40, d in 1usize..6) {
        let x = gaussian(n, d, seed);
        let h = projection_onto_range(&x).to_dense();
        prop_assert!((&h * &h - &h).amax() < 1e-10);
        prop_assert!((&h - h.transpose()).amax() < 1e-12);
        let ha = projection_onto_range(&(&x * well_conditioned(d, seed ^ 1))).to_dense();
        prop_assert!((h - ha).amax() < 1e-8);
    }

    #[test]
    fn inv_sqrt_commutes_with_rotation(seed in any::<u64>(), d in 1usize..6) {
        let b = gaussian(d, d, seed);
        let a = &b * b.transpose() + DMatrix::identity(d, d);
        let q = gaussian(d, d, seed ^ 7).qr().q();
        let lhs = inv_sqrt(&(&q * &a * q.transpose())).unwrap();
        let rhs = &q * inv_sqrt(&a).unwrap() * q.transpose();
        prop_assert!((lhs - rhs).amax() < 1e-8);
    }

    #[test]
    fn whitening_postconditions(seed in any::<u64>(), n in 10usize..80, d in 1usize..5) {
        let x = DataMatrix::new(gaussian(n, d, seed) * well_conditioned(d, seed ^ 3)).unwrap();
        let w = whiten(&x).unwrap();
        let xh = w.x_hat.as_matrix();
        let max_row = xh.row_iter().map(|r| r.norm()).fold(0.0, f64::max);
        prop_assert!(xh.row_sum().amax() <= 1e-8 * (n as f64).sqrt() * max_row);
        prop_assert!((xh.tr_mul(xh) / n as f64 - DMatrix::<f64>::identity(d, d)).norm() <= 1e-8);

        let wn = whiten_nocentering(&x).unwrap();
        let g = wn.as_matrix().tr_mul(wn.as_matrix());
        prop_assert!((g - DMatrix::<f64>::identity(d, d) * n as f64).amax() <= 1e-8 * n as f64);
    }

    #[test]
    fn fourth_moment_ignores_row_order(seed in any::<u64>(), n in 5usize..50, d in 1usize..5) {
        let w = gaussian(n, d, seed);
        let mut order: Vec<usize> = (0..n).collect();
        order.reverse();
        let permuted = DMatrix::from_fn(n, d, |i, j| w[(order[i], j)]);
        let s1 = weighted_fourth_moment(&DataMatrix::new(w).unwrap()).into_inner();
        let s2 = weighted_fourth_moment(&DataMatrix::new(permuted).unwrap()).into_inner();
        prop_assert!((&s1 - &s2).amax() <= 1e-12 * s1.amax().max(1.0));
    }

    #[test]
    fn exact_maxcut_beats_every_labeling(seed in any::<u64>(), n in 2usize..11) {
        let (x, _) = sample_canonical(&CanonicalSpec::new(n, 2, 5.0).unwrap(), seed).unwrap();
        let h = projection_onto_range(&x);
        let best = maxcut_objective(&h, &maxcut_exact(&h).unwrap()).unwrap();
        for mask in 0u32..(1 << n) {
            let y = SignLabels::sign_of((0..n).map(|i| if mask >> i & 1 == 1 { -1.0 } else { 1.0 }));
            prop_assert!(maxcut_objective(&h, &y).unwrap() <= best + 1e-10);
        }
    }

    #[test]
    fn ppi_is_odd_bounded_and_invariant(seed in any::<u64>(), n in 16usize..200) {
        let (x, _) = sample_canonical(&CanonicalSpec::new(n, 3, 4.0).unwrap(), seed).unwrap();
        let h = projection_onto_range(&x);
        let y0 = signs(n, seed ^ 5);
        let a = ppi_traced(&h, &y0).unwrap();
        prop_assert!(a.iterations <= ppi_budget(n));
        let b = ppi_traced(&h, &y0.negated()).unwrap();
        // Exact zeros of Hy would break oddness; they do not occur for Gaussian data.
        prop_assert_eq!(a.labels.negated(), b.labels);
        let xa = DataMatrix::new(x.as_matrix() * well_conditioned(3, seed ^ 9)).unwrap();
        let c = ppi_traced(&projection_onto_range(&xa), &y0).unwrap();
        prop_assert_eq!(misclass_binary(&a.labels, &c.labels).unwrap(), 0.0);
    }

    #[test]
    fn kmeans_identity_holds(seed in any::<u64>(), n in 6usize..60, d in 1usize..4, k in 1usize..5) {
        let w = whiten(&data(n, d, seed)).unwrap();
        let mut rng = seeded_rng(seed ^ 11);
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let y = MembershipMatrix::from_labels(labels, k).unwrap();
        let (t, dist) = objective_identity(&w.x_hat, &y).unwrap();
        let nd = (n * d) as f64;
        prop_assert!((t + dist - nd).abs() <= 1e-6 * nd);
    }

    #[test]
    fn align_never_worse_than_identity(seed in any::<u64>(), n in 1usize..80, k in 1usize..7) {
        let mut rng = seeded_rng(seed);
        let y1: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let y2: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let tau = align(&y1, &y2, k).unwrap();
        prop_assert!(mismatches(&y1, &y2, &tau) <= mismatches(&y1, &y2, &Permutation::identity(k)));
    }

    #[test]
    fn pursuit_loss_identity(seed in any::<u64>(), n in 8usize..60, d in 1usize..5) {
        let x = data(n, d, seed);
        let beta = DVector::from_column_slice(gaussian(d, 1, seed ^ 13).as_slice());
        let r = abs_moment_identity(&x, &beta).unwrap();
        prop_assert!(r.abs() <= 1e-8 * n as f64);
        prop_assert!(pp_loss(&x, &beta).unwrap() >= 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn psi_statistic_in_unit_interval(seed in any::<u64>(), planted in any::<bool>()) {
        let h = if planted { Hypothesis::H1 } else { Hypothesis::H0 };
        let x = gen_instance(h, 300, 6, seed).unwrap();
        let out = psi_test(&x, 0.2, seed ^ 1).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&out.statistic));
    }

    #[test]
    fn pursuit_round_trip_from_maxcut(seed in any::<u64>(), n in 6usize..15) {
        let (x, _) = sample_canonical(&CanonicalSpec::new(n, 2, 5.0).unwrap(), seed).unwrap();
        let yhat = maxcut_exact(&projection_onto_range(&x)).unwrap();
        let xm = x.as_matrix();
        let beta = (xm.tr_mul(xm)).lu().solve(&xm.tr_mul(&yhat.to_vector())).unwrap();
        let y = pp_to_labels(&x, &beta).unwrap();
        prop_assert_eq!(misclass_binary(&y, &yhat).unwrap(), 0.0);
    }
}
