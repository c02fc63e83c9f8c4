mod common;

use proptest::prelude::*;
use tracekit::estimators::exact_eigenvalue_moments;
use tracekit::linop::{dense_operator, DiagonalOperator, QueryCounter, ScaledIdentity};
use tracekit::{
    estimate_eigenvalue_moments, hutch_pp, hutchinson, na_hutch_pp, query_budget_for, Algorithm, Error,
    PsdClaim, QueryDistribution, Split,
};

use common::*;

const GAUSS: QueryDistribution = QueryDistribution::Gaussian;
const RADE: QueryDistribution = QueryDistribution::Rademacher;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rademacher_hutchinson_is_exact_on_diagonals(d in prop::collection::vec(-5.0f64..5.0, 1..60), l in 1usize..12, seed in any::<u64>()) {
        let want: f64 = d.iter().sum();
        let scale: f64 = d.iter().map(|x| x.abs()).sum();
        let est = hutchinson(&DiagonalOperator::new(d), l, RADE, seed).unwrap();
        prop_assert!((est.value - want).abs() <= 1e-12 * scale.max(1e-300));
    }

    #[test]
    fn audited_queries_equal_budget(n in 20usize..60, m in 6usize..40, seed in any::<u64>()) {
        let op = DiagonalOperator::inverse_square_spectrum(n);
        for alg in Algorithm::ALL {
            let counter = QueryCounter::new(&op);
            let est = alg.estimate(&counter, m, GAUSS, seed).unwrap();
            prop_assert_eq!(est.m, m);
            prop_assert_eq!(counter.columns(), m);
            prop_assert_eq!(est.adaptive_rounds, if alg.is_adaptive() { 2 } else { 1 });
        }
    }

    #[test]
    fn hutch_pp_rank_capture(n in 30usize..80, m in 6usize..40, seed in any::<u64>()) {
        let rank = m / 3 - 1;
        prop_assume!(rank >= 1);
        let a = low_rank_psd(&mut rng(seed), n, rank);
        let want = dense_trace(&a);
        let est = hutch_pp(&dense_operator(a).unwrap(), m, GAUSS, seed).unwrap();
        prop_assert!((est.value - want).abs() <= 1e-8 * want, "{} vs {want}", est.value);
    }

    // NA-Hutch++ can only capture rank up to the width of S, which is m/4
    // under the default split and falls below m/3 - 1 for some m.
    #[test]
    fn na_hutch_pp_rank_capture(n in 30usize..80, m in 8usize..40, seed in any::<u64>()) {
        let (s, _, _) = Split::default().columns(m).unwrap();
        let a = low_rank_psd(&mut rng(seed), n, s);
        let want = dense_trace(&a);
        let est = na_hutch_pp(&dense_operator(a).unwrap(), m, Split::default(), GAUSS, seed).unwrap();
        prop_assert!((est.value - want).abs() <= 1e-8 * want, "{} vs {want}", est.value);
    }
}

#[test]
fn hutchinson_examples() {
    let d = DiagonalOperator::new(vec![1.0, 0.25, 1.0 / 9.0]);
    for (l, seed) in [(1, 0), (5, 3), (17, 99)] {
        let est = hutchinson(&d, l, RADE, seed).unwrap();
        assert!((est.value - (1.0 + 0.25 + 1.0 / 9.0)).abs() < 1e-15);
    }

    let l = 10_000;
    let est = hutchinson(&ScaledIdentity::new(100, 1.0), l, GAUSS, 1).unwrap();
    let tol = 3.0 * (2.0 * 100.0 / l as f64).sqrt() * 2f64.sqrt();
    assert!((est.value - 100.0).abs() <= tol, "{}", est.value);

    assert_eq!(hutchinson(&ScaledIdentity::new(10, 0.0), 4, GAUSS, 0).unwrap().value, 0.0);
    assert!(hutchinson(&ScaledIdentity::new(10, 1.0), 0, GAUSS, 0).is_err());
}

#[test]
fn hutchinson_is_unbiased() {
    let mut r = rng(31);
    let a = low_rank_psd(&mut r, 50, 50) / 50.0;
    let want = dense_trace(&a);
    let op = dense_operator(a.clone()).unwrap();
    let samples: Vec<f64> = (0..10_000u64)
        .map(|s| hutchinson(&op, 1, GAUSS, s).unwrap().value)
        .collect();
    let k = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / k;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
    let se = (var / k).sqrt();
    assert!((mean - want).abs() <= 4.0 * se, "mean {mean} want {want} se {se}");
    // Var(g^T A g) = 2 |A|_F^2 for Gaussian g.
    let var_exact = 2.0 * a.norm_squared();
    assert!((var / var_exact - 1.0).abs() < 0.1, "{var} vs {var_exact}");
}

#[test]
fn na_hutch_pp_misses_rank_beyond_sketch_width() {
    // m = 21 gives s = 5 < m/3 - 1 = 6.
    let a = low_rank_psd(&mut rng(0), 30, 6);
    let want = dense_trace(&a);
    let est = na_hutch_pp(&dense_operator(a).unwrap(), 21, Split::default(), GAUSS, 0).unwrap();
    assert!((est.value - want).abs() > 1e-8 * want);
}

#[test]
fn rank_one_capture() {
    let v = gaussian_vector(&mut rng(8), 40);
    let a = &v * v.transpose();
    let op = dense_operator(a).unwrap();
    let want = v.norm_squared();
    let hpp = hutch_pp(&op, 9, GAUSS, 0).unwrap();
    assert!((hpp.value - want).abs() <= 1e-8 * want);
    let na = na_hutch_pp(&op, 16, Split::default(), GAUSS, 0).unwrap();
    assert!((na.value - want).abs() <= 1e-8 * want);
}

#[test]
fn zero_matrix_estimates_zero() {
    let z = ScaledIdentity::new(25, 0.0);
    assert_eq!(na_hutch_pp(&z, 12, Split::default(), GAUSS, 0).unwrap().value, 0.0);
    assert_eq!(hutch_pp(&z, 12, GAUSS, 0).unwrap().value, 0.0);
}

#[test]
fn hutch_pp_on_identity_splits_trace() {
    let n = 300;
    let m = 60;
    let est = hutch_pp(&ScaledIdentity::new(n, 1.0), m, GAUSS, 5).unwrap();
    // tr(Q^T Q) = m/3 exactly; the deflated Hutchinson term estimates n - m/3
    // with relative spread about sqrt(2/(m/3)).
    let spread = (n - m / 3) as f64 * (2.0 / (m - 2 * (m / 3)) as f64).sqrt();
    assert!((est.value - n as f64).abs() <= 4.0 * spread, "{}", est.value);
}

#[test]
fn budget_errors() {
    let op = DiagonalOperator::inverse_square_spectrum(10);
    assert!(matches!(hutch_pp(&op, 2, GAUSS, 0), Err(Error::BudgetTooSmall { .. })));
    assert!(matches!(
        na_hutch_pp(&op, 2, Split::default(), GAUSS, 0),
        Err(Error::BudgetTooSmall { .. })
    ));
}

#[test]
fn same_seed_same_estimate() {
    let op = DiagonalOperator::inverse_square_spectrum(500);
    for alg in Algorithm::ALL {
        let a = alg.estimate(&op, 30, GAUSS, 17).unwrap();
        let b = alg.estimate(&op, 30, GAUSS, 17).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a, b);
    }
}

/// Submitted queries depend only on the seed when the algorithm is
/// non-adaptive, so two different matrices must see identical query blocks.
#[test]
fn non_adaptivity_audit() {
    let mut r = rng(44);
    let n = 60;
    let a1 = low_rank_psd(&mut r, n, 10);
    let a2 = symmetrize(gaussian_matrix(&mut r, n, n));
    for alg in [Algorithm::Hutchinson, Algorithm::NaHutchPp] {
        let o1 = RecordingOperator::new(a1.clone());
        let o2 = RecordingOperator::new(a2.clone());
        alg.estimate(&o1, 24, GAUSS, 9).unwrap();
        alg.estimate(&o2, 24, GAUSS, 9).unwrap();
        let (r1, r2) = (o1.rounds(), o2.rounds());
        assert_eq!(r1.len(), 1, "{alg} used {} rounds", r1.len());
        assert_eq!(r1[0].responses_before, 0);
        assert_eq!(r1[0].queries.ncols(), 24);
        assert_eq!(r1[0].queries, r2[0].queries, "{alg} queries depend on A");
    }

    let o1 = RecordingOperator::new(a1);
    let o2 = RecordingOperator::new(a2);
    hutch_pp(&o1, 24, GAUSS, 9).unwrap();
    hutch_pp(&o2, 24, GAUSS, 9).unwrap();
    let (r1, r2) = (o1.rounds(), o2.rounds());
    assert_eq!(r1.len(), 2);
    assert_eq!(r1[0].queries, r2[0].queries);
    assert_ne!(r1[1].queries, r2[1].queries, "round two should adapt to A");
    assert_eq!(r1[1].responses_before, 8);
    assert_eq!(o1.total_queries(), 24);
}

#[test]
fn moments_examples() {
    let id = ScaledIdentity::new(20, 1.0);
    let m = estimate_eigenvalue_moments(&id, 4, 3, Algorithm::Hutchinson, RADE, 0).unwrap();
    assert!(m.iter().all(|&x| (x - 1.0).abs() < 1e-15), "{m:?}");

    let d = DiagonalOperator::new(vec![1.0, 2.0, 3.0]);
    let exact = exact_eigenvalue_moments(&d, 2).unwrap();
    assert!((exact[0] - 2.0).abs() < 1e-14);
    assert!((exact[1] - 14.0 / 3.0).abs() < 1e-14);
    let est = estimate_eigenvalue_moments(&d, 2, 5, Algorithm::Hutchinson, RADE, 3).unwrap();
    assert!((est[0] - 2.0).abs() < 1e-14);
    assert!((est[1] - 14.0 / 3.0).abs() < 1e-14);
}

#[test]
fn moments_track_dense_reference() {
    let mut r = rng(12);
    let eigs: Vec<f64> = (0..80).map(|i| 1.0 / (1.0 + i as f64)).collect();
    let k = dense_operator(with_spectrum(&mut r, &eigs)).unwrap().with_psd_claim(PsdClaim::Psd);
    let est = estimate_eigenvalue_moments(&k, 3, 60, Algorithm::NaHutchPp, GAUSS, 1).unwrap();
    for (p, e) in est.iter().enumerate() {
        let want = eigs.iter().map(|x| x.powi(p as i32 + 1)).sum::<f64>() / 80.0;
        assert!((e - want).abs() <= 0.05 * want, "p={} {e} vs {want}", p + 1);
    }
}

#[test]
fn query_budget_examples() {
    let b = query_budget_for(0.1, (-4f64).exp()).unwrap();
    assert_eq!((b.k, b.l, b.m), (20, 20, 4 * 24));
    let b = query_budget_for(1.0, (-1f64).exp()).unwrap();
    assert_eq!((b.k, b.l), (1, 1));
    assert!(query_budget_for(0.1, 0.5).is_err());
    assert!(query_budget_for(0.0, 0.1).is_err());
}

#[test]
fn split_is_configurable() {
    let op = DiagonalOperator::inverse_square_spectrum(200);
    let split = Split::new(0.2, 0.5, 0.3).unwrap();
    let counter = QueryCounter::new(&op);
    let est = na_hutch_pp(&counter, 50, split, GAUSS, 0).unwrap();
    assert_eq!(counter.columns(), 50);
    assert!((est.value - op.trace()).abs() < 0.05 * op.trace());
}

#[test]
fn rademacher_na_hutch_pp_runs() {
    let op = DiagonalOperator::inverse_square_spectrum(200);
    let est = na_hutch_pp(&op, 40, Split::default(), RADE, 2).unwrap();
    assert_eq!(est.distribution, RADE);
    assert!((est.value - op.trace()).abs() < 0.05 * op.trace());
}
