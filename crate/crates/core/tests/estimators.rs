mod common;

use std::f64::consts::{E, LN_2};

use mfsa::estimators::*;
use mfsa::synthdata::sample_fsa_locals;
use mfsa::{Boundary, Error, PointCloud};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

fn set(values: &[f64]) -> LocalEstimateSet {
    LocalEstimateSet::from_values(1, values.iter().copied())
}

#[test]
fn fsa_local_examples() {
    assert_eq!(fsa_local(1.0, 2.0).unwrap(), LocalEstimate::Valid(1.0));
    let LocalEstimate::Valid(v) = fsa_local(1.0, 2f64.powf(0.2)).unwrap() else { panic!() };
    assert!((v - 5.0).abs() < 1e-12);
    assert_eq!(fsa_local(0.5, 0.5).unwrap(), LocalEstimate::Degenerate);
    assert_eq!(fsa_local(0.0, 0.5).unwrap(), LocalEstimate::ZeroDistance);
    assert!(fsa_local(0.6, 0.5).is_err());
}

#[test]
fn local_estimates_need_2k_plus_1_points() {
    let c = PointCloud::new((0..10).map(|i| i as f64 * 0.07).collect(), 1, Boundary::Hard).unwrap();
    assert!(matches!(local_estimates(&c, 5), Err(Error::InsufficientSample { .. })));
    assert_eq!(local_estimates(&c, 4).unwrap().len(), 10);
}

#[test]
fn duplicates_counted_as_invalid() {
    let c = PointCloud::new(vec![0.1, 0.1, 0.3, 0.45, 0.8, 0.9], 1, Boundary::Hard).unwrap();
    let locals = local_estimates(&c, 1).unwrap();
    assert_eq!(locals.n_invalid(), 2);
    let g = aggregate_median(&locals).unwrap();
    assert_eq!(g.n_invalid, 2);
    assert_eq!(g.n_local, 4);
}

#[test]
fn aggregation_examples() {
    assert_eq!(aggregate_median(&set(&[1.0, 2.0, 100.0])).unwrap().value, 2.0);
    assert_eq!(aggregate_median(&set(&[1.0, 3.0])).unwrap().value, 2.0);
    assert!((aggregate_mean(&set(&[1.0, 2.0, 100.0])).unwrap().value - 103.0 / 3.0).abs() < 1e-12);
    assert_eq!(aggregate_mode(&set(&[2.4, 2.6, 2.2])).unwrap().value, 2.0);
    assert_eq!(aggregate_mode(&set(&[1.6, 2.4])).unwrap().value, 2.0);
    // tie between 1 and 3 goes to the smaller
    assert_eq!(aggregate_mode(&set(&[1.1, 2.9])).unwrap().value, 1.0);
    let empty = LocalEstimateSet { k: 1, values: vec![LocalEstimate::Degenerate] };
    assert!(matches!(aggregate_median(&empty), Err(Error::NoValidEstimates { .. })));
    assert!(aggregate_mean(&empty).is_err());
    assert!(aggregate_mode(&empty).is_err());
}

#[test]
fn levina_bickel_examples() {
    let LocalEstimate::Valid(v) = levina_bickel(&[0.5]).unwrap() else { panic!() };
    assert!((v - 1.0 / LN_2).abs() < 1e-15);
    let LocalEstimate::Valid(v) = levina_bickel(&[1.0 / E, 1.0 / E]).unwrap() else { panic!() };
    assert!((v - 1.0).abs() < 1e-15);
    assert_eq!(levina_bickel(&[1.0, 1.0]).unwrap(), LocalEstimate::Degenerate);
}

#[test]
fn levina_bickel_pooled_on_periodic_cube() {
    let cloud = mfsa::synthdata::generate(&mfsa::synthdata::ManifoldSpec::hypercube(3, 10_000, 8, Boundary::PeriodicUnit)).unwrap();
    let mean = global_levina_bickel(&cloud, 11, Pooling::Mean).unwrap().value;
    let med = global_levina_bickel(&cloud, 11, Pooling::Median).unwrap().value;
    // -sum ln r_j ~ Gamma(K-1, D), so E[(K-1)/S] = D (K-1)/(K-2)
    assert!((mean - 3.0 * 10.0 / 9.0).abs() < 0.05, "{mean}");
    assert!((med - 3.0).abs() < 0.35, "{med}");
}

#[test]
fn fsa_ml_k1_closed_form() {
    let d = 3.7;
    let v = fsa_ml_solve(&[d; 25], 1).unwrap();
    assert!((v - d / LN_2).abs() < 1e-9 * v);
}

#[test]
fn fsa_ml_k1_equals_levina_bickel() {
    let mut rng = common::rng(17);
    for _ in 0..1000 {
        let n = rng.random_range(1..200);
        let locals: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..40.0)).collect();
        let ratios: Vec<f64> = locals.iter().map(|d| 2f64.powf(-1.0 / d)).collect();
        let LocalEstimate::Valid(lb) = levina_bickel(&ratios).unwrap() else { panic!() };
        let ml = fsa_ml_solve(&locals, 1).unwrap();
        assert!((ml - lb).abs() < 1e-9 * lb.max(1.0), "{ml} vs {lb}");
    }
}

#[test]
fn fsa_ml_root_is_likelihood_maximum() {
    for (seed, &(k, dim)) in [(1usize, 2.0), (3, 4.0), (11, 5.0), (20, 9.0)].iter().enumerate() {
        let locals = sample_fsa_locals(dim, k, 2000, seed as u64).unwrap().valid();
        let root = fsa_ml_solve(&locals, k).unwrap();
        let l0 = log_likelihood(&locals, k, root);
        let h = 1e-3 * root;
        for step in 1..=5 {
            let s = step as f64 * h;
            assert!(log_likelihood(&locals, k, root - s) < l0);
            assert!(log_likelihood(&locals, k, root + s) < l0);
        }
        assert!(score(&locals, k, root).abs() < 1e-6 * locals.len() as f64);
    }
}

#[test]
fn fsa_ml_recovers_dimension_from_analytic_samples() {
    let estimates: Vec<f64> = (0..20)
        .map(|seed| fsa_ml_solve(&sample_fsa_locals(5.0, 11, 10_000, 500 + seed).unwrap().valid(), 11).unwrap())
        .collect();
    for e in &estimates {
        assert!((e - 5.0).abs() < 0.1, "{e}");
    }
}

#[test]
fn scale_invariance() {
    let mut rng = common::rng(3);
    let cloud = common::random_cloud(&mut rng, 1500, 4, Boundary::Hard);
    for k in [1, 5] {
        let base = local_estimates(&cloud, k).unwrap();
        for c in [0.25, 2.0, 1024.0] {
            assert_eq!(local_estimates(&cloud.scaled(c).unwrap(), k).unwrap(), base);
        }
        for c in [10.0, 0.3, 7.77, 1e5] {
            let s = local_estimates(&cloud.scaled(c).unwrap(), k).unwrap();
            for (a, b) in base.values.iter().zip(&s.values) {
                // compare ln(R_2k/R_k), which carries the rounding linearly
                let (a, b) = (a.value().unwrap(), b.value().unwrap());
                assert!((LN_2 / a - LN_2 / b).abs() <= 1e-13, "c={c}: {a} vs {b}");
            }
            let (m0, m1) = (aggregate_median(&base).unwrap().value, aggregate_median(&s).unwrap().value);
            assert!((m0 - m1).abs() <= 1e-12 * m0);
        }
    }
}

#[test]
fn permutation_invariance() {
    let mut rng = common::rng(4);
    let cloud = common::random_cloud(&mut rng, 800, 3, Boundary::PeriodicUnit);
    let mut order: Vec<usize> = (0..cloud.len()).collect();
    order.shuffle(&mut rng);
    let rows: Vec<Vec<f64>> = order.iter().map(|&i| cloud.point(i).to_vec()).collect();
    let shuffled = PointCloud::from_rows(&rows, Boundary::PeriodicUnit).unwrap();
    for method in [Method::Mfsa, Method::Mean, Method::Mode, Method::Ml, Method::Fsaml] {
        let a = estimate(&cloud, 3, method, Pooling::Mean).unwrap().value;
        let b = estimate(&shuffled, 3, method, Pooling::Mean).unwrap().value;
        // sums run in a different order for the mean-type aggregates
        assert!((a - b).abs() <= 1e-12 * a, "{method}: {a} vs {b}");
    }
    let a = estimate(&cloud, 3, Method::Mfsa, Pooling::Mean).unwrap().value;
    let b = estimate(&shuffled, 3, Method::Mfsa, Pooling::Mean).unwrap().value;
    assert_eq!(a, b);
}

#[test]
fn method_names_round_trip() {
    for m in Method::ALL {
        assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
    }
    assert!("danco".parse::<Method>().is_err());
}

proptest! {
    #[test]
    fn median_robust_to_minority_outliers(
        mut values in proptest::collection::vec(0.1..50.0f64, 1..60),
        outliers in proptest::collection::vec(1e3..1e9f64, 0..60),
        seed in any::<u64>(),
    ) {
        let base = aggregate_median(&set(&values)).unwrap().value;
        let n = values.len();
        let corrupt = outliers.len().min((n - 1) / 2);
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut common::rng(seed));
        // replacing values with larger ones moves the median by at most
        // one order statistic; appending them pairs with low values
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        for (&i, &o) in idx.iter().zip(&outliers[..corrupt]) {
            values[i] = o;
        }
        let after = aggregate_median(&set(&values)).unwrap().value;
        prop_assert!(after >= sorted[0] && after <= sorted[n - 1]);
        if corrupt == 0 {
            prop_assert_eq!(after, base);
        }
    }

    #[test]
    fn median_unchanged_by_balanced_outliers(
        values in proptest::collection::vec(0.1..50.0f64, 1..60),
        m in 0usize..20,
    ) {
        // m huge and m tiny outliers leave the median where it was
        let base = aggregate_median(&set(&values)).unwrap().value;
        let mut v = values.clone();
        v.extend(std::iter::repeat_n(1e12, m));
        v.extend(std::iter::repeat_n(1e-9, m));
        prop_assert_eq!(aggregate_median(&set(&v)).unwrap().value, base);
    }
}
