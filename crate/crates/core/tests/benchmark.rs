mod common;

use std::path::Path;

use mfsa::benchmark::*;
use mfsa::calibration::{calibrate, CalibrationConfig, FitTarget, OrderChoice, Regression};
use mfsa::estimators::Method;
use mfsa::io::write_cloud_csv;
use mfsa::synthdata::{generate, Family, ManifoldSpec};
use mfsa::Boundary;
use proptest::prelude::*;
use rand::seq::SliceRandom;

fn generated(name: &str, spec: ManifoldSpec) -> SuiteEntry {
    SuiteEntry { name: name.into(), source: Source::Generated { spec } }
}

#[test]
fn suite_json_forms() {
    let text = r#"{"manifolds": [
        {"name": "cube", "spec": {"family": "hypercube", "intrinsic_dim": 3, "ambient_dim": 3, "n": 100, "seed": 1}},
        {"name": "ext", "files": ["a.csv", "b.csv"], "true_dim": 2}
    ]}"#;
    let suite: Suite = serde_json::from_str(text).unwrap();
    assert_eq!(suite.manifolds[0].true_dim(), 3);
    assert!(matches!(&suite.manifolds[1].source, Source::Files { files, boundary: Boundary::Hard, .. } if files.len() == 2));
}

#[test]
fn run_records_failures_and_recomputes_from_disk() {
    let dir = tempfile::tempdir().unwrap();
    let cloud = generate(&ManifoldSpec::new(Family::SwissRoll, 2, 400, 5)).unwrap();
    write_cloud_csv(&dir.path().join("roll0.csv"), &cloud).unwrap();
    let suite = Suite {
        manifolds: vec![
            generated("cube4", ManifoldSpec::hypercube(4, 400, 1, Boundary::Hard)),
            generated("sphere2", ManifoldSpec::new(Family::Hypersphere, 2, 400, 2)),
            SuiteEntry {
                name: "roll".into(),
                source: Source::Files {
                    files: vec!["roll0.csv".into(), "missing.csv".into()],
                    true_dim: 2,
                    boundary: Boundary::Hard,
                },
            },
        ],
    };
    let estimators = [EstimatorConfig::new(Method::Mfsa, 3), EstimatorConfig::new(Method::Ml, 10)];
    let result = run_suite(&suite, &estimators, 3, 9, dir.path()).unwrap();
    // 3 + 3 generated realizations, 2 files, 2 estimators each
    assert_eq!(result.records.len(), 16);
    let failed: Vec<&CellRecord> = result.records.iter().filter(|r| r.estimate.is_none()).collect();
    assert_eq!(failed.len(), 2);
    assert!(failed.iter().all(|r| r.manifold == "roll" && r.realization == 1 && r.error.is_some()));
    let roll = result.aggregates.per_manifold.iter().find(|s| s.manifold == "roll").unwrap();
    assert_eq!((roll.n_ok, roll.n_failed), (1, 1));

    // deterministic
    assert_eq!(run_suite(&suite, &estimators, 3, 9, dir.path()).unwrap(), result);

    let out = dir.path().join("out");
    write_outputs(&out, &result).unwrap();
    let raw = read_raw_csv(&out.join("raw.csv")).unwrap();
    assert_eq!(raw, result.records);
    assert_eq!(aggregate(&raw), result.aggregates);
    let stored: Aggregates = serde_json::from_str(&std::fs::read_to_string(out.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(stored, result.aggregates);
    let table = std::fs::read_to_string(out.join("table.csv")).unwrap();
    assert!(table.starts_with("dataset,d,mfsa,ml\n"));
    assert!(table.lines().last().unwrap().starts_with("MPE,"));
}

#[test]
fn single_cell_suite() {
    let suite = Suite { manifolds: vec![generated("c", ManifoldSpec::hypercube(2, 200, 3, Boundary::PeriodicUnit))] };
    let result = run_suite(&suite, &[EstimatorConfig::new(Method::Mfsa, 2)], 1, 0, Path::new(".")).unwrap();
    let rec = &result.records[0];
    let d = rec.estimate.unwrap();
    let s = &result.aggregates.per_manifold[0];
    assert_eq!(s.mean_estimate, Some(d));
    assert_eq!(s.mpe, Some(100.0 * (2.0 - d).abs() / 2.0));
    assert_eq!(result.aggregates.per_estimator[0].mpe, s.mpe);
}

#[test]
fn correction_lowers_error_rate_where_calibrated() {
    let cfg = CalibrationConfig {
        n: 1000,
        k: 5,
        boundary: Boundary::Hard,
        dims: (2..=30).collect(),
        realizations: 4,
        seed: 2,
        order: OrderChoice::Auto,
        target: FitTarget::Means,
        regression: Regression::Ols,
    };
    let model = calibrate(&cfg).unwrap();
    let suite = Suite {
        manifolds: [10, 17, 24]
            .iter()
            .map(|&d| generated(&format!("cube{d}"), ManifoldSpec::hypercube(d, 1000, d as u64, Boundary::Hard)))
            .collect(),
    };
    let est = [EstimatorConfig::new(Method::Mfsa, 5), EstimatorConfig::cmfsa(model)];
    let result = run_suite(&suite, &est, 5, 77, Path::new(".")).unwrap();
    let rate = |m: Method| result.aggregates.per_estimator.iter().find(|e| e.estimator == m).unwrap().error_rate.unwrap();
    assert!(rate(Method::Cmfsa) <= rate(Method::Mfsa));
    assert_eq!(rate(Method::Mfsa), 1.0);
}

#[test]
fn cmfsa_without_model_fails_per_cell() {
    let suite = Suite { manifolds: vec![generated("c", ManifoldSpec::hypercube(2, 50, 3, Boundary::Hard))] };
    let est = EstimatorConfig { model: None, ..EstimatorConfig::new(Method::Cmfsa, 1) };
    let result = run_suite(&suite, &[est], 2, 0, Path::new(".")).unwrap();
    assert!(result.records.iter().all(|r| r.estimate.is_none()));
    assert_eq!(result.aggregates.per_estimator[0].mpe, None);
}

proptest! {
    #[test]
    fn mpe_invariant_to_order(
        rows in proptest::collection::vec(proptest::collection::vec(0.5..30.0f64, 4), 1..6),
        seed in any::<u64>(),
    ) {
        let dims: Vec<f64> = (0..rows.len()).map(|j| 1.0 + j as f64 * 3.0).collect();
        let base = mpe(&dims, &rows).unwrap();
        let base_rate = error_rate(&dims, &rows).unwrap();
        let mut rng = common::rng(seed);
        let mut order: Vec<usize> = (0..rows.len()).collect();
        order.shuffle(&mut rng);
        let dims2: Vec<f64> = order.iter().map(|&j| dims[j]).collect();
        let rows2: Vec<Vec<f64>> = order
            .iter()
            .map(|&j| { let mut r = rows[j].clone(); r.reverse(); r })
            .collect();
        prop_assert!((mpe(&dims2, &rows2).unwrap() - base).abs() <= 1e-12 * base.max(1.0));
        prop_assert_eq!(error_rate(&dims2, &rows2).unwrap(), base_rate);
        prop_assert!(base >= 0.0 && (0.0..=1.0).contains(&base_rate));
    }
}
