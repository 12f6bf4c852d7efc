use std::fs;
use std::path::Path;

use assert_cmd::Command;
use serde_json::Value;
use tempfile::TempDir;

fn mfsa(dir: &Path) -> Command {
    let mut cmd = Command::cargo_bin("mfsa").unwrap();
    cmd.current_dir(dir).env_remove("MFSA_THREADS");
    cmd
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

/// Two incommensurate sinusoids per channel plus a little deterministic jitter.
fn write_series(path: &Path, channels: usize, samples: usize, rate: f64) {
    let mut text = String::new();
    for i in 0..samples {
        let t = i as f64 / rate;
        let row: Vec<String> = (0..channels)
            .map(|c| {
                let v = (2.0 * std::f64::consts::PI * (3.0 + c as f64) * t).sin()
                    + 0.7 * (2.0 * std::f64::consts::PI * 7.3 * t + c as f64).sin()
                    + 1e-3 * ((i * 7919 + c * 104729) % 1000) as f64 / 1000.0;
                v.to_string()
            })
            .collect();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    fs::write(path, text).unwrap();
}

#[test]
fn pdf_grid_has_median_at_true_dimension() {
    let dir = TempDir::new().unwrap();
    mfsa(dir.path())
        .args(["pdf", "--k", "1", "--d-intrinsic", "2", "--grid", "0.1:10:100", "--out", "pdf.csv"])
        .assert()
        .success();
    let rows = csv_rows(&dir.path().join("pdf.csv"));
    assert_eq!(rows[0], ["x", "pdf", "cdf"]);
    assert_eq!(rows.len(), 101);
    let at_two = rows[1..].iter().find(|r| (r[0].parse::<f64>().unwrap() - 2.0).abs() < 1e-9).unwrap();
    assert!((at_two[2].parse::<f64>().unwrap() - 0.5).abs() < 1e-12);
    assert_eq!(json(&dir.path().join("pdf.csv.manifest.json"))["subcommand"], "pdf");
}

#[test]
fn pdf_median_sampling_needs_n() {
    let dir = TempDir::new().unwrap();
    mfsa(dir.path())
        .args(["pdf", "--k", "1", "--d-intrinsic", "2", "--grid", "1:3:5", "--median-sampling"])
        .assert()
        .code(1);
    let out = mfsa(dir.path())
        .args(["pdf", "--k", "1", "--d-intrinsic", "2", "--grid", "1:3:5", "--median-sampling", "--n", "11"])
        .assert()
        .success();
    let text = String::from_utf8(out.get_output().stdout.clone()).unwrap();
    assert_eq!(text.lines().count(), 6);
}

#[test]
fn helix_estimate_rounds_to_one() {
    let dir = TempDir::new().unwrap();
    mfsa(dir.path())
        .args(["generate", "--family", "helix1d", "--d", "1", "--n", "2500", "--seed", "7", "--out", "h.csv"])
        .assert()
        .success();
    mfsa(dir.path()).args(["estimate", "--input", "h.csv", "--k", "5", "--out", "e.json"]).assert().success();
    let rec = json(&dir.path().join("e.json"));
    assert_eq!(rec["method"], "mfsa");
    assert_eq!(rec["n"], 2500);
    assert_eq!(rec["n_invalid"], 0);
    assert_eq!(rec["value"].as_f64().unwrap().round(), 1.0);
    let manifest = json(&dir.path().join("e.json.manifest.json"));
    assert_eq!(manifest["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn missing_input_is_a_data_error_without_outputs() {
    let dir = TempDir::new().unwrap();
    let out = mfsa(dir.path()).args(["estimate", "--input", "nope.csv", "--k", "5", "--out", "e.json"]).assert().code(2);
    let stderr = String::from_utf8(out.get_output().stderr.clone()).unwrap();
    let err: Value = serde_json::from_str(stderr.trim()).unwrap();
    assert_eq!(err["error"], "data");
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn unknown_flag_is_a_usage_error_with_suggestion() {
    let dir = TempDir::new().unwrap();
    let out = mfsa(dir.path()).args(["estimate", "--inptu", "x.csv"]).assert().code(1);
    assert!(String::from_utf8_lossy(&out.get_output().stderr).contains("--input"));
    mfsa(dir.path()).args(["estimate", "--input", "x.csv", "--k", "5", "--method", "nope"]).assert().code(1);
    mfsa(dir.path()).arg("--help").assert().success();
}

#[test]
fn generate_is_deterministic_and_manifest_records_seed() {
    let dir = TempDir::new().unwrap();
    for out in ["a.csv", "b.csv"] {
        mfsa(dir.path())
            .args(["generate", "--family", "hypercube", "--d", "3", "--n", "200", "--seed", "11", "--out", out])
            .assert()
            .success();
    }
    let (a, b) = (fs::read(dir.path().join("a.csv")).unwrap(), fs::read(dir.path().join("b.csv")).unwrap());
    assert_eq!(a, b);
    assert_eq!(csv_rows(&dir.path().join("a.csv")).len(), 200);
    let manifest = json(&dir.path().join("a.csv.manifest.json"));
    assert_eq!(manifest["seeds"][0], 11);
    assert_eq!(manifest["config"]["family"], "hypercube");
}

#[test]
fn calibrate_then_corrected_estimate() {
    let dir = TempDir::new().unwrap();
    mfsa(dir.path())
        .args([
            "calibrate", "--n", "300", "--k", "2", "--d", "2:8", "--realizations", "3", "--order", "1", "--seed", "4",
            "--out", "calib.json",
        ])
        .assert()
        .success();
    let model = json(&dir.path().join("calib.json"));
    assert_eq!(model["k"], 2);
    mfsa(dir.path())
        .args(["generate", "--family", "hypercube", "--d", "6", "--n", "300", "--seed", "1", "--out", "c.csv"])
        .assert()
        .success();
    mfsa(dir.path())
        .args(["estimate", "--input", "c.csv", "--correction", "calib.json", "--out", "raw.json"])
        .assert()
        .success();
    let rec = json(&dir.path().join("raw.json"));
    assert_eq!(rec["method"], "cmfsa");
    assert_eq!(rec["k"], 2);
    mfsa(dir.path())
        .args(["estimate", "--input", "c.csv", "--correction", "calib.json", "--k", "3"])
        .assert()
        .code(1);
    mfsa(dir.path()).args(["estimate", "--input", "c.csv", "--method", "cmfsa"]).assert().code(1);
}

fn write_suite(dir: &Path) {
    let suite = serde_json::json!({
        "manifolds": [
            { "name": "cube3", "spec": { "family": "hypercube", "intrinsic_dim": 3, "ambient_dim": 3, "n": 300, "seed": 1 } },
            { "name": "sphere2", "spec": { "family": "hypersphere", "intrinsic_dim": 2, "ambient_dim": 3, "n": 300, "seed": 2 } }
        ]
    });
    fs::write(dir.join("suite.json"), suite.to_string()).unwrap();
}

#[test]
fn benchmark_writes_tables_and_is_thread_count_independent() {
    let dir = TempDir::new().unwrap();
    write_suite(dir.path());
    for (threads, out) in [("1", "r1"), ("3", "r3")] {
        mfsa(dir.path())
            .env("MFSA_THREADS", threads)
            .args(["benchmark", "--suite", "suite.json", "--estimators", "mfsa,ml", "--realizations", "4", "--seed", "9"])
            .args(["--out", out])
            .assert()
            .success();
    }
    for file in ["raw.csv", "table.csv", "metrics.json"] {
        let a = fs::read(dir.path().join("r1").join(file)).unwrap();
        assert_eq!(a, fs::read(dir.path().join("r3").join(file)).unwrap(), "{file}");
    }
    assert_eq!(json(&dir.path().join("r3/manifest.json"))["threads"], 3);
    mfsa(dir.path())
        .args(["benchmark", "--suite", "suite.json", "--estimators", "cmfsa", "--out", "r4"])
        .assert()
        .code(1);
    assert!(!dir.path().join("r4").exists());
}

#[test]
fn embed_writes_one_cloud_per_channel_and_offset() {
    let dir = TempDir::new().unwrap();
    write_series(&dir.path().join("s.csv"), 2, 4000, 200.0);
    mfsa(dir.path())
        .args(["embed", "--input", "s.csv", "--rate", "200", "--band", "1:30", "--m", "3", "--stride", "4"])
        .args(["--out", "clouds"])
        .assert()
        .success();
    let manifest = json(&dir.path().join("clouds/manifest.json"));
    assert_eq!(manifest["resolved"]["tau"], 2);
    assert_eq!(manifest["resolved"]["stride"], 4);
    assert_eq!(manifest["resolved"]["samples"], 3200);
    let files = manifest["resolved"]["files"].as_array().unwrap();
    assert_eq!(files.len(), 8);
    let total: usize = files.iter().map(|f| csv_rows(&dir.path().join("clouds").join(f.as_str().unwrap())).len()).sum();
    assert_eq!(total, 2 * (3200 - 2 * 2));
    mfsa(dir.path())
        .args(["embed", "--input", "s.csv", "--rate", "200", "--m", "3", "--out", "clouds2"])
        .assert()
        .code(1);
}

#[test]
fn stsep_contours_are_ordered() {
    let dir = TempDir::new().unwrap();
    write_series(&dir.path().join("s.csv"), 2, 3000, 200.0);
    mfsa(dir.path())
        .args(["stsep", "--input", "s.csv", "--rate", "200", "--m", "3", "--tau", "5", "--dtmax", "30"])
        .args(["--percentiles", "1,25,50", "--out", "st.csv"])
        .assert()
        .success();
    let rows = csv_rows(&dir.path().join("st.csv"));
    assert_eq!(rows[0], ["dt", "p1", "p25", "p50"]);
    assert_eq!(rows.len(), 31);
    for r in &rows[1..] {
        let v: Vec<f64> = r[1..].iter().map(|x| x.parse().unwrap()).collect();
        assert!(v[0] <= v[1] && v[1] <= v[2]);
    }
    assert!(json(&dir.path().join("st.csv.manifest.json"))["resolved"]["suggested_stride"].as_u64().unwrap() >= 1);
}

#[test]
fn profile_at_unit_embedding_is_one() {
    let dir = TempDir::new().unwrap();
    write_series(&dir.path().join("s.csv"), 1, 3000, 200.0);
    mfsa(dir.path())
        .args(["profile", "--input", "s.csv", "--rate", "200", "--m", "1:2", "--k", "10:12", "--tau", "5"])
        .args(["--stride", "2", "--out", "p.csv"])
        .assert()
        .success();
    let rows = csv_rows(&dir.path().join("p.csv"));
    assert_eq!(rows[0], ["channel", "m", "estimate", "k10", "k11", "k12"]);
    assert_eq!(rows.len(), 3);
    assert!((rows[1][2].parse::<f64>().unwrap() - 1.0).abs() < 0.1);
}
