//! Estimator sweeps over manifold suites, with mean percentage error and
//! error-rate metrics.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::{corrected_estimate, integer_mode, CalibrationModel};
use crate::error::{Error, Result};
use crate::estimators::{estimate, Method, Pooling};
use crate::geometry::{Boundary, PointCloud};
use crate::io::read_cloud_csv;
use crate::synthdata::{derive_seed, generate, ManifoldSpec};

fn check_shape(true_dims: &[f64], estimates: &[Vec<f64>]) -> Result<usize> {
    if true_dims.len() != estimates.len() {
        return Err(Error::arg(format!(
            "{} true dimensions but {} estimate rows",
            true_dims.len(),
            estimates.len()
        )));
    }
    if true_dims.is_empty() {
        return Err(Error::arg("no manifolds"));
    }
    let n = estimates[0].len();
    if n == 0 || estimates.iter().any(|row| row.len() != n) {
        return Err(Error::arg("estimate rows must be non-empty and of equal length"));
    }
    if let Some(d) = true_dims.iter().find(|d| !(**d > 0.0)) {
        return Err(Error::arg(format!("true dimension {d} must be positive")));
    }
    Ok(n)
}

/// Mean percentage error over an `M x N` table of estimates
/// (`estimates[j][i]` is realization `i` of manifold `j`).
pub fn mpe(true_dims: &[f64], estimates: &[Vec<f64>]) -> Result<f64> {
    let n = check_shape(true_dims, estimates)?;
    let total: f64 = true_dims
        .iter()
        .zip(estimates)
        .map(|(&dim, row)| row.iter().map(|d| (dim - d).abs() / dim).sum::<f64>())
        .sum();
    Ok(100.0 * total / (true_dims.len() * n) as f64)
}

/// Fraction of estimates whose integer mode misses the true dimension.
pub fn error_rate(true_dims: &[f64], estimates: &[Vec<f64>]) -> Result<f64> {
    let n = check_shape(true_dims, estimates)?;
    let misses = true_dims
        .iter()
        .zip(estimates)
        .map(|(&dim, row)| row.iter().filter(|&&d| integer_mode(d) as f64 != dim).count())
        .sum::<usize>();
    Ok(misses as f64 / (true_dims.len() * n) as f64)
}

/// Where a suite entry's point clouds come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Source {
    /// Generated; realization `r` is reseeded from `(run seed, spec.seed, r)`.
    Generated { spec: ManifoldSpec },
    /// One CSV file per realization.
    Files {
        files: Vec<PathBuf>,
        true_dim: usize,
        #[serde(default = "hard")]
        boundary: Boundary,
    },
}

fn hard() -> Boundary {
    Boundary::Hard
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteEntry {
    pub name: String,
    #[serde(flatten)]
    pub source: Source,
}

impl SuiteEntry {
    pub fn true_dim(&self) -> usize {
        match &self.source {
            Source::Generated { spec } => spec.intrinsic_dim,
            Source::Files { true_dim, .. } => *true_dim,
        }
    }

    fn realizations(&self, requested: usize) -> usize {
        match &self.source {
            Source::Generated { .. } => requested,
            Source::Files { files, .. } => files.len(),
        }
    }

    fn load(&self, realization: usize, run_seed: u64, base: &Path) -> Result<PointCloud> {
        match &self.source {
            Source::Generated { spec } => {
                let seed = derive_seed(run_seed, &[spec.seed, realization as u64]);
                generate(&ManifoldSpec { seed, ..spec.clone() })
            }
            Source::Files { files, boundary, .. } => {
                let p = &files[realization];
                let p = if p.is_relative() { base.join(p) } else { p.clone() };
                read_cloud_csv(&p, *boundary)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Suite {
    pub manifolds: Vec<SuiteEntry>,
}

impl Suite {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Parse { path: path.to_owned(), message: e.to_string() })
    }
}

/// One estimator as run by the benchmark.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig {
    pub method: Method,
    /// FSA order `k`, or the Levina-Bickel `K` for `Ml`.
    pub k: usize,
    pub pooling: Pooling,
    pub model: Option<CalibrationModel>,
}

impl EstimatorConfig {
    pub fn new(method: Method, k: usize) -> Self {
        Self { method, k, pooling: Pooling::Mean, model: None }
    }

    pub fn cmfsa(model: CalibrationModel) -> Self {
        Self { method: Method::Cmfsa, k: model.k, pooling: Pooling::Mean, model: Some(model) }
    }

    fn run(&self, cloud: &PointCloud) -> Result<f64> {
        match (self.method, &self.model) {
            (Method::Cmfsa, Some(model)) => Ok(corrected_estimate(cloud, model)?.value),
            (Method::Cmfsa, None) => Err(Error::arg("cmfsa requires a calibration model")),
            (m, _) => Ok(estimate(cloud, self.k, m, self.pooling)?.value),
        }
    }
}

/// One (manifold, realization, estimator) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub manifold: String,
    pub true_dim: usize,
    pub realization: usize,
    pub estimator: Method,
    pub estimate: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifoldSummary {
    pub manifold: String,
    pub true_dim: usize,
    pub estimator: Method,
    pub mean_estimate: Option<f64>,
    pub mpe: Option<f64>,
    pub error_rate: Option<f64>,
    pub n_ok: usize,
    pub n_failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorMetrics {
    pub estimator: Method,
    pub mpe: Option<f64>,
    pub error_rate: Option<f64>,
    pub n_ok: usize,
    pub n_failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub per_manifold: Vec<ManifoldSummary>,
    pub per_estimator: Vec<EstimatorMetrics>,
}

/// Raw cells plus the aggregates computed from them.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkResult {
    pub records: Vec<CellRecord>,
    pub aggregates: Aggregates,
}

fn metric_terms(records: &[&CellRecord]) -> (usize, usize, f64, usize) {
    let mut ok = 0;
    let mut failed = 0;
    let mut pct = 0.0;
    let mut misses = 0;
    for r in records {
        match r.estimate {
            Some(d) => {
                let dim = r.true_dim as f64;
                ok += 1;
                pct += (dim - d).abs() / dim;
                if integer_mode(d) != r.true_dim as u64 {
                    misses += 1;
                }
            }
            None => failed += 1,
        }
    }
    (ok, failed, pct, misses)
}

/// Aggregates from raw records; failed cells are excluded and counted.
///
/// Manifold and estimator order follow first appearance in `records`.
pub fn aggregate(records: &[CellRecord]) -> Aggregates {
    let mut manifold_order: Vec<(String, usize)> = Vec::new();
    let mut estimator_order: Vec<Method> = Vec::new();
    for r in records {
        if !manifold_order.iter().any(|(m, _)| *m == r.manifold) {
            manifold_order.push((r.manifold.clone(), r.true_dim));
        }
        if !estimator_order.contains(&r.estimator) {
            estimator_order.push(r.estimator);
        }
    }
    let mut per_manifold = Vec::new();
    for (name, dim) in &manifold_order {
        for &est in &estimator_order {
            let cells: Vec<&CellRecord> =
                records.iter().filter(|r| r.manifold == *name && r.estimator == est).collect();
            let (ok, failed, pct, misses) = metric_terms(&cells);
            let sum: f64 = cells.iter().filter_map(|r| r.estimate).sum();
            per_manifold.push(ManifoldSummary {
                manifold: name.clone(),
                true_dim: *dim,
                estimator: est,
                mean_estimate: (ok > 0).then(|| sum / ok as f64),
                mpe: (ok > 0).then(|| 100.0 * pct / ok as f64),
                error_rate: (ok > 0).then(|| misses as f64 / ok as f64),
                n_ok: ok,
                n_failed: failed,
            });
        }
    }
    let per_estimator = estimator_order
        .iter()
        .map(|&est| {
            let cells: Vec<&CellRecord> = records.iter().filter(|r| r.estimator == est).collect();
            let (ok, failed, pct, misses) = metric_terms(&cells);
            EstimatorMetrics {
                estimator: est,
                mpe: (ok > 0).then(|| 100.0 * pct / ok as f64),
                error_rate: (ok > 0).then(|| misses as f64 / ok as f64),
                n_ok: ok,
                n_failed: failed,
            }
        })
        .collect();
    Aggregates { per_manifold, per_estimator }
}

/// Runs every estimator on every realization of every suite entry.
///
/// `base` resolves relative CSV paths. Cells run in parallel; records come
/// back in (manifold, realization, estimator) order regardless.
pub fn run_suite(
    suite: &Suite,
    estimators: &[EstimatorConfig],
    realizations: usize,
    seed: u64,
    base: &Path,
) -> Result<BenchmarkResult> {
    if estimators.is_empty() {
        return Err(Error::arg("no estimators configured"));
    }
    let tasks: Vec<(usize, usize)> = suite
        .manifolds
        .iter()
        .enumerate()
        .flat_map(|(j, m)| (0..m.realizations(realizations)).map(move |r| (j, r)))
        .collect();
    let records: Vec<CellRecord> = tasks
        .into_par_iter()
        .flat_map_iter(|(j, r)| {
            let entry = &suite.manifolds[j];
            let cloud = entry.load(r, seed, base);
            estimators
                .iter()
                .map(|est| {
                    let outcome = cloud.as_ref().map_err(|e| e.to_string()).and_then(|c| est.run(c).map_err(|e| e.to_string()));
                    CellRecord {
                        manifold: entry.name.clone(),
                        true_dim: entry.true_dim(),
                        realization: r,
                        estimator: est.method,
                        estimate: outcome.as_ref().ok().copied(),
                        error: outcome.err(),
                    }
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let aggregates = aggregate(&records);
    Ok(BenchmarkResult { records, aggregates })
}

#[derive(Debug, Serialize, Deserialize)]
struct RawRow {
    manifold: String,
    true_dim: usize,
    realization: usize,
    estimator: Method,
    estimate: Option<f64>,
    error: Option<String>,
}

pub fn write_raw_csv(path: &Path, records: &[CellRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(RawRow {
            manifold: r.manifold.clone(),
            true_dim: r.true_dim,
            realization: r.realization,
            estimator: r.estimator,
            estimate: r.estimate,
            error: r.error.clone(),
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_raw_csv(path: &Path) -> Result<Vec<CellRecord>> {
    let mut rd = csv::Reader::from_path(path)?;
    rd.deserialize::<RawRow>()
        .map(|row| {
            let r = row?;
            Ok(CellRecord {
                manifold: r.manifold,
                true_dim: r.true_dim,
                realization: r.realization,
                estimator: r.estimator,
                estimate: r.estimate,
                error: r.error,
            })
        })
        .collect()
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Table with one row per manifold and one mean-estimate column per
/// estimator, closed by an MPE row.
pub fn write_table_csv(path: &Path, agg: &Aggregates) -> Result<()> {
    let estimators: Vec<Method> = agg.per_estimator.iter().map(|e| e.estimator).collect();
    let mut rows: BTreeMap<usize, (String, usize, Vec<String>)> = BTreeMap::new();
    let mut order: Vec<String> = Vec::new();
    for s in &agg.per_manifold {
        if !order.contains(&s.manifold) {
            order.push(s.manifold.clone());
        }
        let idx = order.iter().position(|m| *m == s.manifold).expect("inserted");
        let entry = rows
            .entry(idx)
            .or_insert_with(|| (s.manifold.clone(), s.true_dim, vec![String::new(); estimators.len()]));
        let col = estimators.iter().position(|e| *e == s.estimator).expect("known estimator");
        entry.2[col] = fmt_opt(s.mean_estimate);
    }
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["dataset".to_string(), "d".to_string()];
    header.extend(estimators.iter().map(|e| e.to_string()));
    w.write_record(&header)?;
    for (_, (name, dim, cols)) in rows {
        let mut rec = vec![name, dim.to_string()];
        rec.extend(cols);
        w.write_record(&rec)?;
    }
    let mut mpe_row = vec!["MPE".to_string(), String::new()];
    mpe_row.extend(agg.per_estimator.iter().map(|e| fmt_opt(e.mpe)));
    w.write_record(&mpe_row)?;
    w.flush()?;
    Ok(())
}

/// Writes `raw.csv`, `table.csv` and `metrics.json` into `dir`.
pub fn write_outputs(dir: &Path, result: &BenchmarkResult) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_raw_csv(&dir.join("raw.csv"), &result.records)?;
    write_table_csv(&dir.join("table.csv"), &result.aggregates)?;
    fs::write(dir.join("metrics.json"), serde_json::to_string_pretty(&result.aggregates)?)?;
    Ok(())
}
