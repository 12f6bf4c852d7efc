//! Finite-sample and edge-effect correction of the median FSA estimate.
//!
//! The relative error `E = D / d` of the median estimate on uniformly
//! sampled hypercubes is modeled as `ln E = sum_i alpha_i d^i` (no
//! intercept). Inverting the model gives the corrected estimate
//! `C(d) = d · exp(sum_i alpha_i d^i)`.

use std::f64::consts::SQRT_2;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use crate::error::{Error, Result};
use crate::estimators::{aggregate_median, local_estimates, GlobalEstimate, Method};
use crate::geometry::{Boundary, PointCloud};
use crate::synthdata::{derive_seed, generate, ManifoldSpec};

pub const MODEL_SCHEMA_VERSION: u32 = 1;
const MAX_AUTO_ORDER: usize = 4;

/// Least-squares slope of `ln(D/d)` on `d` through the origin.
pub fn fit_alpha(pairs: &[(f64, f64)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::arg("fit_alpha needs at least one (D, d) pair"));
    }
    check_pairs(pairs)?;
    let (num, den) = pairs.iter().fold((0.0, 0.0), |(num, den), &(dim, d)| {
        (num + (dim / d).ln() * d, den + d * d)
    });
    Ok(num / den)
}

fn check_pairs(pairs: &[(f64, f64)]) -> Result<()> {
    match pairs.iter().find(|(dim, d)| !(*dim > 0.0 && *d > 0.0 && dim.is_finite() && d.is_finite())) {
        Some(p) => Err(Error::arg(format!("pair {p:?} must hold positive finite values"))),
        None => Ok(()),
    }
}

/// `sum_i coeffs[i-1] · d^i`.
pub fn log_error_polynomial(coeffs: &[f64], d: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| (acc + c) * d)
}

fn log_error_derivative(coeffs: &[f64], d: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .rev()
        .fold(0.0, |acc, (i, c)| acc * d + (i + 1) as f64 * c)
}

/// Column-scaled least squares of `y` on `x, x^2, ..., x^s` without intercept.
fn least_squares_polynomial(xs: &[f64], ys: &[f64], order: usize) -> Result<Vec<f64>> {
    let mut distinct: Vec<f64> = xs.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < order + 1 {
        return Err(Error::DegenerateDesign(format!(
            "order {order} needs at least {} distinct estimates, got {}",
            order + 1,
            distinct.len()
        )));
    }
    let scale = xs.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let a = DMatrix::from_fn(xs.len(), order, |i, j| (xs[i] / scale).powi(j as i32 + 1));
    let b = DVector::from_column_slice(ys);
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-13 * smax) {
        return Err(Error::DegenerateDesign(format!("design matrix is rank deficient (order {order})")));
    }
    let sol = svd.solve(&b, 0.0).map_err(|e| Error::DegenerateDesign(e.to_string()))?;
    Ok(sol.iter().enumerate().map(|(j, c)| c / scale.powi(j as i32 + 1)).collect())
}

/// Orthogonal-distance fit of the same polynomial: alternates per-point
/// abscissa corrections with ordinary least squares on the shifted points.
fn odr_polynomial(xs: &[f64], ys: &[f64], order: usize) -> Result<Vec<f64>> {
    let mut coeffs = least_squares_polynomial(xs, ys, order)?;
    let mut shifted = xs.to_vec();
    for _ in 0..200 {
        for (i, s) in shifted.iter_mut().enumerate() {
            // minimize (y - p(x + delta))^2 + delta^2 over delta with Newton steps
            let mut t = *s;
            for _ in 0..20 {
                let p = log_error_polynomial(&coeffs, t);
                let dp = log_error_derivative(&coeffs, t);
                let g = -(ys[i] - p) * dp + (t - xs[i]);
                let h = dp * dp + 1.0;
                let step = g / h;
                t -= step;
                if step.abs() < 1e-14 * (1.0 + t.abs()) {
                    break;
                }
            }
            *s = t;
        }
        let next = least_squares_polynomial(&shifted, ys, order)?;
        let change = next.iter().zip(&coeffs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        coeffs = next;
        if change < 1e-14 {
            break;
        }
    }
    Ok(coeffs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regression {
    #[default]
    Ols,
    Odr,
}

/// Mean, spread and shape of the `ln E` residuals after the fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualStats {
    pub mean: f64,
    pub sd: f64,
    pub mean_abs: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    /// Jarque-Bera statistic; compare against chi-square(2).
    pub jarque_bera: f64,
    pub count: usize,
}

impl ResidualStats {
    pub fn from_residuals(res: &[f64]) -> Self {
        let m = res.len() as f64;
        let mean = res.iter().sum::<f64>() / m;
        let moment = |p: i32| res.iter().map(|r| (r - mean).powi(p)).sum::<f64>() / m;
        let (m2, m3, m4) = (moment(2), moment(3), moment(4));
        let (skewness, excess_kurtosis) = if m2 > 0.0 {
            (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
        } else {
            (0.0, 0.0)
        };
        let sd = if res.len() > 1 { (m2 * m / (m - 1.0)).sqrt() } else { 0.0 };
        Self {
            mean,
            sd,
            mean_abs: res.iter().map(|r| r.abs()).sum::<f64>() / m,
            skewness,
            excess_kurtosis,
            jarque_bera: m / 6.0 * (skewness * skewness + excess_kurtosis * excess_kurtosis / 4.0),
            count: res.len(),
        }
    }
}

/// Per-dimension summary of a calibration sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub dim: f64,
    pub mean_estimate: f64,
    pub sd_estimate: f64,
    pub mean_ln_error: f64,
    pub mean_corrected: f64,
    pub sd_corrected: f64,
    /// Probability that the rounded corrected estimate equals `dim`,
    /// assuming normally distributed corrected estimates.
    pub predicted_hit_rate: f64,
}

/// How a model was produced, enough to regenerate it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub dims: Vec<usize>,
    pub realizations: usize,
    pub order_selection: String,
    pub regression: Regression,
}

/// Fitted log-relative-error polynomial with its diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationModel {
    pub schema_version: u32,
    pub n: usize,
    pub k: usize,
    pub boundary: Boundary,
    pub order: usize,
    /// `alpha_1 .. alpha_s`.
    pub coeffs: Vec<f64>,
    pub residual_mean: f64,
    pub residual_sd: f64,
    pub residuals: Option<ResidualStats>,
    /// Range of uncorrected estimates the model was fitted on.
    pub d_range: (f64, f64),
    pub grid: Vec<GridPoint>,
    pub provenance: Option<Provenance>,
}

impl CalibrationModel {
    /// `d · exp(sum alpha_i d^i)`; warns outside the calibrated range.
    pub fn correct(&self, d: f64) -> f64 {
        if !self.in_range(d) {
            log::warn!(
                "estimate {d} is outside the calibrated range [{}, {}]; extrapolating",
                self.d_range.0,
                self.d_range.1
            );
        }
        d * log_error_polynomial(&self.coeffs, d).exp()
    }

    pub fn in_range(&self, d: f64) -> bool {
        d >= self.d_range.0 && d <= self.d_range.1
    }

    /// Uncorrected estimate whose correction is `c`, by bisection over the
    /// calibrated range.
    pub fn invert(&self, c: f64) -> Option<f64> {
        let f = |d: f64| d * log_error_polynomial(&self.coeffs, d).exp() - c;
        let (mut lo, mut hi) = self.d_range;
        if f(lo) > 0.0 || f(hi) < 0.0 {
            return None;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 4.0 * f64::EPSILON * hi {
                break;
            }
        }
        Some(0.5 * (lo + hi))
    }

    fn check_monotone(coeffs: &[f64], (lo, hi): (f64, f64)) -> Result<()> {
        // C'(d) = exp(p(d)) (1 + d p'(d))
        let steps = 2000;
        for i in 0..=steps {
            let d = lo + (hi - lo) * i as f64 / steps as f64;
            if 1.0 + d * log_error_derivative(coeffs, d) <= 0.0 {
                return Err(Error::NonMonotoneModel { lo, hi });
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Fits `ln(D/d)` on `d, ..., d^order` by least squares.
///
/// `pairs` are `(D_true, d_est)`. The model is rejected if the resulting
/// correction is not strictly increasing over the fitted range.
pub fn fit_polynomial(pairs: &[(f64, f64)], order: usize) -> Result<CalibrationModel> {
    fit_polynomial_with(pairs, order, Regression::Ols)
}

pub fn fit_polynomial_with(pairs: &[(f64, f64)], order: usize, regression: Regression) -> Result<CalibrationModel> {
    if order == 0 {
        return Err(Error::arg("polynomial order must be at least 1"));
    }
    if pairs.is_empty() {
        return Err(Error::arg("calibration fit needs at least one pair"));
    }
    check_pairs(pairs)?;
    let xs: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let ys: Vec<f64> = pairs.iter().map(|&(dim, d)| (dim / d).ln()).collect();
    let coeffs = match regression {
        Regression::Ols => least_squares_polynomial(&xs, &ys, order)?,
        Regression::Odr => odr_polynomial(&xs, &ys, order)?,
    };
    let d_range = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    CalibrationModel::check_monotone(&coeffs, d_range)?;
    let residuals: Vec<f64> =
        xs.iter().zip(&ys).map(|(&x, &y)| y - log_error_polynomial(&coeffs, x)).collect();
    let stats = ResidualStats::from_residuals(&residuals);
    Ok(CalibrationModel {
        schema_version: MODEL_SCHEMA_VERSION,
        n: 0,
        k: 0,
        boundary: Boundary::Hard,
        order,
        coeffs,
        residual_mean: stats.mean,
        residual_sd: stats.sd,
        residuals: Some(stats),
        d_range,
        grid: Vec::new(),
        provenance: None,
    })
}

/// Corrected estimate of a single uncorrected value.
pub fn apply_correction(d_est: f64, model: &CalibrationModel) -> f64 {
    model.correct(d_est)
}

/// Nearest positive integer, rounding halves up.
pub fn integer_mode(corrected: f64) -> u64 {
    (corrected + 0.5).floor().max(1.0) as u64
}

/// cmFSA estimate of a cloud.
pub fn corrected_estimate(cloud: &PointCloud, model: &CalibrationModel) -> Result<GlobalEstimate> {
    if cloud.boundary() != model.boundary {
        log::warn!("cloud boundary {} differs from calibration boundary {}", cloud.boundary(), model.boundary);
    }
    if model.n != 0 && cloud.len() != model.n {
        log::warn!("cloud has {} points but the model was calibrated at n = {}", cloud.len(), model.n);
    }
    let median = aggregate_median(&local_estimates(cloud, model.k)?)?;
    Ok(GlobalEstimate { method: Method::Cmfsa, value: model.correct(median.value), ..median })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrderChoice {
    Auto,
    Fixed(usize),
}

impl FromStr for OrderChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(OrderChoice::Auto);
        }
        match s.parse::<usize>() {
            Ok(s) if s >= 1 => Ok(OrderChoice::Fixed(s)),
            _ => Err(Error::arg(format!("order must be `auto` or a positive integer, got `{s}`"))),
        }
    }
}

/// What the polynomial is fitted to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitTarget {
    /// Per-dimension means of `ln E` against mean estimates.
    #[default]
    Means,
    /// Every `(D, d)` realization pair.
    Pooled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConfig {
    pub n: usize,
    pub k: usize,
    pub boundary: Boundary,
    pub dims: Vec<usize>,
    pub realizations: usize,
    pub seed: u64,
    pub order: OrderChoice,
    #[serde(default)]
    pub target: FitTarget,
    #[serde(default)]
    pub regression: Regression,
}

impl CalibrationConfig {
    /// Named presets: `narrow` (k = 1, D = 2..30, linear) and `wide`
    /// (D = 2..80, order chosen automatically).
    pub fn preset(name: &str, n: usize, k: usize) -> Result<Self> {
        let (dims, order) = match name {
            "narrow" => ((2..=30).collect(), OrderChoice::Fixed(1)),
            "wide" => ((2..=80).collect(), OrderChoice::Auto),
            other => return Err(Error::arg(format!("unknown calibration preset `{other}` (expected narrow|wide)"))),
        };
        Ok(Self {
            n,
            k,
            boundary: Boundary::Hard,
            dims,
            realizations: 100,
            seed: 0,
            order,
            target: FitTarget::Means,
            regression: Regression::Ols,
        })
    }

    /// Preset matching a (sample size, neighborhood) pair: the benchmark
    /// configuration `(2500, 5)` uses the wide grid, everything else the
    /// `narrow` grid.
    pub fn preset_for(n: usize, k: usize) -> Self {
        let name = if (n, k) == (2500, 5) { "wide" } else { "narrow" };
        Self::preset(name, n, k).expect("known preset")
    }
}

/// One hypercube realization of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub dim: usize,
    pub realization: usize,
    pub estimate: f64,
}

/// Median FSA estimates on seeded hypercubes for every `(D, realization)`.
///
/// Each task seeds its own stream from `(seed, D, realization)`, so the
/// output does not depend on scheduling.
pub fn hypercube_sweep(cfg: &CalibrationConfig) -> Result<Vec<SweepRecord>> {
    if cfg.dims.is_empty() {
        return Err(Error::arg("calibration needs at least one dimension"));
    }
    if cfg.realizations == 0 {
        return Err(Error::arg("calibration needs at least one realization"));
    }
    if cfg.n < 2 * cfg.k + 1 {
        return Err(Error::InsufficientSample { needed: 2 * cfg.k + 1, have: cfg.n });
    }
    let tasks: Vec<(usize, usize)> =
        cfg.dims.iter().flat_map(|&d| (0..cfg.realizations).map(move |r| (d, r))).collect();
    tasks
        .into_par_iter()
        .map(|(dim, realization)| {
            let seed = derive_seed(cfg.seed, &[dim as u64, realization as u64]);
            let cloud = generate(&ManifoldSpec::hypercube(dim, cfg.n, seed, cfg.boundary))?;
            let estimate = aggregate_median(&local_estimates(&cloud, cfg.k)?)?.value;
            Ok(SweepRecord { dim, realization, estimate })
        })
        .collect()
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let m = v.len() as f64;
    let mean = v.iter().sum::<f64>() / m;
    let var = if v.len() > 1 { v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0) } else { 0.0 };
    (mean, var.sqrt())
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + erf(z / SQRT_2))
}

/// Candidate fit for each order, with its information criterion.
fn select_order(xs_pairs: &[(f64, f64)], cfg: &CalibrationConfig) -> Result<(CalibrationModel, String)> {
    match cfg.order {
        OrderChoice::Fixed(s) => Ok((fit_polynomial_with(xs_pairs, s, cfg.regression)?, format!("fixed s={s}"))),
        OrderChoice::Auto => {
            let m = xs_pairs.len() as f64;
            let mut best: Option<(f64, CalibrationModel)> = None;
            let mut notes = Vec::new();
            for s in 1..=MAX_AUTO_ORDER {
                match fit_polynomial_with(xs_pairs, s, cfg.regression) {
                    Ok(model) => {
                        let rss = model.residual_sd.powi(2) * (m - 1.0) + model.residual_mean.powi(2) * m;
                        let bic = m * (rss.max(1e-300) / m).ln() + s as f64 * m.ln();
                        notes.push(format!("s={s}: bic={bic:.3}"));
                        if best.as_ref().is_none_or(|(b, _)| bic < *b) {
                            best = Some((bic, model));
                        }
                    }
                    Err(e) => notes.push(format!("s={s}: rejected ({e})")),
                }
            }
            let (_, model) = best.ok_or_else(|| Error::DegenerateDesign("no admissible polynomial order".into()))?;
            let note = format!("auto (BIC) chose s={} [{}]", model.order, notes.join("; "));
            Ok((model, note))
        }
    }
}

/// Fits a correction model from sweep records.
pub fn fit_sweep(cfg: &CalibrationConfig, records: &[SweepRecord]) -> Result<CalibrationModel> {
    let raw: Vec<(f64, f64)> = records.iter().map(|r| (r.dim as f64, r.estimate)).collect();
    check_pairs(&raw)?;
    let mut dims: Vec<usize> = records.iter().map(|r| r.dim).collect();
    dims.sort_unstable();
    dims.dedup();
    let per_dim: Vec<(usize, Vec<f64>)> = dims
        .iter()
        .map(|&d| (d, records.iter().filter(|r| r.dim == d).map(|r| r.estimate).collect()))
        .collect();

    let fit_pairs: Vec<(f64, f64)> = match cfg.target {
        FitTarget::Pooled => raw.clone(),
        FitTarget::Means => per_dim
            .iter()
            .map(|(d, est)| {
                let mean_ln_e = est.iter().map(|e| (*d as f64 / e).ln()).sum::<f64>() / est.len() as f64;
                let mean_est = est.iter().sum::<f64>() / est.len() as f64;
                // (D', d) with ln(D'/d) equal to the mean log error
                (mean_est * mean_ln_e.exp(), mean_est)
            })
            .collect(),
    };
    let (mut model, order_note) = select_order(&fit_pairs, cfg)?;

    // residuals of every realization against the fitted curve
    let raw_res: Vec<f64> =
        raw.iter().map(|&(dim, d)| (dim / d).ln() - log_error_polynomial(&model.coeffs, d)).collect();
    let stats = ResidualStats::from_residuals(&raw_res);
    model.residual_mean = stats.mean;
    model.residual_sd = stats.sd;
    model.residuals = Some(stats);
    let lo = raw.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let hi = raw.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    model.d_range = (lo.min(model.d_range.0), hi.max(model.d_range.1));
    CalibrationModel::check_monotone(&model.coeffs, model.d_range)?;

    model.grid = per_dim
        .iter()
        .map(|(d, est)| {
            let dim = *d as f64;
            let (mean_estimate, sd_estimate) = mean_sd(est);
            let corrected: Vec<f64> =
                est.iter().map(|&e| e * log_error_polynomial(&model.coeffs, e).exp()).collect();
            let (mean_corrected, sd_corrected) = mean_sd(&corrected);
            let predicted_hit_rate = if sd_corrected > 0.0 {
                normal_cdf((dim + 0.5 - mean_corrected) / sd_corrected)
                    - normal_cdf((dim - 0.5 - mean_corrected) / sd_corrected)
            } else if (mean_corrected - dim).abs() < 0.5 {
                1.0
            } else {
                0.0
            };
            GridPoint {
                dim,
                mean_estimate,
                sd_estimate,
                mean_ln_error: est.iter().map(|e| (dim / e).ln()).sum::<f64>() / est.len() as f64,
                mean_corrected,
                sd_corrected,
                predicted_hit_rate,
            }
        })
        .collect();
    model.n = cfg.n;
    model.k = cfg.k;
    model.boundary = cfg.boundary;
    model.provenance = Some(Provenance {
        seed: cfg.seed,
        dims: cfg.dims.clone(),
        realizations: cfg.realizations,
        order_selection: order_note,
        regression: cfg.regression,
    });
    Ok(model)
}

/// Runs a hypercube sweep and fits the correction to it.
pub fn calibrate(cfg: &CalibrationConfig) -> Result<CalibrationModel> {
    let records = hypercube_sweep(cfg)?;
    fit_sweep(cfg, &records)
}
