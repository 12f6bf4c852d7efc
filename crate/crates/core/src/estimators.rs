//! Local FSA estimates, their global aggregation, and the maximum-likelihood
//! estimators (Levina-Bickel and the FSA likelihood).

use std::collections::BTreeMap;
use std::f64::consts::LN_2;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{cmp_f64, PointCloud};
use crate::special::ln_beta_unchecked;

/// One local dimension estimate, or the reason there is none.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LocalEstimate {
    Valid(f64),
    /// Neighbor distances coincide (`R_k == R_2k`); the estimate is infinite.
    Degenerate,
    /// A duplicate point put a zero into the distance ratio.
    ZeroDistance,
}

impl LocalEstimate {
    pub fn value(self) -> Option<f64> {
        match self {
            LocalEstimate::Valid(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_valid(self) -> bool {
        matches!(self, LocalEstimate::Valid(_))
    }
}

/// FSA local estimate `ln 2 / ln(R_2k / R_k)`.
pub fn fsa_local(r_k: f64, r_2k: f64) -> Result<LocalEstimate> {
    if !(r_k >= 0.0 && r_k.is_finite() && r_2k.is_finite()) || r_2k < r_k {
        return Err(Error::arg(format!("need 0 <= R_k <= R_2k, got ({r_k}, {r_2k})")));
    }
    if r_k == 0.0 {
        return Ok(LocalEstimate::ZeroDistance);
    }
    let ratio = (r_2k / r_k).ln();
    if ratio <= 0.0 {
        return Ok(LocalEstimate::Degenerate);
    }
    Ok(LocalEstimate::Valid(LN_2 / ratio))
}

/// Local estimates at every point of a cloud, in point order.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalEstimateSet {
    pub k: usize,
    pub values: Vec<LocalEstimate>,
}

impl LocalEstimateSet {
    pub fn from_values(k: usize, values: impl IntoIterator<Item = f64>) -> Self {
        Self { k, values: values.into_iter().map(LocalEstimate::Valid).collect() }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn valid(&self) -> Vec<f64> {
        self.values.iter().filter_map(|v| v.value()).collect()
    }

    pub fn n_invalid(&self) -> usize {
        self.values.iter().filter(|v| !v.is_valid()).count()
    }

    fn valid_or_err(&self) -> Result<Vec<f64>> {
        let v = self.valid();
        if v.is_empty() {
            return Err(Error::NoValidEstimates { invalid: self.n_invalid() });
        }
        Ok(v)
    }
}

/// FSA estimate at every point using the `k`-th and `2k`-th neighbor.
pub fn local_estimates(cloud: &PointCloud, k: usize) -> Result<LocalEstimateSet> {
    if k == 0 {
        return Err(Error::arg("neighborhood order k must be at least 1"));
    }
    let n = cloud.len();
    if n < 2 * k + 1 {
        return Err(Error::InsufficientSample { needed: 2 * k + 1, have: n });
    }
    let values = cloud
        .knn_all(2 * k)?
        .iter()
        .map(|nd| fsa_local(nd.nth(k), nd.nth(2 * k)))
        .collect::<Result<Vec<_>>>()?;
    Ok(LocalEstimateSet { k, values })
}

/// Local FSA estimates for several orders from one neighbor search.
pub fn local_estimates_multi(cloud: &PointCloud, ks: &[usize]) -> Result<Vec<LocalEstimateSet>> {
    let k_max = ks.iter().copied().max().ok_or_else(|| Error::arg("no neighborhood orders given"))?;
    if ks.contains(&0) {
        return Err(Error::arg("neighborhood order k must be at least 1"));
    }
    let n = cloud.len();
    if n < 2 * k_max + 1 {
        return Err(Error::InsufficientSample { needed: 2 * k_max + 1, have: n });
    }
    let neighbors = cloud.knn_all(2 * k_max)?;
    ks.iter()
        .map(|&k| {
            let values = neighbors
                .iter()
                .map(|nd| fsa_local(nd.nth(k), nd.nth(2 * k)))
                .collect::<Result<Vec<_>>>()?;
            Ok(LocalEstimateSet { k, values })
        })
        .collect()
}

/// Global estimator identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Median of local FSA estimates.
    Mfsa,
    /// Mean of local FSA estimates.
    Mean,
    /// Most frequent rounded local FSA estimate.
    Mode,
    /// Levina-Bickel maximum likelihood.
    Ml,
    /// Maximum likelihood under the FSA estimate density.
    Fsaml,
    /// Calibrated median FSA.
    Cmfsa,
}

impl Method {
    pub const ALL: [Method; 6] =
        [Method::Mfsa, Method::Mean, Method::Mode, Method::Ml, Method::Fsaml, Method::Cmfsa];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Mfsa => "mfsa",
            Method::Mean => "mean",
            Method::Mode => "mode",
            Method::Ml => "ml",
            Method::Fsaml => "fsaml",
            Method::Cmfsa => "cmfsa",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::arg(format!("unknown method `{s}` (expected mfsa|mean|mode|ml|fsaml|cmfsa)")))
    }
}

/// A single global dimension estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlobalEstimate {
    pub method: Method,
    pub value: f64,
    pub k: usize,
    pub n_local: usize,
    pub n_invalid: usize,
}

/// Sample median; even counts average the two central order statistics.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    let mid = v.len() / 2;
    let (_, upper, _) = v.select_nth_unstable_by(mid, cmp_f64);
    let upper = *upper;
    if v.len() % 2 == 1 {
        return Some(upper);
    }
    let lower = v[..mid].iter().copied().max_by(cmp_f64).expect("mid > 0");
    Some(0.5 * (lower + upper))
}

pub fn aggregate_median(locals: &LocalEstimateSet) -> Result<GlobalEstimate> {
    let valid = locals.valid_or_err()?;
    Ok(GlobalEstimate {
        method: Method::Mfsa,
        value: median(&valid).expect("non-empty"),
        k: locals.k,
        n_local: valid.len(),
        n_invalid: locals.n_invalid(),
    })
}

pub fn aggregate_mean(locals: &LocalEstimateSet) -> Result<GlobalEstimate> {
    let valid = locals.valid_or_err()?;
    Ok(GlobalEstimate {
        method: Method::Mean,
        value: valid.iter().sum::<f64>() / valid.len() as f64,
        k: locals.k,
        n_local: valid.len(),
        n_invalid: locals.n_invalid(),
    })
}

/// Most frequent local estimate after rounding half away from zero to a
/// positive integer; ties go to the smaller integer.
pub fn aggregate_mode(locals: &LocalEstimateSet) -> Result<GlobalEstimate> {
    let valid = locals.valid_or_err()?;
    let mut counts: BTreeMap<u64, usize> = BTreeMap::new();
    for v in &valid {
        *counts.entry(v.round().max(1.0) as u64).or_default() += 1;
    }
    // BTreeMap iterates ascending, and max_by_key keeps the last maximum,
    // so walk in reverse to keep the smallest tied key.
    let (mode, _) = counts.iter().rev().max_by_key(|(_, &c)| c).expect("non-empty");
    Ok(GlobalEstimate {
        method: Method::Mode,
        value: *mode as f64,
        k: locals.k,
        n_local: valid.len(),
        n_invalid: locals.n_invalid(),
    })
}

/// Levina-Bickel estimate `(K-1) / -sum(ln r_j)` from normalized distances.
pub fn levina_bickel(ratios: &[f64]) -> Result<LocalEstimate> {
    if ratios.is_empty() {
        return Err(Error::arg("Levina-Bickel needs at least one ratio"));
    }
    if let Some(r) = ratios.iter().find(|r| !(**r >= 0.0 && **r <= 1.0)) {
        return Err(Error::arg(format!("normalized distance {r} outside (0, 1]")));
    }
    if ratios.iter().any(|&r| r == 0.0) {
        return Ok(LocalEstimate::ZeroDistance);
    }
    let s: f64 = -ratios.iter().map(|r| r.ln()).sum::<f64>();
    if s <= 0.0 {
        return Ok(LocalEstimate::Degenerate);
    }
    Ok(LocalEstimate::Valid(ratios.len() as f64 / s))
}

/// Local Levina-Bickel estimate at every point with neighborhood size `big_k`.
pub fn local_levina_bickel(cloud: &PointCloud, big_k: usize) -> Result<LocalEstimateSet> {
    if big_k < 2 {
        return Err(Error::arg("Levina-Bickel needs K >= 2"));
    }
    let values = cloud
        .knn_all(big_k)?
        .iter()
        .map(|nd| {
            if nd.nth(big_k) == 0.0 {
                Ok(LocalEstimate::ZeroDistance)
            } else {
                levina_bickel(&nd.ratios())
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LocalEstimateSet { k: big_k, values })
}

/// How local Levina-Bickel values are pooled into one number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pooling {
    #[default]
    Mean,
    Median,
}

impl FromStr for Pooling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(Pooling::Mean),
            "median" => Ok(Pooling::Median),
            other => Err(Error::arg(format!("unknown pooling `{other}` (expected mean|median)"))),
        }
    }
}

pub fn global_levina_bickel(cloud: &PointCloud, big_k: usize, pooling: Pooling) -> Result<GlobalEstimate> {
    let locals = local_levina_bickel(cloud, big_k)?;
    let agg = match pooling {
        Pooling::Mean => aggregate_mean(&locals)?,
        Pooling::Median => aggregate_median(&locals)?,
    };
    Ok(GlobalEstimate { method: Method::Ml, ..agg })
}

/// Log-likelihood of dimension `dim` for i.i.d. local estimates of order `k`.
pub fn log_likelihood(locals: &[f64], k: usize, dim: f64) -> f64 {
    let n = locals.len() as f64;
    let kf = k as f64;
    let mut ll = n * (LN_2.ln() - ln_beta_unchecked(kf, kf)) + n * dim.ln();
    for &d in locals {
        let x = dim * LN_2 / d;
        ll -= kf * x;
        if k > 1 {
            ll += (kf - 1.0) * (-(-x).exp_m1()).ln();
        }
        ll -= 2.0 * d.ln();
    }
    ll
}

/// Derivative of [`log_likelihood`] with respect to the dimension.
pub fn score(locals: &[f64], k: usize, dim: f64) -> f64 {
    let n = locals.len() as f64;
    let kf = k as f64;
    let inv_sum: f64 = locals.iter().map(|d| 1.0 / d).sum();
    let mut s = n / dim - LN_2 * kf * inv_sum;
    if k > 1 {
        let tail: f64 = locals.iter().map(|&d| 1.0 / (d * (dim * LN_2 / d).exp_m1())).sum();
        s += LN_2 * (kf - 1.0) * tail;
    }
    s
}

const ML_LO: f64 = 1e-6;
const ML_HI: f64 = 1e3;
const ML_SCAN: usize = 64;
const ML_TOL: f64 = 1e-9;

/// Maximum-likelihood dimension from local FSA estimates of order `k`.
///
/// For `k = 1` the likelihood equation is solved in closed form; otherwise
/// the score is scanned on a log grid over `(1e-6, 1e3]` and the single sign
/// change is bisected.
pub fn fsa_ml_solve(locals: &[f64], k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::arg("neighborhood order k must be at least 1"));
    }
    if locals.is_empty() {
        return Err(Error::NoValidEstimates { invalid: 0 });
    }
    if let Some(d) = locals.iter().find(|d| !(**d > 0.0 && d.is_finite())) {
        return Err(Error::arg(format!("local estimate {d} is not a positive finite value")));
    }
    let n = locals.len() as f64;
    if k == 1 {
        let inv_sum: f64 = locals.iter().map(|d| 1.0 / d).sum();
        return Ok(n / (LN_2 * inv_sum));
    }

    let ratio = (ML_HI / ML_LO).powf(1.0 / (ML_SCAN - 1) as f64);
    let grid: Vec<f64> = (0..ML_SCAN).map(|i| ML_LO * ratio.powi(i as i32)).collect();
    let values: Vec<f64> = grid.iter().map(|&x| score(locals, k, x)).collect();
    let changes: Vec<usize> = (0..ML_SCAN - 1)
        .filter(|&i| (values[i] > 0.0) != (values[i + 1] > 0.0))
        .collect();
    match changes.len() {
        0 => return Err(Error::NoRoot { lo: ML_LO, hi: ML_HI }),
        1 => {}
        count => return Err(Error::MultipleRoots { lo: ML_LO, hi: ML_HI, count }),
    }
    let i = changes[0];
    let (mut lo, mut hi) = (grid[i], grid[i + 1]);
    let lo_positive = values[i] > 0.0;
    while hi - lo > ML_TOL {
        let mid = 0.5 * (lo + hi);
        if (score(locals, k, mid) > 0.0) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

pub fn aggregate_fsa_ml(locals: &LocalEstimateSet) -> Result<GlobalEstimate> {
    let valid = locals.valid_or_err()?;
    Ok(GlobalEstimate {
        method: Method::Fsaml,
        value: fsa_ml_solve(&valid, locals.k)?,
        k: locals.k,
        n_local: valid.len(),
        n_invalid: locals.n_invalid(),
    })
}

/// Uncorrected global estimate of `cloud` by any method except `Cmfsa`.
///
/// For `Ml` the parameter `k` is the Levina-Bickel neighborhood size `K`.
pub fn estimate(cloud: &PointCloud, k: usize, method: Method, pooling: Pooling) -> Result<GlobalEstimate> {
    match method {
        Method::Ml => global_levina_bickel(cloud, k, pooling),
        Method::Cmfsa => Err(Error::arg("cmfsa needs a calibration model; use calibration::corrected_estimate")),
        _ => {
            let locals = local_estimates(cloud, k)?;
            match method {
                Method::Mfsa => aggregate_median(&locals),
                Method::Mean => aggregate_mean(&locals),
                Method::Mode => aggregate_mode(&locals),
                Method::Fsaml => aggregate_fsa_ml(&locals),
                Method::Ml | Method::Cmfsa => unreachable!(),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Boundary;

    fn set(v: &[f64]) -> LocalEstimateSet {
        LocalEstimateSet::from_values(1, v.iter().copied())
    }

    #[test]
    fn fsa_local_values() {
        assert_eq!(fsa_local(1.0, 2.0).unwrap(), LocalEstimate::Valid(1.0));
        let v = fsa_local(1.0, 2f64.powf(0.2)).unwrap().value().unwrap();
        assert!((v - 5.0).abs() < 1e-12);
        assert_eq!(fsa_local(0.5, 0.5).unwrap(), LocalEstimate::Degenerate);
        assert_eq!(fsa_local(0.0, 0.5).unwrap(), LocalEstimate::ZeroDistance);
        assert!(fsa_local(0.6, 0.5).is_err());
    }

    #[test]
    fn median_rules() {
        assert_eq!(aggregate_median(&set(&[1.0, 2.0, 100.0])).unwrap().value, 2.0);
        assert_eq!(aggregate_median(&set(&[1.0, 3.0])).unwrap().value, 2.0);
        assert_eq!(aggregate_median(&set(&[4.0, 1.0, 3.0, 2.0])).unwrap().value, 2.5);
    }

    #[test]
    fn mean_and_mode() {
        let m = aggregate_mean(&set(&[1.0, 2.0, 100.0])).unwrap().value;
        assert!((m - 103.0 / 3.0).abs() < 1e-12);
        assert_eq!(aggregate_mode(&set(&[2.4, 2.6, 2.2])).unwrap().value, 2.0);
        assert_eq!(aggregate_mode(&set(&[1.6, 2.4])).unwrap().value, 2.0);
        // tie between 1 and 3 goes to the smaller
        assert_eq!(aggregate_mode(&set(&[3.1, 0.9])).unwrap().value, 1.0);
        // half away from zero, floored at 1
        assert_eq!(aggregate_mode(&set(&[2.5, 0.2, 0.3])).unwrap().value, 1.0);
        assert_eq!(aggregate_mode(&set(&[2.5])).unwrap().value, 3.0);
    }

    #[test]
    fn invalid_locals_are_counted_not_used() {
        let locals = LocalEstimateSet {
            k: 1,
            values: vec![LocalEstimate::Valid(2.0), LocalEstimate::Degenerate, LocalEstimate::ZeroDistance],
        };
        let g = aggregate_median(&locals).unwrap();
        assert_eq!((g.value, g.n_local, g.n_invalid), (2.0, 1, 2));
        let none = LocalEstimateSet { k: 1, values: vec![LocalEstimate::Degenerate] };
        assert!(matches!(aggregate_median(&none), Err(Error::NoValidEstimates { invalid: 1 })));
        assert!(aggregate_mean(&none).is_err());
        assert!(aggregate_mode(&none).is_err());
    }

    #[test]
    fn levina_bickel_closed_forms() {
        let v = levina_bickel(&[0.5]).unwrap().value().unwrap();
        assert!((v - 1.0 / LN_2).abs() < 1e-14);
        let e = (-1.0f64).exp();
        assert!((levina_bickel(&[e, e]).unwrap().value().unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(levina_bickel(&[1.0, 1.0]).unwrap(), LocalEstimate::Degenerate);
        assert!(levina_bickel(&[1.5]).is_err());
    }

    #[test]
    fn ml_k1_constant_locals() {
        let d = 3.7;
        let v = fsa_ml_solve(&[d; 25], 1).unwrap();
        assert!((v - d / LN_2).abs() < 1e-12);
    }

    #[test]
    fn ml_k_gt_1_is_a_root_of_the_score() {
        let locals = [2.1, 3.4, 1.7, 2.9, 2.2, 5.0, 2.6];
        let root = fsa_ml_solve(&locals, 4).unwrap();
        assert!(score(&locals, 4, root - 1e-6) > 0.0);
        assert!(score(&locals, 4, root + 1e-6) < 0.0);
    }

    #[test]
    fn insufficient_sample_for_local_estimates() {
        let cloud = PointCloud::new(vec![0.0, 0.1, 0.3, 0.6], 1, Boundary::Hard).unwrap();
        assert!(matches!(local_estimates(&cloud, 2), Err(Error::InsufficientSample { .. })));
        let cloud = PointCloud::new(vec![0.0, 0.1, 0.3, 0.6, 0.61], 1, Boundary::Hard).unwrap();
        assert_eq!(local_estimates(&cloud, 2).unwrap().len(), 5);
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
        assert!("danco".parse::<Method>().is_err());
    }
}
