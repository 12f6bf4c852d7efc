use serde::{Deserialize, Serialize};

use super::embed::stride_subsets;
use super::MultiChannelSeries;
use crate::error::{Error, Result};
use crate::estimators::{
    aggregate_fsa_ml, aggregate_mean, aggregate_median, aggregate_mode, local_estimates_multi,
    local_levina_bickel, Method,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileConfig {
    pub m_range: Vec<usize>,
    /// Neighborhood orders averaged over (inclusive list).
    pub k_range: Vec<usize>,
    pub tau: usize,
    pub stride: usize,
    pub method: Method,
    /// Saturation is reported at the first `m` whose estimate exceeds the
    /// previous one by less than this.
    pub saturation_threshold: f64,
}

impl ProfileConfig {
    pub fn new(m_range: Vec<usize>, tau: usize, stride: usize) -> Self {
        Self { m_range, k_range: (10..=20).collect(), tau, stride, method: Method::Mfsa, saturation_threshold: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub channel: usize,
    pub m: usize,
    /// Mean over neighborhood orders and stride subsets.
    pub estimate: f64,
    /// Mean over stride subsets, one entry per order in `k_range`.
    pub per_k: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileTable {
    pub rows: Vec<ProfileRow>,
    /// Per channel: first embedding dimension at which the estimate stops growing.
    pub saturation: Vec<Option<usize>>,
}

impl ProfileTable {
    pub fn estimate(&self, channel: usize, m: usize) -> Option<f64> {
        self.rows.iter().find(|r| r.channel == channel && r.m == m).map(|r| r.estimate)
    }
}

fn subset_estimates(cloud: &crate::geometry::PointCloud, cfg: &ProfileConfig) -> Result<Vec<f64>> {
    match cfg.method {
        Method::Ml => cfg
            .k_range
            .iter()
            .map(|&k| Ok(aggregate_mean(&local_levina_bickel(cloud, k)?)?.value))
            .collect(),
        Method::Cmfsa => Err(Error::arg("dimension profiles use uncorrected estimators")),
        method => local_estimates_multi(cloud, &cfg.k_range)?
            .iter()
            .map(|locals| {
                let g = match method {
                    Method::Mfsa => aggregate_median(locals)?,
                    Method::Mean => aggregate_mean(locals)?,
                    Method::Mode => aggregate_mode(locals)?,
                    Method::Fsaml => aggregate_fsa_ml(locals)?,
                    Method::Ml | Method::Cmfsa => unreachable!(),
                };
                Ok(g.value)
            })
            .collect(),
    }
}

/// Estimated dimension versus embedding dimension for every channel.
pub fn dimension_profile(series: &MultiChannelSeries, cfg: &ProfileConfig) -> Result<ProfileTable> {
    if cfg.m_range.is_empty() || cfg.k_range.is_empty() {
        return Err(Error::arg("embedding and neighborhood ranges must be non-empty"));
    }
    let mut rows = Vec::new();
    let mut saturation = Vec::new();
    for (c, channel) in series.channels().iter().enumerate() {
        let mut prev: Option<f64> = None;
        let mut sat = None;
        for &m in &cfg.m_range {
            let subsets = stride_subsets(channel, m, cfg.tau, cfg.stride)?;
            let mut per_k = vec![0.0; cfg.k_range.len()];
            for cloud in &subsets {
                for (acc, v) in per_k.iter_mut().zip(subset_estimates(cloud, cfg)?) {
                    *acc += v / subsets.len() as f64;
                }
            }
            let estimate = per_k.iter().sum::<f64>() / per_k.len() as f64;
            if sat.is_none() && prev.is_some_and(|p| estimate - p < cfg.saturation_threshold) {
                sat = Some(m);
            }
            prev = Some(estimate);
            rows.push(ProfileRow { channel: c, m, estimate, per_k });
        }
        saturation.push(sat);
    }
    Ok(ProfileTable { rows, saturation })
}
