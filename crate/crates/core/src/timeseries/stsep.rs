use serde::{Deserialize, Serialize};

use super::embed::embedded_len;
use crate::error::{Error, Result};

const MIN_PAIRS: usize = 10;
/// A contour maximum must stand this far (relative) above its value at
/// Δt = 1 and above the dip that follows it.
const MIN_RISE: f64 = 0.05;

/// Percentile contours of the distance between delay vectors exactly `Δt`
/// samples apart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StSepTable {
    pub percentiles: Vec<f64>,
    /// `values[Δt - 1][j]` is percentile `j` at separation `Δt`; `None`
    /// when fewer than 10 pairs exist.
    pub values: Vec<Vec<Option<f64>>>,
    /// First significant local maximum of the median contour, or 1.
    pub suggested_stride: usize,
}

impl StSepTable {
    pub fn dt_max(&self) -> usize {
        self.values.len()
    }

    /// Contour for percentile index `j`.
    pub fn contour(&self, j: usize) -> Vec<Option<f64>> {
        self.values.iter().map(|row| row[j]).collect()
    }

    /// Cellwise mean of several tables with identical shape.
    pub fn average(tables: &[StSepTable]) -> Result<StSepTable> {
        let first = tables.first().ok_or_else(|| Error::arg("nothing to average"))?;
        if tables.iter().any(|t| t.percentiles != first.percentiles || t.dt_max() != first.dt_max()) {
            return Err(Error::arg("space-time separation tables differ in shape"));
        }
        let values: Vec<Vec<Option<f64>>> = (0..first.dt_max())
            .map(|i| {
                (0..first.percentiles.len())
                    .map(|j| {
                        let cells: Vec<f64> = tables.iter().filter_map(|t| t.values[i][j]).collect();
                        (cells.len() == tables.len()).then(|| cells.iter().sum::<f64>() / cells.len() as f64)
                    })
                    .collect()
            })
            .collect();
        let suggested_stride = suggest_stride(&first.percentiles, &values);
        Ok(StSepTable { percentiles: first.percentiles.clone(), values, suggested_stride })
    }
}

/// Linear interpolation between order statistics of a sorted slice.
fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    let pos = p / 100.0 * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

fn suggest_stride(percentiles: &[f64], values: &[Vec<Option<f64>>]) -> usize {
    // median contour, or the highest requested percentile below it
    let j = percentiles
        .iter()
        .enumerate()
        .filter(|(_, p)| **p <= 50.0)
        .max_by(|a, b| a.1.total_cmp(b.1))
        .or_else(|| percentiles.iter().enumerate().next())
        .map(|(j, _)| j);
    let Some(j) = j else { return 1 };
    let c: Vec<Option<f64>> = values.iter().map(|row| row[j]).collect();
    let Some(base) = c.first().copied().flatten() else { return 1 };
    for i in 1..c.len().saturating_sub(1) {
        if let (Some(prev), Some(cur), Some(next)) = (c[i - 1], c[i], c[i + 1]) {
            if prev < cur && cur >= next && cur > (1.0 + MIN_RISE) * base && falls_after(&c[i + 1..], cur) {
                return i + 1;
            }
        }
    }
    1
}

/// The contour drops below `peak / (1 + MIN_RISE)` before exceeding `peak`.
fn falls_after(rest: &[Option<f64>], peak: f64) -> bool {
    for v in rest.iter().flatten() {
        if *v > peak {
            return false;
        }
        if *v * (1.0 + MIN_RISE) < peak {
            return true;
        }
    }
    false
}

/// Space-time separation contours of one channel embedded with `(m, tau)`.
pub fn space_time_separation(
    channel: &[f64],
    m: usize,
    tau: usize,
    percentiles: &[f64],
    dt_max: usize,
) -> Result<StSepTable> {
    if m == 0 || tau == 0 || dt_max == 0 {
        return Err(Error::arg("embedding dimension, delay and dt_max must be at least 1"));
    }
    if percentiles.is_empty() || percentiles.iter().any(|p| !(0.0..=100.0).contains(p)) {
        return Err(Error::arg("percentiles must be non-empty and within [0, 100]"));
    }
    let n_vec = embedded_len(channel.len(), m, tau);
    if n_vec < 2 {
        return Err(Error::InsufficientLength { needed: (m - 1) * tau + 2, have: channel.len() });
    }
    let dist = |a: usize, b: usize| {
        (0..m).map(|j| (channel[a + j * tau] - channel[b + j * tau]).powi(2)).sum::<f64>().sqrt()
    };
    let values = (1..=dt_max)
        .map(|dt| {
            let pairs = n_vec.saturating_sub(dt);
            if pairs < MIN_PAIRS {
                return vec![None; percentiles.len()];
            }
            let mut d: Vec<f64> = (0..pairs).map(|t| dist(t, t + dt)).collect();
            d.sort_unstable_by(f64::total_cmp);
            percentiles.iter().map(|&p| Some(percentile_sorted(&d, p))).collect()
        })
        .collect::<Vec<_>>();
    let suggested_stride = suggest_stride(percentiles, &values);
    Ok(StSepTable { percentiles: percentiles.to_vec(), values, suggested_stride })
}
