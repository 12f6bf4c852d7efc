//! Preprocessing of multichannel recordings into embedded point clouds:
//! standardization, graph-Laplacian current source density, zero-phase
//! Butterworth bandpass, delay embedding, space-time separation and
//! embedding-dimension profiles.

mod embed;
mod filter;
mod layout;
mod profile;
mod stsep;

pub use embed::{delay_embed, embedded_len, stride_subsets, EmbeddingConfig};
pub use filter::{bandpass, zero_phase_gain, Butterworth, Sos};
pub use layout::{csd, Layout};
pub use profile::{dimension_profile, ProfileConfig, ProfileRow, ProfileTable};
pub use stsep::{space_time_separation, StSepTable};

use crate::error::{Error, Result};

/// `C` channels of `T` samples each, recorded at `rate` samples per second.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiChannelSeries {
    channels: Vec<Vec<f64>>,
    rate: f64,
    layout: Option<Layout>,
}

impl MultiChannelSeries {
    pub fn new(channels: Vec<Vec<f64>>, rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::arg(format!("sampling rate must be positive, got {rate}")));
        }
        let len = channels.first().map(Vec::len).ok_or_else(|| Error::arg("series has no channels"))?;
        if len == 0 {
            return Err(Error::arg("series has no samples"));
        }
        if let Some(c) = channels.iter().position(|ch| ch.len() != len) {
            return Err(Error::arg(format!("channel {c} has a different length")));
        }
        if channels.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::arg("series contains non-finite samples"));
        }
        Ok(Self { channels, rate, layout: None })
    }

    /// Builds a series from a row-per-sample, column-per-channel matrix.
    pub fn from_samples(values: &[f64], n_channels: usize, rate: f64) -> Result<Self> {
        if n_channels == 0 || values.len() % n_channels != 0 {
            return Err(Error::arg("sample matrix does not divide into channels"));
        }
        let channels = (0..n_channels)
            .map(|c| values.iter().skip(c).step_by(n_channels).copied().collect())
            .collect();
        Self::new(channels, rate)
    }

    pub fn with_layout(mut self, layout: Layout) -> Result<Self> {
        if layout.len() != self.channels.len() {
            return Err(Error::arg(format!(
                "layout has {} nodes for {} channels",
                layout.len(),
                self.channels.len()
            )));
        }
        self.layout = Some(layout);
        Ok(self)
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        &self.channels[c]
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels[0].is_empty()
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn layout(&self) -> Option<&Layout> {
        self.layout.as_ref()
    }

    /// Replaces the samples, keeping rate and layout.
    pub(crate) fn map_channels(&self, channels: Vec<Vec<f64>>) -> Self {
        Self { channels, rate: self.rate, layout: self.layout.clone() }
    }

    /// Drops `seconds` from both ends.
    pub fn trim(&self, seconds: f64) -> Result<Self> {
        let cut = (seconds * self.rate).round() as usize;
        if 2 * cut >= self.len() {
            return Err(Error::InsufficientLength { needed: 2 * cut + 1, have: self.len() });
        }
        Ok(self.map_channels(self.channels.iter().map(|ch| ch[cut..ch.len() - cut].to_vec()).collect()))
    }
}

/// Per-channel zero mean and unit (population) standard deviation.
pub fn standardize(series: &MultiChannelSeries) -> Result<MultiChannelSeries> {
    let channels = series
        .channels()
        .iter()
        .enumerate()
        .map(|(c, ch)| {
            let n = ch.len() as f64;
            let mean = ch.iter().sum::<f64>() / n;
            let var = ch.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
            if !(var > 0.0) {
                return Err(Error::ZeroVariance { channel: c });
            }
            let sd = var.sqrt();
            Ok(ch.iter().map(|x| (x - mean) / sd).collect())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(series.map_channels(channels))
}
