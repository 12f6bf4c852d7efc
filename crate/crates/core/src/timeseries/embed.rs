use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Boundary, PointCloud};

/// Delay-embedding dimension and delay, plus the subsampling phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingConfig {
    pub m: usize,
    pub tau: usize,
    pub stride: usize,
    pub offset: usize,
}

impl EmbeddingConfig {
    pub fn new(m: usize, tau: usize) -> Self {
        Self { m, tau, stride: 1, offset: 0 }
    }

    pub fn with_stride(self, stride: usize, offset: usize) -> Self {
        Self { stride, offset, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.tau == 0 || self.stride == 0 {
            return Err(Error::arg("embedding dimension, delay and stride must be at least 1"));
        }
        if self.offset >= self.stride {
            return Err(Error::arg(format!("offset {} must be below stride {}", self.offset, self.stride)));
        }
        Ok(())
    }

    /// Delay of a quarter period of the band's upper edge.
    pub fn quarter_period_delay(rate: f64, f_max: f64) -> usize {
        ((rate / (4.0 * f_max)).round() as usize).max(1)
    }
}

/// Number of full delay vectors in a series of length `len`.
pub fn embedded_len(len: usize, m: usize, tau: usize) -> usize {
    len.saturating_sub((m - 1) * tau)
}

/// Delay vectors `(x_t, x_{t+τ}, ..., x_{t+(m-1)τ})` for
/// `t = offset, offset + stride, ...`.
pub fn delay_embed(channel: &[f64], cfg: &EmbeddingConfig) -> Result<PointCloud> {
    cfg.validate()?;
    let needed = (cfg.m - 1) * cfg.tau + 1;
    if channel.len() < needed {
        return Err(Error::InsufficientLength { needed, have: channel.len() });
    }
    let total = embedded_len(channel.len(), cfg.m, cfg.tau);
    if cfg.offset >= total {
        return Err(Error::InsufficientLength { needed: needed + cfg.offset, have: channel.len() });
    }
    let mut coords = Vec::with_capacity(total.div_ceil(cfg.stride) * cfg.m);
    for t in (cfg.offset..total).step_by(cfg.stride) {
        coords.extend((0..cfg.m).map(|j| channel[t + j * cfg.tau]));
    }
    PointCloud::new(coords, cfg.m, Boundary::Hard)
}

/// The `stride` interleaved subsets of the delay vectors, one per offset.
pub fn stride_subsets(channel: &[f64], m: usize, tau: usize, stride: usize) -> Result<Vec<PointCloud>> {
    (0..stride)
        .map(|offset| delay_embed(channel, &EmbeddingConfig::new(m, tau).with_stride(stride, offset)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_embedding() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let c = delay_embed(&x, &EmbeddingConfig::new(3, 2)).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.point(0), &[1.0, 3.0, 5.0]);
        assert_eq!(c.point(1), &[2.0, 4.0, 6.0]);
    }

    #[test]
    fn unit_dimension_is_identity() {
        let x = [0.5, -1.0, 2.0];
        let c = delay_embed(&x, &EmbeddingConfig::new(1, 7)).unwrap();
        assert_eq!(c.coords(), &x);
    }

    #[test]
    fn too_short() {
        let x = [1.0, 2.0, 3.0];
        assert!(matches!(
            delay_embed(&x, &EmbeddingConfig::new(3, 2)),
            Err(Error::InsufficientLength { needed: 5, have: 3 })
        ));
    }

    #[test]
    fn invalid_config() {
        let x = [1.0; 20];
        assert!(delay_embed(&x, &EmbeddingConfig::new(0, 1)).is_err());
        assert!(delay_embed(&x, &EmbeddingConfig::new(2, 1).with_stride(3, 3)).is_err());
    }

    #[test]
    fn quarter_period() {
        assert_eq!(EmbeddingConfig::quarter_period_delay(2048.0, 30.0), 17);
    }
}
