//! Analytic distributions of normalized neighbor distances and of the local
//! FSA estimate under a locally uniform sampling density.
//!
//! With `a = 2^(-D/d)` the local estimate `d` of a `D`-dimensional sample
//! maps onto a `Beta(k, k)` variate. Everything here is built on that
//! transform: the cdf is `I_a(k, k)`, the median sits at `d = D` for every
//! `k`, and quantiles are found in the compact `a` domain.

use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::special::{beta_reg_unchecked, ln_beta_unchecked};

/// Density of `r = R_k / R_K` given `K - 1` neighbors in `D` dimensions.
pub fn pdf_normalized_distance(r: f64, k: usize, k_minus_1: usize, dim: f64) -> Result<f64> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::arg(format!("normalized distance {r} outside (0, 1)")));
    }
    if k == 0 || k > k_minus_1 {
        return Err(Error::arg(format!("need 1 <= k <= K-1, got k={k}, K-1={k_minus_1}")));
    }
    check_dim(dim)?;
    let big_k = (k_minus_1 + 1) as f64;
    let kf = k as f64;
    let ln_rd = dim * r.ln();
    let ln_pdf = dim.ln() - ln_beta_unchecked(kf, big_k - kf) + (dim * kf - 1.0) * r.ln()
        + (big_k - kf - 1.0) * (-ln_rd.exp_m1()).ln();
    Ok(ln_pdf.exp())
}

fn check_dim(dim: f64) -> Result<()> {
    if dim > 0.0 && dim.is_finite() {
        Ok(())
    } else {
        Err(Error::arg(format!("intrinsic dimension must be positive, got {dim}")))
    }
}

/// Distribution of the local FSA estimate for neighborhood order `k` on a
/// `dim`-dimensional manifold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FsaDistribution {
    k: usize,
    dim: f64,
    ln_norm: f64,
}

impl FsaDistribution {
    pub fn new(k: usize, dim: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::arg("neighborhood order k must be at least 1"));
        }
        check_dim(dim)?;
        let kf = k as f64;
        Ok(Self { k, dim, ln_norm: dim.ln() + LN_2.ln() - ln_beta_unchecked(kf, kf) })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> f64 {
        self.dim
    }

    /// `a = 2^(-D/d)`, the Beta(k, k) variate.
    pub fn beta_variate(&self, d: f64) -> f64 {
        2f64.powf(-self.dim / d)
    }

    /// Inverse of [`beta_variate`](Self::beta_variate).
    pub fn from_beta_variate(&self, a: f64) -> f64 {
        -self.dim * LN_2 / a.ln()
    }

    pub fn ln_pdf(&self, d: f64) -> f64 {
        if !(d > 0.0) {
            return f64::NEG_INFINITY;
        }
        let x = self.dim * LN_2 / d;
        let kf = self.k as f64;
        let tail = if self.k == 1 { 0.0 } else { (kf - 1.0) * (-(-x).exp_m1()).ln() };
        self.ln_norm - kf * x + tail - 2.0 * d.ln()
    }

    pub fn pdf(&self, d: f64) -> f64 {
        self.ln_pdf(d).exp()
    }

    pub fn cdf(&self, d: f64) -> f64 {
        if !(d > 0.0) {
            return 0.0;
        }
        if d == f64::INFINITY {
            return 1.0;
        }
        let a = self.beta_variate(d);
        if self.k == 1 {
            return a;
        }
        let kf = self.k as f64;
        beta_reg_unchecked(a, kf, kf)
    }

    /// `1 - cdf(d)`, accurate in the upper tail.
    pub fn sf(&self, d: f64) -> f64 {
        if !(d > 0.0) {
            return 1.0;
        }
        let one_minus_a = -(-self.dim * LN_2 / d).exp_m1();
        if self.k == 1 {
            return one_minus_a;
        }
        let kf = self.k as f64;
        // symmetric beta: 1 - I_a(k, k) = I_{1-a}(k, k)
        beta_reg_unchecked(one_minus_a, kf, kf)
    }

    /// The `d` at which the cdf reaches `p`, `0 < p < 1`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::arg(format!("probability {p} outside (0, 1)")));
        }
        let a = if self.k == 1 { p } else { beta_quantile_symmetric(p, self.k as f64) };
        Ok(self.from_beta_variate(a))
    }
}

/// Inverts `I_a(k, k) = p` for `a` with safeguarded Newton steps.
fn beta_quantile_symmetric(p: f64, k: f64) -> f64 {
    let ln_b = ln_beta_unchecked(k, k);
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut a = 0.5;
    for _ in 0..200 {
        let f = beta_reg_unchecked(a, k, k) - p;
        if f == 0.0 {
            return a;
        }
        if f < 0.0 {
            lo = a;
        } else {
            hi = a;
        }
        let dens = ((k - 1.0) * (a.ln() + (-a).ln_1p()) - ln_b).exp();
        let mut next = a - f / dens;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - a).abs() <= 1e-17 + 4.0 * f64::EPSILON * a.min(1.0 - a) || hi - lo <= f64::EPSILON * hi {
            return next;
        }
        a = next;
    }
    a
}

/// Convenience wrapper: density of the local FSA estimate.
pub fn fsa_pdf(d: f64, k: usize, dim: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::arg(format!("estimate {d} must be positive")));
    }
    Ok(FsaDistribution::new(k, dim)?.pdf(d))
}

/// Convenience wrapper: cdf of the local FSA estimate.
pub fn fsa_cdf(d: f64, k: usize, dim: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::arg(format!("estimate {d} must be positive")));
    }
    Ok(FsaDistribution::new(k, dim)?.cdf(d))
}

pub fn fsa_quantile(p: f64, k: usize, dim: f64) -> Result<f64> {
    FsaDistribution::new(k, dim)?.quantile(p)
}

/// Sampling distribution of the median of `n = 2l + 1` i.i.d. local estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MedianSamplingDistribution {
    local: FsaDistribution,
    n: usize,
    ln_norm: f64,
}

impl MedianSamplingDistribution {
    pub fn new(k: usize, dim: f64, n: usize) -> Result<Self> {
        if n % 2 == 0 {
            return Err(Error::arg(format!("median sampling density needs an odd sample size, got {n}")));
        }
        let local = FsaDistribution::new(k, dim)?;
        let l = ((n - 1) / 2) as f64;
        Ok(Self { local, n, ln_norm: -ln_beta_unchecked(l + 1.0, l + 1.0) })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn local(&self) -> &FsaDistribution {
        &self.local
    }

    pub fn ln_pdf(&self, m: f64) -> f64 {
        if !(m > 0.0) {
            return f64::NEG_INFINITY;
        }
        let l = ((self.n - 1) / 2) as f64;
        let q = self.local.ln_pdf(m);
        if l == 0.0 {
            return q;
        }
        let lower = self.local.cdf(m);
        let upper = self.local.sf(m);
        self.ln_norm + l * (lower.ln() + upper.ln()) + q
    }

    pub fn pdf(&self, m: f64) -> f64 {
        self.ln_pdf(m).exp()
    }

    /// `I_{P(m)}(l+1, l+1)`, the closed-form integral of [`pdf`](Self::pdf).
    pub fn cdf(&self, m: f64) -> f64 {
        let l = ((self.n - 1) / 2) as f64;
        beta_reg_unchecked(self.local.cdf(m), l + 1.0, l + 1.0)
    }
}

pub fn median_sampling_pdf(m: f64, k: usize, dim: f64, n: usize) -> Result<f64> {
    if !(m > 0.0) {
        return Err(Error::arg(format!("median {m} must be positive")));
    }
    Ok(MedianSamplingDistribution::new(k, dim, n)?.pdf(m))
}
