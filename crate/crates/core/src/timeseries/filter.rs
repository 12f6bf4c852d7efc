//! Digital Butterworth bandpass as cascaded biquads, with zero-phase
//! (forward-backward) application.

use std::f64::consts::PI;

use nalgebra::Complex;

use super::MultiChannelSeries;
use crate::error::{Error, Result};

/// One second-order section `(b0, b1, b2) / (1, a1, a2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sos {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

impl Sos {
    fn response(&self, z_inv: Complex<f64>) -> Complex<f64> {
        let num = self.b[0] + z_inv * (self.b[1] + z_inv * self.b[2]);
        let den = self.a[0] + z_inv * (self.a[1] + z_inv * self.a[2]);
        num / den
    }

    /// Transposed direct form II state reached after a long constant input `x`.
    fn steady_state(&self, x: f64) -> ([f64; 2], f64) {
        let y = x * self.b.iter().sum::<f64>() / self.a.iter().sum::<f64>();
        let z2 = self.b[2] * x - self.a[2] * y;
        let z1 = self.b[1] * x - self.a[1] * y + z2;
        ([z1, z2], y)
    }
}

/// Butterworth bandpass designed by the bilinear transform with
/// prewarped band edges.
#[derive(Debug, Clone, PartialEq)]
pub struct Butterworth {
    pub sections: Vec<Sos>,
    pub low_hz: f64,
    pub high_hz: f64,
    pub order: usize,
    pub rate: f64,
}

impl Butterworth {
    /// `order` is the total bandpass order (even); `order / 2` biquads.
    pub fn bandpass(low_hz: f64, high_hz: f64, order: usize, rate: f64) -> Result<Self> {
        if !(rate > 0.0) {
            return Err(Error::arg("sampling rate must be positive"));
        }
        if !(low_hz > 0.0 && low_hz < high_hz && high_hz < rate / 2.0) {
            return Err(Error::arg(format!(
                "band {low_hz}-{high_hz} Hz must satisfy 0 < low < high < Nyquist ({} Hz)",
                rate / 2.0
            )));
        }
        if order == 0 || order % 2 != 0 {
            return Err(Error::arg(format!("bandpass order must be even and positive, got {order}")));
        }
        let proto = order / 2;
        let (wl, wh) = ((PI * low_hz / rate).tan(), (PI * high_hz / rate).tan());
        let bw = wh - wl;
        let w0_sq = wl * wh;

        let to_z = |s: Complex<f64>| (Complex::new(1.0, 0.0) + s) / (Complex::new(1.0, 0.0) - s);
        let lp_to_bp = |p: Complex<f64>| {
            let pb = p * bw;
            let disc = (pb * pb - 4.0 * w0_sq).sqrt();
            ((pb + disc) * 0.5, (pb - disc) * 0.5)
        };
        let biquad = |z: Complex<f64>, w: Complex<f64>| Sos {
            b: [1.0, 0.0, -1.0],
            a: [1.0, -(z + w).re, (z * w).re],
        };

        let mut sections = Vec::with_capacity(proto);
        for m in 0..proto {
            let theta = PI * (2 * m + proto + 1) as f64 / (2 * proto) as f64;
            let p = Complex::from_polar(1.0, theta);
            if p.im > 1e-12 {
                let (s1, s2) = lp_to_bp(p);
                let (z1, z2) = (to_z(s1), to_z(s2));
                sections.push(biquad(z1, z1.conj()));
                sections.push(biquad(z2, z2.conj()));
            } else if p.im.abs() <= 1e-12 {
                let (s1, s2) = lp_to_bp(Complex::new(p.re, 0.0));
                sections.push(biquad(to_z(s1), to_z(s2)));
            }
        }

        // unit gain at the geometric center frequency
        let w_center = 2.0 * w0_sq.sqrt().atan();
        let z_inv = Complex::from_polar(1.0, -w_center);
        let gain: f64 = sections.iter().map(|s| s.response(z_inv)).product::<Complex<f64>>().norm();
        let per_section = gain.powf(-1.0 / sections.len() as f64);
        for s in &mut sections {
            s.b.iter_mut().for_each(|b| *b *= per_section);
        }
        Ok(Self { sections, low_hz, high_hz, order, rate })
    }

    /// `|H|` of one pass at `freq_hz`.
    pub fn magnitude(&self, freq_hz: f64) -> f64 {
        let z_inv = Complex::from_polar(1.0, -2.0 * PI * freq_hz / self.rate);
        self.sections.iter().map(|s| s.response(z_inv)).product::<Complex<f64>>().norm()
    }

    /// Causal filtering starting from the steady state of `x[0]`.
    pub fn filter(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        let mut level = x.first().copied().unwrap_or(0.0);
        for s in &self.sections {
            let ([mut z1, mut z2], out_level) = s.steady_state(level);
            for v in y.iter_mut() {
                let input = *v;
                let out = s.b[0] * input + z1;
                z1 = s.b[1] * input - s.a[1] * out + z2;
                z2 = s.b[2] * input - s.a[2] * out;
                *v = out;
            }
            level = out_level;
        }
        y
    }

    fn pad_len(&self) -> usize {
        3 * (2 * self.sections.len() + 1)
    }

    /// Forward-backward filtering with odd reflection padding.
    pub fn filtfilt(&self, x: &[f64]) -> Result<Vec<f64>> {
        let pad = self.pad_len();
        if x.len() <= pad {
            return Err(Error::InsufficientLength { needed: pad + 1, have: x.len() });
        }
        let (first, last) = (x[0], x[x.len() - 1]);
        let mut ext = Vec::with_capacity(x.len() + 2 * pad);
        ext.extend((1..=pad).rev().map(|i| 2.0 * first - x[i]));
        ext.extend_from_slice(x);
        ext.extend((1..=pad).map(|i| 2.0 * last - x[x.len() - 1 - i]));
        let mut y = self.filter(&ext);
        y.reverse();
        let mut y = self.filter(&y);
        y.reverse();
        Ok(y[pad..pad + x.len()].to_vec())
    }
}

/// Analytic power response of the zero-phase filter: `1 / (1 + Ω^(2N))`
/// with the prewarped lowpass-prototype frequency
/// `Ω = (W² - Wl·Wh) / (W (Wh - Wl))`, `W = tan(π f / rate)`, `N = order / 2`.
pub fn zero_phase_gain(freq_hz: f64, low_hz: f64, high_hz: f64, order: usize, rate: f64) -> f64 {
    let w = (PI * freq_hz / rate).tan();
    let (wl, wh) = ((PI * low_hz / rate).tan(), (PI * high_hz / rate).tan());
    let omega = (w * w - wl * wh) / (w * (wh - wl));
    1.0 / (1.0 + omega.powi(order as i32))
}

/// Zero-phase Butterworth bandpass applied to every channel.
pub fn bandpass(series: &MultiChannelSeries, low_hz: f64, high_hz: f64, order: usize) -> Result<MultiChannelSeries> {
    let filt = Butterworth::bandpass(low_hz, high_hz, order, series.rate())?;
    let channels = series.channels().iter().map(|ch| filt.filtfilt(ch)).collect::<Result<Vec<_>>>()?;
    Ok(series.map_channels(channels))
}
