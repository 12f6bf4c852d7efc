#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use mfsa::synthdata::rng_from_seed;
use mfsa::{Boundary, PointCloud};

/// Two-sided one-sample Kolmogorov-Smirnov statistic.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = samples.to_vec();
    s.sort_unstable_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic critical value of the KS statistic at the 1% level.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.6276 / (n as f64).sqrt()
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &p in &idx[i..=j] {
            r[p] = avg;
        }
        i = j + 1;
    }
    r
}

pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    rng_from_seed(seed)
}

pub fn random_cloud(rng: &mut ChaCha8Rng, n: usize, dim: usize, boundary: Boundary) -> PointCloud {
    let coords = (0..n * dim).map(|_| rng.random::<f64>()).collect();
    PointCloud::new(coords, dim, boundary).unwrap()
}

/// x-coordinate of the Lorenz system (sigma 10, rho 28, beta 8/3) sampled
/// every `dt` after a transient of 5000 RK4 steps.
pub fn lorenz_x(samples: usize, dt: f64) -> Vec<f64> {
    let f = |s: [f64; 3]| [10.0 * (s[1] - s[0]), s[0] * (28.0 - s[2]) - s[1], s[0] * s[1] - 8.0 / 3.0 * s[2]];
    let step = |s: [f64; 3]| {
        let add = |a: [f64; 3], b: [f64; 3], h: f64| [a[0] + h * b[0], a[1] + h * b[1], a[2] + h * b[2]];
        let k1 = f(s);
        let k2 = f(add(s, k1, dt / 2.0));
        let k3 = f(add(s, k2, dt / 2.0));
        let k4 = f(add(s, k3, dt));
        [0, 1, 2].map(|i| s[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
    };
    let mut s = [1.0, 1.0, 1.0];
    for _ in 0..5000 {
        s = step(s);
    }
    (0..samples)
        .map(|_| {
            s = step(s);
            s[0]
        })
        .collect()
}

/// Steady-state amplitude ratio of zero-phase filtering a unit sinusoid,
/// measured by projecting the output on the input frequency over whole
/// periods away from the edges.
pub fn measured_gain(filter: &mfsa::timeseries::Butterworth, freq: f64, seconds: f64) -> f64 {
    use std::f64::consts::PI;
    let rate = filter.rate;
    let n = (seconds * rate) as usize;
    let x: Vec<f64> = (0..n).map(|t| (2.0 * PI * freq * t as f64 / rate).sin()).collect();
    let y = filter.filtfilt(&x).unwrap();
    let per_period = rate / freq;
    let skip = (seconds / 4.0 * rate) as usize;
    let periods = ((n - 2 * skip) as f64 / per_period).floor();
    let len = (periods * per_period).round() as usize;
    let (mut c, mut s) = (0.0, 0.0);
    for t in skip..skip + len {
        let phase = 2.0 * PI * freq * t as f64 / rate;
        c += y[t] * phase.cos();
        s += y[t] * phase.sin();
    }
    2.0 * (c * c + s * s).sqrt() / len as f64
}
