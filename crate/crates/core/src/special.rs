//! Beta-function family used by the FSA distributions.

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

const MAX_ITER: usize = 20_000;
const EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;

/// `ln B(a, b)` for `a, b > 0`.
pub fn ln_beta(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) || !a.is_finite() || !b.is_finite() {
        return Err(Error::arg(format!("beta parameters must be positive, got ({a}, {b})")));
    }
    Ok(ln_beta_unchecked(a, b))
}

pub(crate) fn ln_beta_unchecked(a: f64, b: f64) -> f64 {
    if a.fract() == 0.0 && b.fract() == 0.0 && a + b < 200.0 {
        // exact factorial sums are more accurate than the gamma cancellation
        return ln_factorial(a as u64 - 1) + ln_factorial(b as u64 - 1) - ln_factorial((a + b) as u64 - 1);
    }
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

fn ln_factorial(m: u64) -> f64 {
    (2..=m).map(|i| (i as f64).ln()).sum()
}

/// Regularized incomplete beta function `I_x(a, b)`.
///
/// Evaluated with the modified Lentz continued fraction on whichever of
/// `I_x(a, b)` and `1 - I_{1-x}(b, a)` converges faster. For the symmetric
/// case `a == b` the switch point is `x = 1/2`.
pub fn regularized_incomplete_beta(x: f64, a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) || !a.is_finite() || !b.is_finite() {
        return Err(Error::arg(format!("beta parameters must be positive, got ({a}, {b})")));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::arg(format!("incomplete beta argument {x} outside [0, 1]")));
    }
    Ok(beta_reg_unchecked(x, a, b))
}

pub(crate) fn beta_reg_unchecked(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let front = front_factor(x, a, b);
    let direct = if a == b { x <= 0.5 } else { x < (a + 1.0) / (a + b + 2.0) };
    if direct {
        (front / a) * continued_fraction(x, a, b)
    } else {
        1.0 - (front / b) * continued_fraction(1.0 - x, b, a)
    }
}

/// `x^a (1-x)^b / B(a, b)`.
fn front_factor(x: f64, a: f64, b: f64) -> f64 {
    if a.fract() == 0.0 && b.fract() == 0.0 && a + b < 200.0 {
        // direct powers avoid the cancellation in the log-space form
        let front = x.powf(a) * (1.0 - x).powf(b) * inverse_beta_integer(a as u64, b as u64);
        if front.is_normal() {
            return front;
        }
    }
    (a * x.ln() + b * (-x).ln_1p() - ln_beta_unchecked(a, b)).exp()
}

/// `1 / B(a, b) = (a + b - 1) C(a + b - 2, a - 1)` for positive integers.
fn inverse_beta_integer(a: u64, b: u64) -> f64 {
    let (n, r) = (a + b - 2, (a - 1).min(b - 1));
    let binom = (1..=r).fold(1.0, |acc, i| acc * (n - r + i) as f64 / i as f64);
    (a + b - 1) as f64 * binom
}

fn continued_fraction(x: f64, a: f64, b: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            return h;
        }
    }
    log::warn!("incomplete beta continued fraction did not converge (x={x}, a={a}, b={b})");
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints() {
        for k in 1..=10 {
            let k = k as f64;
            assert_eq!(regularized_incomplete_beta(0.0, k, k).unwrap(), 0.0);
            assert_eq!(regularized_incomplete_beta(1.0, k, k).unwrap(), 1.0);
        }
    }

    #[test]
    fn symmetric_midpoint_is_half() {
        for k in 1..=50 {
            let v = regularized_incomplete_beta(0.5, k as f64, k as f64).unwrap();
            assert!((v - 0.5).abs() < 1e-14, "k={k}: {v}");
        }
    }

    #[test]
    fn uniform_case_is_identity() {
        for &x in &[0.01, 0.2, 0.5, 0.77, 0.999] {
            let v = regularized_incomplete_beta(x, 1.0, 1.0).unwrap();
            assert!((v - x).abs() < 1e-14);
        }
    }

    #[test]
    fn k2_polynomial() {
        // I_x(2,2) = 3x^2 - 2x^3
        let v = regularized_incomplete_beta(0.3, 2.0, 2.0).unwrap();
        assert!((v - 0.216).abs() < 1e-14);
        for i in 1..100 {
            let x = i as f64 / 100.0;
            let v = regularized_incomplete_beta(x, 2.0, 2.0).unwrap();
            assert!((v - (3.0 * x * x - 2.0 * x * x * x)).abs() < 1e-13);
        }
    }

    #[test]
    fn ln_beta_small_integers() {
        // B(2,3) = 1/12
        assert!((ln_beta(2.0, 3.0).unwrap() - (1.0f64 / 12.0).ln()).abs() < 1e-14);
        assert!((ln_beta(1.0, 1.0).unwrap()).abs() < 1e-15);
        assert!((ln_beta(0.5, 0.5).unwrap() - std::f64::consts::PI.ln()).abs() < 1e-13);
    }

    #[test]
    fn domain_errors() {
        assert!(regularized_incomplete_beta(-0.1, 1.0, 1.0).is_err());
        assert!(regularized_incomplete_beta(1.1, 1.0, 1.0).is_err());
        assert!(regularized_incomplete_beta(0.5, 0.0, 1.0).is_err());
        assert!(ln_beta(-1.0, 1.0).is_err());
    }
}
