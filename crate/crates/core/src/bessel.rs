//! Modified Bessel functions of the second kind from their integral
//! representation `K_nu(x) = int_0^inf exp(-x cosh s) cosh(nu s) ds`.

use std::f64::consts::PI;

use crate::error::{invalid, Result};

/// Above this argument the asymptotic series is used.
const ASYMPTOTIC_FROM: f64 = 50.0;

/// `exp(x) K_nu(x)`.
pub fn bessel_k_scaled(nu: u32, x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(invalid(format!("bessel_k needs a positive finite argument, got {x}")));
    }
    Ok(if x > ASYMPTOTIC_FROM {
        asymptotic_scaled(nu as f64, x)
    } else {
        quadrature_scaled(nu as f64, x)
    })
}

pub fn bessel_k(nu: u32, x: f64) -> Result<f64> {
    Ok(bessel_k_scaled(nu, x)? * (-x).exp())
}

/// Trapezoid rule on `int_0^S exp(-x (cosh s - 1)) cosh(nu s) ds`, halving
/// the step until successive sums agree. The integrand is even and analytic,
/// so the rule converges geometrically.
fn quadrature_scaled(nu: f64, x: f64) -> f64 {
    // Beyond S the integrand is below exp(-60) relative to its peak.
    let upper = (1.0 + 60.0 / x).acosh() + nu.max(1.0).ln_1p();
    let f = |s: f64| (-x * (s.cosh() - 1.0)).exp() * (nu * s).cosh();
    let mut n = 16usize;
    let mut h = upper / n as f64;
    let mut sum = 0.5 * (f(0.0) + f(upper)) + (1..n).map(|k| f(k as f64 * h)).sum::<f64>();
    let mut value = sum * h;
    // The error after a halving is roughly the square of the change it
    // made, so a 1e-12 change leaves the value at rounding level.
    for _ in 0..16 {
        let mids: f64 = (0..n).map(|k| f((k as f64 + 0.5) * h)).sum();
        sum += mids;
        n *= 2;
        h *= 0.5;
        let next = sum * h;
        if (next - value).abs() <= 1e-12 * next.abs() {
            return next;
        }
        value = next;
    }
    value
}

/// `sqrt(pi / 2x) * sum_k a_k(nu) / x^k`, summed until terms stop shrinking.
fn asymptotic_scaled(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..60 {
        let odd = (2 * k - 1) as f64;
        let next = term * (mu - odd * odd) / (k as f64 * 8.0 * x);
        if next.abs() >= term.abs() || next == 0.0 {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    (PI / (2.0 * x)).sqrt() * sum
}

/// Mean area of the planar Brownian unit sausage run for an exponential
/// time of rate `alpha`: `pi` plus the integral of
/// [`hitting_probability_2d`] over `|x| > 1`, which is
/// `Z_alpha = pi + pi sqrt(2 / alpha) K_1(sqrt(2 alpha)) / K_0(sqrt(2 alpha))`.
pub fn z_alpha(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(invalid(format!("z_alpha needs alpha > 0, got {alpha}")));
    }
    let x = (2.0 * alpha).sqrt();
    let ratio = bessel_k_scaled(1, x)? / bessel_k_scaled(0, x)?;
    Ok(PI + 2.0 * PI / x * ratio)
}

/// `P(x in Sigma_T)` for planar Brownian motion, unit sausage and
/// `T ~ Exp(alpha)`, at `|x| = norm >= 1`.
pub fn hitting_probability_2d(norm: f64, alpha: f64) -> Result<f64> {
    if norm <= 1.0 {
        return Ok(1.0);
    }
    let s = (2.0 * alpha).sqrt();
    // Ratio of scaled values avoids underflow at large arguments.
    Ok(bessel_k_scaled(0, norm * s)? / bessel_k_scaled(0, s)? * (-(norm - 1.0) * s).exp())
}

/// The `alpha` with `Z_alpha = z`, for `z > pi`.
pub fn z_alpha_inverse(z: f64) -> Result<f64> {
    if !(z > PI) {
        return Err(invalid(format!("Z_alpha only takes values above pi, got {z}")));
    }
    let (mut lo, mut hi) = (1e-12f64, 1.0f64);
    while z_alpha(hi)? > z {
        hi *= 4.0;
        if hi > 1e300 {
            return Err(invalid("z_alpha_inverse failed to bracket"));
        }
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if z_alpha(mid)? > z {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo < 1.0 + 1e-13 {
            break;
        }
    }
    Ok((lo * hi).sqrt())
}
