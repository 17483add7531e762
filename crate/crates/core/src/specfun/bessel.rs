//! Modified Bessel functions of the first kind, orders 0 and 1.
//!
//! Power series below [`SERIES_LIMIT`], Hankel asymptotic expansion above.
//! Everything is computed in the exponentially scaled form `e^{-x} I_n(x)`
//! so the kernel can be evaluated for `rR` far beyond the overflow point of
//! `I_0`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Switchover between the power series and the asymptotic expansion.
pub const SERIES_LIMIT: f64 = 15.0;

/// Scaled values `e^{-x} I_0(x)`, `e^{-x} I_1(x)` and `e^{-x} I_1(x) / x`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ScaledI01 {
    pub i0e: f64,
    pub i1e: f64,
    /// `e^{-x} I_1(x) / x`, finite at `x = 0` where it equals 1/2.
    pub i1e_over_x: f64,
}

impl ScaledI01 {
    /// `I_1(x) / I_0(x)`.
    #[inline]
    pub fn ratio(&self) -> f64 {
        self.i1e / self.i0e
    }

    /// `I_1(x) / (x I_0(x))`.
    #[inline]
    pub fn ratio_over_x(&self) -> f64 {
        self.i1e_over_x / self.i0e
    }
}

/// Caller guarantees `x >= 0` and finite.
#[inline]
pub(crate) fn scaled_i01(x: f64) -> ScaledI01 {
    if x < SERIES_LIMIT {
        series_i01(x)
    } else {
        let i0e = asymptotic(0.0, x);
        let i1e = asymptotic(1.0, x);
        ScaledI01 {
            i0e,
            i1e,
            i1e_over_x: i1e / x,
        }
    }
}

#[inline]
fn series_i01(x: f64) -> ScaledI01 {
    let q = 0.25 * x * x;
    let mut t0 = 1.0;
    let mut t1 = 1.0;
    let mut s0 = 1.0;
    let mut s1 = 1.0;
    let mut m = 1.0;
    while m < 200.0 {
        t0 *= q / (m * m);
        t1 *= q / (m * (m + 1.0));
        s0 += t0;
        s1 += t1;
        if t0 <= 1e-17 * s0 && t1 <= 1e-17 * s1 {
            break;
        }
        m += 1.0;
    }
    let scale = (-x).exp();
    ScaledI01 {
        i0e: s0 * scale,
        i1e: 0.5 * x * s1 * scale,
        i1e_over_x: 0.5 * s1 * scale,
    }
}

/// `e^{-x} I_nu(x) ~ (2 pi x)^{-1/2} sum_k (-1)^k a_k(nu) / x^k`.
#[inline]
fn asymptotic(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut term = 1.0_f64;
    let mut sum = 1.0;
    let mut k = 1.0;
    while k < 80.0 {
        let odd = 2.0 * k - 1.0;
        let next = -term * (mu - odd * odd) / (8.0 * k * x);
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
        k += 1.0;
    }
    sum / (2.0 * PI * x).sqrt()
}

fn check_arg(func: &'static str, x: f64) -> Result<()> {
    if !x.is_finite() || x < 0.0 {
        return Err(Error::domain(func, format!("x = {x}, need finite x >= 0")));
    }
    Ok(())
}

/// `I_0(x)` for finite `x >= 0`. Returns `+inf` once the result itself
/// overflows (`x` above roughly 713).
pub fn bessel_i0(x: f64) -> Result<f64> {
    check_arg("bessel_i0", x)?;
    Ok(scaled_i01(x).i0e * x.exp())
}

/// `e^{-x} I_0(x)` for finite `x >= 0`.
pub fn bessel_i0_scaled(x: f64) -> Result<f64> {
    check_arg("bessel_i0_scaled", x)?;
    Ok(scaled_i01(x).i0e)
}

/// `I_1(x)` for finite `x >= 0`.
pub fn bessel_i1(x: f64) -> Result<f64> {
    check_arg("bessel_i1", x)?;
    Ok(scaled_i01(x).i1e * x.exp())
}

/// `e^{-x} I_1(x)` for finite `x >= 0`.
pub fn bessel_i1_scaled(x: f64) -> Result<f64> {
    check_arg("bessel_i1_scaled", x)?;
    Ok(scaled_i01(x).i1e)
}
