//! Closed-form upper bounds on `I_0`.

use std::f64::consts::PI;

use libm::erf;

use crate::error::{Error, Result};

/// `â = (1/sqrt(1-a) - 1) / (2 sqrt(a))`, written without cancellation.
fn a_hat(a: f64) -> f64 {
    if a == 0.0 {
        return 0.0;
    }
    let s = (1.0 - a).sqrt();
    a.sqrt() / (2.0 * s * (1.0 + s))
}

/// The one-parameter upper bound
/// `e^x (â(1 - e^{-2ax})/(pi x) + erf(sqrt(2ax))/sqrt(2 pi x) + e^{-2ax})`,
/// valid for every `a` in `[0, 1)`. At `x = 0` the analytic limit
/// `1 + sqrt(a)/pi + sqrt(a)/(pi sqrt(1-a))` is returned.
pub fn bessel_i0_upper_bound(x: f64, a: f64) -> Result<f64> {
    if !x.is_finite() || x < 0.0 {
        return Err(Error::domain("bessel_i0_upper_bound", format!("x = {x}")));
    }
    if !(0.0..1.0).contains(&a) {
        return Err(Error::domain(
            "bessel_i0_upper_bound",
            format!("a = {a}, need 0 <= a < 1"),
        ));
    }
    if x == 0.0 {
        let sa = a.sqrt();
        return Ok(1.0 + sa / PI + sa / (PI * (1.0 - a).sqrt()));
    }
    let two_ax = 2.0 * a * x;
    let body = a_hat(a) * (-(-two_ax).exp_m1()) / (PI * x)
        + erf(two_ax.sqrt()) / (2.0 * PI * x).sqrt()
        + (-two_ax).exp();
    Ok(x.exp() * body)
}

/// Minimum of [`bessel_i0_upper_bound`] over the midpoints of `grid_n`
/// equal cells of `[0, 1)`. Returns `(bound, a)`. The exact minimizer is not
/// characterized; a finer grid only tightens the result.
pub fn bessel_i0_upper_bound_grid(x: f64, grid_n: usize) -> Result<(f64, f64)> {
    let n = grid_n.max(1);
    let mut best = (f64::INFINITY, 0.0);
    for j in 0..n {
        let a = (j as f64 + 0.5) / n as f64;
        let v = bessel_i0_upper_bound(x, a)?;
        if v < best.0 {
            best = (v, a);
        }
    }
    Ok(best)
}

/// Looser bound `e^x / sqrt(pi x) + 1`, from `a = 1/2`. Requires `x > 0`.
pub fn bessel_i0_bound_loose(x: f64) -> Result<f64> {
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::domain("bessel_i0_bound_loose", format!("x = {x}, need x > 0")));
    }
    Ok(x.exp() / (PI * x).sqrt() + 1.0)
}

/// Simplest bound `e^x / sqrt(x)`. Requires `x > 0`.
pub fn bessel_i0_bound_simple(x: f64) -> Result<f64> {
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::domain("bessel_i0_bound_simple", format!("x = {x}, need x > 0")));
    }
    Ok(x.exp() / x.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::bessel_i0;

    #[test]
    fn limit_at_zero() {
        let got = bessel_i0_upper_bound(0.0, 0.25).unwrap();
        let want = 1.0 + 0.5 / PI + 0.5 / (PI * 0.75f64.sqrt());
        assert!((got - want).abs() < 1e-15);
        // The x -> 0+ side approaches the same value.
        let near = bessel_i0_upper_bound(1e-9, 0.25).unwrap();
        assert!((near - want).abs() < 1e-6);
    }

    #[test]
    fn bounds_i0_at_one() {
        let b = bessel_i0_upper_bound(1.0, 0.5).unwrap();
        assert!(b > bessel_i0(1.0).unwrap());
    }

    #[test]
    fn tighter_than_loose_bound_at_ten() {
        let b = bessel_i0_upper_bound(10.0, 0.5).unwrap();
        assert!(b <= 10f64.exp() / (PI * 10.0).sqrt() + 1.0);
    }

    #[test]
    fn a_hat_is_stable_for_tiny_a() {
        let a = 1e-14;
        assert!((a_hat(a) - a.sqrt() / 4.0).abs() < 1e-20);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(bessel_i0_upper_bound(1.0, 1.0).is_err());
        assert!(bessel_i0_upper_bound(1.0, -0.1).is_err());
        assert!(bessel_i0_upper_bound(-1.0, 0.5).is_err());
        assert!(bessel_i0_bound_loose(0.0).is_err());
    }

    #[test]
    fn grid_minimum_is_a_valid_bound() {
        for &x in &[0.0, 0.3, 2.0, 9.0, 40.0] {
            let (b, a) = bessel_i0_upper_bound_grid(x, 20).unwrap();
            assert!((0.0..1.0).contains(&a));
            assert!(b > bessel_i0(x).unwrap());
        }
    }
}
