//! Special functions: modified Bessel functions, closed-form `I_0` bounds,
//! the confluent-hypergeometric table and the kernel machinery.

mod bessel;
mod bounds;
mod kernel;
mod phi;

pub use bessel::{bessel_i0, bessel_i0_scaled, bessel_i1, bessel_i1_scaled, SERIES_LIMIT};
pub use bounds::{
    bessel_i0_bound_loose, bessel_i0_bound_simple, bessel_i0_upper_bound,
    bessel_i0_upper_bound_grid,
};
pub(crate) use kernel::{kernel_derivs_raw, kernel_raw, ln_kernel_raw};
pub use kernel::{
    kernel, kernel_derivatives, kernel_moment, kernel_moment_quadrature,
    kernel_polynomial_inverse, kernel_polynomial_transform, ln_kernel,
};
pub use phi::{PhiTable, GLOBAL_MAX_INDEX};

/// Error function.
pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

use crate::error::{Error, Result};

/// `Γ(x)` for `x > 0`.
pub fn gamma(x: f64) -> Result<f64> {
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::domain("gamma", format!("x = {x}, need finite x > 0")));
    }
    Ok(libm::tgamma(x))
}

/// Kummer's `M(a, b; z)` by direct summation, for `z >= 0` and `b` not a
/// non-positive integer. Intended for moderate `z` (cross-checks).
pub fn kummer_m(a: f64, b: f64, z: f64) -> Result<f64> {
    if !(z.is_finite() && z >= 0.0) {
        return Err(Error::domain("kummer_m", format!("z = {z}, need finite z >= 0")));
    }
    if b <= 0.0 && b.fract() == 0.0 {
        return Err(Error::domain("kummer_m", format!("b = {b} is a non-positive integer")));
    }
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 0..100_000 {
        let nf = n as f64;
        term *= (a + nf) / (b + nf) * z / (nf + 1.0);
        sum += term;
        if term == 0.0 || (term.abs() < 1e-17 * sum.abs() && nf > z) {
            return Ok(sum);
        }
    }
    Err(Error::domain("kummer_m", format!("series did not converge at z = {z}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_matches_factorials_and_half_integers() {
        let mut f = 1.0;
        for n in 1..20 {
            assert!((gamma(n as f64).unwrap() - f).abs() <= 1e-13 * f);
            f *= n as f64;
        }
        let sqrt_pi = std::f64::consts::PI.sqrt();
        assert!((gamma(0.5).unwrap() - sqrt_pi).abs() < 1e-14);
        assert!((gamma(2.5).unwrap() - 0.75 * sqrt_pi).abs() < 1e-14);
        assert!(gamma(0.0).is_err());
    }

    #[test]
    fn gamma_recurrence_on_unit_interval_to_thirty() {
        for k in 1..300 {
            let x = 0.1 * k as f64;
            let lhs = gamma(x + 1.0).unwrap();
            let rhs = x * gamma(x).unwrap();
            assert!((lhs - rhs).abs() <= 1e-13 * lhs, "x = {x}");
            assert!(lhs.is_finite());
        }
    }

    #[test]
    fn kummer_special_cases() {
        // M(a, a; z) = e^z and M(1, 2; z) = (e^z - 1)/z.
        assert!((kummer_m(1.3, 1.3, 2.0).unwrap() - 2f64.exp()).abs() < 1e-13);
        let z: f64 = 3.0;
        assert!((kummer_m(1.0, 2.0, z).unwrap() - (z.exp() - 1.0) / z).abs() < 1e-12);
        assert!(kummer_m(1.0, -1.0, 1.0).is_err());
    }
}
