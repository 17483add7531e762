//! The Rice-type kernel `K(R, r) = R e^{-(R^2 + r^2)/2} I_0(rR)`, its
//! moments and the polynomial transform `G -> ∫ K(R, r) G(R) dR`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use super::bessel::scaled_i01;
use super::phi::{moment_prefactor, PhiTable};
use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadratureSpec};

fn check_nonneg(func: &'static str, name: &str, v: f64) -> Result<()> {
    if !v.is_finite() || v < 0.0 {
        return Err(Error::domain(func, format!("{name} = {v}, need finite {name} >= 0")));
    }
    Ok(())
}

/// `K(R, r)` without argument checks.
#[inline]
pub(crate) fn kernel_raw(big_r: f64, r: f64) -> f64 {
    if big_r <= 0.0 {
        return 0.0;
    }
    let d = big_r - r;
    big_r * (-0.5 * d * d).exp() * scaled_i01(r * big_r).i0e
}

/// `ln K(R, r)` without argument checks; `-inf` at `R = 0`.
#[inline]
pub(crate) fn ln_kernel_raw(big_r: f64, r: f64) -> f64 {
    if big_r <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let d = big_r - r;
    big_r.ln() - 0.5 * d * d + scaled_i01(r * big_r).i0e.ln()
}

/// `K` and its first two derivatives with respect to the input amplitude
/// `r`, without argument checks.
#[inline]
pub(crate) fn kernel_derivs_raw(big_r: f64, r: f64) -> (f64, f64, f64) {
    if big_r <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let d = big_r - r;
    let b = scaled_i01(r * big_r);
    let k = big_r * (-0.5 * d * d).exp() * b.i0e;
    let rho = b.ratio();
    let drho = 1.0 - b.ratio_over_x() - rho * rho;
    let s = big_r * rho - r;
    (k, k * s, k * (s * s - 1.0 + big_r * big_r * drho))
}

/// `K(R, r)` for `R, r >= 0`. Stable for large `rR`.
pub fn kernel(big_r: f64, r: f64) -> Result<f64> {
    check_nonneg("kernel", "R", big_r)?;
    check_nonneg("kernel", "r", r)?;
    Ok(kernel_raw(big_r, r))
}

/// `ln K(R, r)`; `-inf` at `R = 0`.
pub fn ln_kernel(big_r: f64, r: f64) -> Result<f64> {
    check_nonneg("ln_kernel", "R", big_r)?;
    check_nonneg("ln_kernel", "r", r)?;
    Ok(ln_kernel_raw(big_r, r))
}

/// `(K, ∂K/∂r, ∂²K/∂r²)` at `(R, r)`.
pub fn kernel_derivatives(big_r: f64, r: f64) -> Result<(f64, f64, f64)> {
    check_nonneg("kernel_derivatives", "R", big_r)?;
    check_nonneg("kernel_derivatives", "r", r)?;
    Ok(kernel_derivs_raw(big_r, r))
}

/// `∫_0^∞ R^b K(R, r) dR` for `b > -2`.
///
/// Even integer `b` goes through the exact polynomial table
/// (`2^i i! Phi_r(i+1, 1)` with `b = 2i`); other exponents are integrated
/// numerically.
pub fn kernel_moment(b: f64, r: f64) -> Result<f64> {
    if !b.is_finite() || b <= -2.0 {
        return Err(Error::domain("kernel_moment", format!("b = {b}, need b > -2")));
    }
    check_nonneg("kernel_moment", "r", r)?;
    if b >= 0.0 && b.fract() == 0.0 && (b as usize).is_multiple_of(2) {
        let i = b as usize / 2;
        if i < PhiTable::global().max_index() {
            return Ok(even_moment(i, r));
        }
    }
    kernel_moment_quadrature(b, r, &QuadratureSpec::default())
}

fn even_moment(i: usize, r: f64) -> f64 {
    let pre = moment_prefactor(i).to_f64().unwrap_or(f64::INFINITY);
    pre * PhiTable::global()
        .eval(i + 1, 1, r)
        .expect("index checked against table size")
}

/// `∫_0^∞ R^b K(R, r) dR` by adaptive quadrature, any `b > -2`.
///
/// For `b < 0` the substitution `R = t^s` removes the endpoint singularity.
pub fn kernel_moment_quadrature(b: f64, r: f64, spec: &QuadratureSpec) -> Result<f64> {
    if !b.is_finite() || b <= -2.0 {
        return Err(Error::domain(
            "kernel_moment_quadrature",
            format!("b = {b}, need b > -2"),
        ));
    }
    check_nonneg("kernel_moment_quadrature", "r", r)?;
    let upper = r + spec.tail_margin + 2.0 * b.max(0.0).sqrt();
    let mut breaks = vec![0.0, (r - 3.0).max(0.0), r, r + 3.0, upper];
    breaks.retain(|&x| x <= upper);
    let est = if b >= 0.0 {
        integrate(|x| x.powf(b) * kernel_raw(x, r), &breaks, spec)?
    } else {
        let s = (2.0 / (b + 2.0)).ceil();
        let t_breaks: Vec<f64> = breaks.iter().map(|x| x.powf(1.0 / s)).collect();
        integrate(
            |t| {
                if t <= 0.0 {
                    return 0.0;
                }
                let x = t.powf(s);
                s * t.powf(s - 1.0) * x.powf(b) * kernel_raw(x, r)
            },
            &t_breaks,
            spec,
        )?
    };
    Ok(est.value)
}

/// `∫_0^∞ K(R, r) G(R) dR` with `G(R) = Σ c_i R^{2i}`.
pub fn kernel_polynomial_transform(c: &[f64], r: f64) -> Result<f64> {
    check_nonneg("kernel_polynomial_transform", "r", r)?;
    let table = PhiTable::global();
    if c.len() > table.max_index() {
        return Err(Error::domain(
            "kernel_polynomial_transform",
            format!("degree {} exceeds table size {}", c.len() - 1, table.max_index() - 1),
        ));
    }
    Ok(c
        .iter()
        .enumerate()
        .filter(|(_, ci)| **ci != 0.0)
        .map(|(i, ci)| ci * even_moment(i, r))
        .sum())
}

/// Coefficients `c` with `kernel_polynomial_transform(c, r) = Σ α_i r^{2i}`
/// for every `r`.
///
/// The transform is upper triangular with unit diagonal in the monomial
/// basis of `r^2`, so back-substitution from the top degree is exact in
/// rational arithmetic; only the final conversion rounds.
pub fn kernel_polynomial_inverse(alpha: &[f64]) -> Result<Vec<f64>> {
    let table = PhiTable::global();
    if alpha.len() > table.max_index() {
        return Err(Error::domain(
            "kernel_polynomial_inverse",
            format!("degree {} exceeds table size", alpha.len().saturating_sub(1)),
        ));
    }
    let mut target = Vec::with_capacity(alpha.len());
    for &a in alpha {
        target.push(BigRational::from_float(a).ok_or_else(|| {
            Error::domain("kernel_polynomial_inverse", format!("coefficient {a} is not finite"))
        })?);
    }
    let n = target.len();
    let mut c = vec![BigRational::zero(); n];
    for k in (0..n).rev() {
        let mut v = target[k].clone();
        for (i, ci) in c.iter().enumerate().skip(k + 1) {
            if ci.is_zero() {
                continue;
            }
            let phi = &table.coefficients(i + 1, 1).expect("in range")[k];
            let pre = BigRational::from_integer(moment_prefactor(i));
            v -= ci * &pre * phi;
        }
        // Diagonal: 2^k k! times the leading coefficient 1/(2^k k!) is one.
        debug_assert_eq!(
            BigRational::from_integer(moment_prefactor(k))
                * table.coefficients(k + 1, 1).expect("in range")[k].clone(),
            BigRational::from_integer(BigInt::from(1))
        );
        c[k] = v;
    }
    Ok(c.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect())
}
