//! Zero-mean Gaussian inputs with asymmetric power allocation between the
//! real and imaginary parts.
//!
//! Splitting `P_a = P_r + P_i` trades rate `½ln(1+P_r) + ½ln(1+P_i)` for
//! delivered power: the symmetric split maximizes rate, putting all power
//! in one part maximizes power.

use crate::error::{Error, Result};
use crate::powermodel::{PowerSpec, RectennaModel};

fn check_split(p_a: f64, p_i: f64) -> Result<()> {
    if !(p_a.is_finite() && p_a > 0.0) {
        return Err(Error::domain("gaussian_rp_point", format!("P_a = {p_a}, need P_a > 0")));
    }
    if !(0.0..=p_a).contains(&p_i) {
        return Err(Error::domain(
            "gaussian_rp_point",
            format!("P_i = {p_i} outside [0, {p_a}]"),
        ));
    }
    Ok(())
}

/// Rate in nats of the split `(P_a - P_i, P_i)` at unit noise variance per
/// real dimension.
pub fn gaussian_rate(p_a: f64, p_i: f64) -> Result<f64> {
    check_split(p_a, p_i)?;
    Ok(0.5 * (p_a - p_i).ln_1p() + 0.5 * p_i.ln_1p())
}

/// `(rate, delivered power)` of the split under a rectenna model.
pub fn gaussian_rp_point(p_a: f64, p_i: f64, rect: &RectennaModel) -> Result<(f64, f64)> {
    gaussian_rp_point_for(p_a, p_i, &PowerSpec::Rectenna(*rect))
}

/// [`gaussian_rp_point`] for any power model.
pub fn gaussian_rp_point_for(p_a: f64, p_i: f64, power: &PowerSpec) -> Result<(f64, f64)> {
    let rate = gaussian_rate(p_a, p_i)?;
    Ok((rate, power.gaussian_power(p_a - p_i, p_i)?))
}

/// `(min, max)` of the delivered power over the family, attained at
/// `P_i = P_a/2` and `P_i = 0`.
pub fn gaussian_family_range(p_a: f64, power: &PowerSpec) -> Result<(f64, f64)> {
    Ok((
        gaussian_rp_point_for(p_a, 0.5 * p_a, power)?.1,
        gaussian_rp_point_for(p_a, 0.0, power)?.1,
    ))
}

/// The largest `P_i ∈ [0, P_a/2]` whose delivered power reaches `p_d`.
///
/// For the rectenna model the power is
/// `2α(4P_i² - 4P_aP_i + 3P_a²) + βP_a + γ`, and the root is closed form.
pub fn gaussian_power_allocation(p_a: f64, p_d: f64, rect: &RectennaModel) -> Result<f64> {
    rect.validate()?;
    let power = PowerSpec::Rectenna(*rect);
    let (lo, hi) = gaussian_family_range(p_a, &power)?;
    if p_d <= lo {
        return Ok(0.5 * p_a);
    }
    if p_d > hi * (1.0 + 1e-14) {
        return Err(Error::NoGaussianSolution { requested: p_d, max: hi });
    }
    let a = rect.alpha();
    let c = 6.0 * a * p_a * p_a + rect.beta() * p_a + rect.gamma() - p_d;
    let disc = (0.25 * p_a * p_a - c / (8.0 * a)).max(0.0);
    Ok((0.5 * p_a - disc.sqrt()).clamp(0.0, 0.5 * p_a))
}

/// [`gaussian_power_allocation`] for any power model, by bisection on the
/// power, which decreases in `P_i` over `[0, P_a/2]`.
pub fn gaussian_power_allocation_for(p_a: f64, p_d: f64, power: &PowerSpec) -> Result<f64> {
    if let PowerSpec::Rectenna(rect) = power {
        return gaussian_power_allocation(p_a, p_d, rect);
    }
    let (lo, hi) = gaussian_family_range(p_a, power)?;
    if p_d <= lo {
        return Ok(0.5 * p_a);
    }
    if p_d > hi * (1.0 + 1e-14) {
        return Err(Error::NoGaussianSolution { requested: p_d, max: hi });
    }
    let (mut a, mut b) = (0.0, 0.5 * p_a);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if power.gaussian_power(p_a - mid, mid)? >= p_d {
            a = mid;
        } else {
            b = mid;
        }
        if b - a <= 1e-15 * p_a {
            break;
        }
    }
    Ok(a)
}
