//! Fast invariant battery behind `swipt selftest`.

use serde::Serialize;
use swipt_core::distributions::Cscg;
use swipt_core::entropy::{cscg_entropy, entropy_H, entropy_of_law};
use swipt_core::powermodel::{SincSeriesConstants, SincSum};
use swipt_core::solver::gaussian_rate;
use swipt_core::specfun::{
    bessel_i0, bessel_i0_bound_loose, bessel_i0_bound_simple, bessel_i0_upper_bound_grid,
    kernel_moment, kernel_moment_quadrature, kernel_polynomial_inverse,
    kernel_polynomial_transform,
};
use swipt_core::{AmplitudeConvention, AmplitudeDistribution, InputLaw, QuadratureSpec};

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Worst deviation seen, in the check's own units.
    pub worst: f64,
    pub tolerance: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            out.push_str(&format!(
                "{} {:<28} worst {:.3e} (tol {:.0e}) {}\n",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.worst,
                c.tolerance,
                c.detail
            ));
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        out.push_str(&format!("{} checks, {failed} failed\n", self.checks.len()));
        out
    }
}

fn check(name: impl Into<String>, worst: f64, tolerance: f64, detail: impl Into<String>) -> Check {
    Check {
        name: name.into(),
        passed: worst <= tolerance,
        worst,
        tolerance,
        detail: detail.into(),
    }
}

fn failed(name: impl Into<String>, err: impl std::fmt::Display) -> Check {
    Check {
        name: name.into(),
        passed: false,
        worst: f64::INFINITY,
        tolerance: 0.0,
        detail: err.to_string(),
    }
}

/// Runs every check. `reference` holds the sinc-series values the computed
/// ones are compared with; the exact constants unless a test alters them.
pub fn run(reference: &SincSeriesConstants) -> Report {
    let q = QuadratureSpec::default();
    let mut checks = Vec::new();
    sinc_series(reference, &mut checks);
    checks.push(bessel_bounds().unwrap_or_else(|e| failed("bessel-bounds", e)));
    checks.push(kernel_normalization(&q).unwrap_or_else(|e| failed("kernel-normalization", e)));
    checks.push(kernel_moments(&q).unwrap_or_else(|e| failed("kernel-moments", e)));
    checks.push(pure_noise(&q).unwrap_or_else(|e| failed("pure-noise-entropy", e)));
    checks.push(cscg_identity(&q).unwrap_or_else(|e| failed("cscg-identity", e)));
    checks.push(transform_roundtrip().unwrap_or_else(|e| failed("kernel-transform-roundtrip", e)));
    checks.push(gaussian_endpoints().unwrap_or_else(|e| failed("gaussian-endpoints", e)));
    Report {
        passed: checks.iter().all(|c| c.passed),
        checks,
    }
}

fn sinc_series(reference: &SincSeriesConstants, checks: &mut Vec<Check>) {
    let computed = match SincSeriesConstants::tail_corrected(1000) {
        Ok(c) => c.via_identities(),
        Err(e) => {
            checks.push(failed("sinc-series", e));
            return;
        }
    };
    for w in SincSum::ALL {
        let (got, want) = (computed.get(w), reference.get(w));
        checks.push(check(
            format!("sinc-series:{}", w.name()),
            (got - want).abs(),
            1e-8,
            format!("computed {got:.12}, reference {want:.12}"),
        ));
    }
}

fn bessel_bounds() -> swipt_core::Result<Check> {
    // Worst relative slack below zero means a bound was violated.
    let mut worst: f64 = 0.0;
    let mut at = 0.0;
    for k in 0..=200 {
        let x = 0.25 * f64::from(k);
        let i0 = bessel_i0(x)?;
        let mut bounds = vec![bessel_i0_upper_bound_grid(x, 64)?.0];
        if x > 0.0 {
            bounds.push(bessel_i0_bound_loose(x)?);
            bounds.push(bessel_i0_bound_simple(x)?);
        }
        for b in bounds {
            let excess = (i0 - b) / i0;
            if excess > worst {
                worst = excess;
                at = x;
            }
        }
    }
    Ok(check("bessel-bounds", worst, 1e-14, format!("x in [0, 50], worst at x = {at}")))
}

fn kernel_normalization(q: &QuadratureSpec) -> swipt_core::Result<Check> {
    let mut worst: f64 = 0.0;
    for r in [0.0, 0.3, 1.0, 2.5, 5.0, 12.0, 30.0] {
        worst = worst.max((kernel_moment_quadrature(0.0, r, q)? - 1.0).abs());
    }
    Ok(check("kernel-normalization", worst, 1e-8, "integral of K(., r) for r up to 30"))
}

fn kernel_moments(q: &QuadratureSpec) -> swipt_core::Result<Check> {
    let mut worst: f64 = 0.0;
    for b in [2.0, 4.0, 6.0, 8.0] {
        for r in [0.0, 0.7, 2.0, 6.0] {
            let exact = kernel_moment(b, r)?;
            let numeric = kernel_moment_quadrature(b, r, q)?;
            worst = worst.max((exact - numeric).abs() / exact.abs().max(1.0));
        }
    }
    Ok(check("kernel-moments", worst, 1e-8, "closed form against quadrature, b = 2..8"))
}

fn pure_noise(q: &QuadratureSpec) -> swipt_core::Result<Check> {
    let h = entropy_H(&AmplitudeDistribution::point_mass(0.0), q)?;
    Ok(check("pure-noise-entropy", (h - 1.0).abs(), 1e-8, format!("H = {h:.12}")))
}

fn cscg_identity(q: &QuadratureSpec) -> swipt_core::Result<Check> {
    let mut worst: f64 = 0.0;
    for p_a in [1.0, 5.0, 10.0] {
        let conv = AmplitudeConvention::PowerConsistent;
        let law = InputLaw::Cscg(Cscg::new(p_a, conv)?);
        worst = worst.max((entropy_of_law(&law, q)? - cscg_entropy(p_a, conv)).abs());
    }
    Ok(check("cscg-identity", worst, 1e-8, "H = ln(1 + P_a/2) + 1 at P_a = 1, 5, 10"))
}

fn transform_roundtrip() -> swipt_core::Result<Check> {
    let mut worst: f64 = 0.0;
    for alpha in [vec![0.01, 0.01, 0.01], vec![1.0, -2.0, 0.5, 0.1], vec![0.0, 0.0, 0.0, 0.0, 1.0]] {
        let c = kernel_polynomial_inverse(&alpha)?;
        for r in [0.0f64, 0.5, 1.5, 3.0, 7.0] {
            let want: f64 = alpha.iter().enumerate().map(|(i, a)| a * r.powi(2 * i as i32)).sum();
            let got = kernel_polynomial_transform(&c, r)?;
            worst = worst.max((got - want).abs() / want.abs().max(1.0));
        }
    }
    Ok(check("kernel-transform-roundtrip", worst, 1e-9, "inverse then forward transform"))
}

fn gaussian_endpoints() -> swipt_core::Result<Check> {
    let sym = gaussian_rate(5.0, 2.5)?;
    let one = gaussian_rate(5.0, 0.0)?;
    let worst = (sym - 3.5f64.ln()).abs().max((one - 0.5 * 6f64.ln()).abs());
    Ok(check(
        "gaussian-endpoints",
        worst,
        1e-12,
        format!("rates {sym:.12} and {one:.12} at P_a = 5"),
    ))
}
