//! Output-amplitude density and the entropy functionals.
//!
//! With noise variance one per real dimension the output amplitude has
//! density `f(R) = ∫ K(R, r) dF(r)`, and the rate of a uniform-phase input
//! is `H(F) - 1` nats with `H(F) = -∫ f ln(f/R) dR`. Densities are combined
//! in log space so `ln f` stays finite far into the tails.

use crate::distributions::{AmplitudeDistribution, Cscg, InputLaw, MixtureBase, MixtureSpec};
use crate::error::Result;
use crate::powermodel::AmplitudeConvention;
use crate::quadrature::{integrate, QuadratureSpec};
use crate::specfun::{kernel_raw, ln_kernel_raw};

/// Below this density the entropy integrand is taken as zero.
const DENSITY_FLOOR: f64 = 1e-300;

/// `f(R) = Σ_j p_j K(R, r_j)`.
pub fn output_density(d: &AmplitudeDistribution, big_r: f64) -> f64 {
    d.points().iter().map(|&(r, p)| p * kernel_raw(big_r, r)).sum()
}

/// `ln f(R)`, by log-sum-exp over the mass points.
pub fn ln_output_density(d: &AmplitudeDistribution, big_r: f64) -> f64 {
    ln_mixture(d.points(), big_r, 0.0)
}

fn ln_mixture(points: &[(f64, f64)], big_r: f64, ln_weight: f64) -> f64 {
    if big_r <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let mut max = f64::NEG_INFINITY;
    let mut terms = [0.0f64; 32];
    let mut heap_terms = Vec::new();
    let store: &mut [f64] = if points.len() <= terms.len() {
        &mut terms[..points.len()]
    } else {
        heap_terms.resize(points.len(), 0.0);
        &mut heap_terms
    };
    for (t, &(r, p)) in store.iter_mut().zip(points) {
        *t = if p > 0.0 {
            p.ln() + ln_kernel_raw(big_r, r)
        } else {
            f64::NEG_INFINITY
        };
        max = max.max(*t);
    }
    if max == f64::NEG_INFINITY {
        return max;
    }
    let s: f64 = store.iter().map(|t| (t - max).exp()).sum();
    ln_weight + max + s.ln()
}

fn ln_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// `ln` of the Rayleigh output density `(2R/v) e^{-R²/v}`, `v = E[R²]`.
fn ln_rayleigh(big_r: f64, v: f64) -> f64 {
    if big_r <= 0.0 {
        return f64::NEG_INFINITY;
    }
    (2.0 * big_r / v).ln() - big_r * big_r / v
}

/// Output law of any supported input, reduced to what the integrals need.
enum OutputModel<'a> {
    Discrete(&'a AmplitudeDistribution),
    Rayleigh { v: f64 },
    Mixture {
        ln_w_base: f64,
        base: Box<OutputModel<'a>>,
        ln_w_spike: f64,
        spike: &'a AmplitudeDistribution,
    },
}

impl<'a> OutputModel<'a> {
    fn of_cscg(c: &Cscg) -> Self {
        // Received power adds the noise power 2.
        OutputModel::Rayleigh { v: c.scale() + 2.0 }
    }

    fn of_mixture(m: &'a MixtureSpec) -> Self {
        let base = match &m.base {
            MixtureBase::Discrete(d) => OutputModel::Discrete(d),
            MixtureBase::Cscg(c) => OutputModel::of_cscg(c),
        };
        OutputModel::Mixture {
            ln_w_base: (-m.tau).ln_1p(),
            base: Box::new(base),
            ln_w_spike: m.tau.ln(),
            spike: &m.spike,
        }
    }

    fn of_law(law: &'a InputLaw) -> Self {
        match law {
            InputLaw::Discrete(d) => OutputModel::Discrete(d),
            InputLaw::Cscg(c) => OutputModel::of_cscg(c),
            InputLaw::Mixture(m) => OutputModel::of_mixture(m),
        }
    }

    fn ln_density(&self, big_r: f64) -> f64 {
        match self {
            OutputModel::Discrete(d) => ln_output_density(d, big_r),
            OutputModel::Rayleigh { v } => ln_rayleigh(big_r, *v),
            OutputModel::Mixture {
                ln_w_base,
                base,
                ln_w_spike,
                spike,
            } => ln_add(
                ln_w_base + base.ln_density(big_r),
                ln_mixture(spike.points(), big_r, *ln_w_spike),
            ),
        }
    }

    /// Integration breakpoints: zero, ridges at support points ± 3, and
    /// the truncation point.
    fn breakpoints(&self, q: &QuadratureSpec) -> Vec<f64> {
        let mut pts = vec![0.0];
        let mut upper: f64 = 0.0;
        self.collect(q, &mut pts, &mut upper);
        pts.retain(|&x| x < upper);
        pts.push(upper);
        pts
    }

    fn collect(&self, q: &QuadratureSpec, pts: &mut Vec<f64>, upper: &mut f64) {
        match self {
            OutputModel::Discrete(d) => {
                for &(r, _) in d.points() {
                    pts.extend([(r - 3.0).max(0.0), r, r + 3.0]);
                }
                *upper = upper.max(d.max_amplitude() + q.tail_margin);
            }
            OutputModel::Rayleigh { v } => {
                // e^{-R²/v} below e^{-5 tail_margin}.
                let cut = (5.0 * q.tail_margin * v).sqrt();
                pts.push(v.sqrt());
                *upper = upper.max(cut);
            }
            OutputModel::Mixture { base, spike, .. } => {
                base.collect(q, pts, upper);
                OutputModel::Discrete(spike).collect(q, pts, upper);
            }
        }
    }

    fn entropy(&self, q: &QuadratureSpec) -> Result<f64> {
        let est = integrate(
            |big_r| {
                let lf = self.ln_density(big_r);
                let f = lf.exp();
                if f < DENSITY_FLOOR {
                    0.0
                } else {
                    f * (big_r.ln() - lf)
                }
            },
            &self.breakpoints(q),
            q,
        )?;
        Ok(est.value)
    }
}

/// `H(F) = -∫ f ln(f/R) dR`, integrated to the largest support point plus
/// `tail_margin`.
#[allow(non_snake_case)]
pub fn entropy_H(d: &AmplitudeDistribution, q: &QuadratureSpec) -> Result<f64> {
    OutputModel::Discrete(d).entropy(q)
}

/// `H` for any supported input law; the CSCG part uses its closed-form
/// output density.
pub fn entropy_of_law(law: &InputLaw, q: &QuadratureSpec) -> Result<f64> {
    OutputModel::of_law(law).entropy(q)
}

/// `H` of a time-sharing mixture.
pub fn entropy_of_mixture(m: &MixtureSpec, q: &QuadratureSpec) -> Result<f64> {
    OutputModel::of_mixture(m).entropy(q)
}

/// `h(r; F) = -∫ K(R, r) ln(f(R)/R) dR`. Satisfies `Σ_j p_j h(r_j; F) = H(F)`.
pub fn marginal_entropy_density(
    d: &AmplitudeDistribution,
    r: f64,
    q: &QuadratureSpec,
) -> Result<f64> {
    let model = OutputModel::Discrete(d);
    let mut pts = model.breakpoints(q);
    let upper = pts.last().copied().unwrap_or(0.0).max(r + q.tail_margin);
    pts.extend([(r - 3.0).max(0.0), r, r + 3.0, upper]);
    pts.retain(|&x| x <= upper);
    let est = integrate(
        |big_r| {
            let k = kernel_raw(big_r, r);
            if k == 0.0 {
                return 0.0;
            }
            k * (big_r.ln() - model.ln_density(big_r))
        },
        &pts,
        q,
    )?;
    Ok(est.value)
}

/// `I = H(F) - 1` nats.
pub fn mutual_information(d: &AmplitudeDistribution, q: &QuadratureSpec) -> Result<f64> {
    Ok(entropy_H(d, q)? - 1.0)
}

/// `I = H - 1` for any supported input law.
pub fn mutual_information_of_law(law: &InputLaw, q: &QuadratureSpec) -> Result<f64> {
    Ok(entropy_of_law(law, q)? - 1.0)
}

/// Closed form `H = ln(1 + E[r²]/2) + 1` for a CSCG input.
pub fn cscg_entropy(p_a: f64, convention: AmplitudeConvention) -> f64 {
    (0.5 * convention.rayleigh_scale(p_a)).ln_1p() + 1.0
}
