//! Joint optimization of positions and probabilities for a fixed number
//! of mass points, used by the escalation fallback.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use super::rule::SupportEval;
use super::spg::{project_simplex, Problem};
use super::Context;

/// `x = (r_1..r_m, p_1..p_m)` over `[0, r_p]^m × simplex`.
pub(crate) struct FixedMProblem<'c> {
    pub ctx: &'c Context<'c>,
    pub m: usize,
}

impl Problem for FixedMProblem<'_> {
    fn dim(&self) -> usize {
        2 * self.m
    }

    fn constraints(&self) -> usize {
        if self.ctx.spec.p_d > 0.0 { 2 } else { 1 }
    }

    fn eval(&self, x: &[f64], grad: &mut [f64], c: &mut [f64], c_grad: &mut [f64]) -> f64 {
        let m = self.m;
        let n = 2 * m;
        let (r, p) = x.split_at(m);
        let e = SupportEval::new(&self.ctx.coarse, r, p, false);
        let (gp, gr) = e.entropy_gradient(p);
        for j in 0..m {
            grad[j] = -gr[j];
            grad[m + j] = -gp[j];
        }
        let spec = self.ctx.spec;
        let p_a = spec.p_a;
        c[0] = (r.iter().zip(p).map(|(r, p)| p * r * r).sum::<f64>() - p_a) / p_a;
        for j in 0..m {
            c_grad[j] = 2.0 * p[j] * r[j] / p_a;
            c_grad[m + j] = r[j] * r[j] / p_a;
        }
        if spec.p_d > 0.0 {
            let p_d = spec.p_d;
            c[1] = (p_d - r.iter().zip(p).map(|(&r, p)| p * spec.g.eval(r)).sum::<f64>()) / p_d;
            for j in 0..m {
                c_grad[n + j] = -p[j] * spec.g.derivative(r[j]) / p_d;
                c_grad[n + m + j] = -spec.g.eval(r[j]) / p_d;
            }
        }
        -e.entropy
    }

    fn project(&self, x: &mut [f64]) {
        let peak = self.ctx.peak;
        let (r, p) = x.split_at_mut(self.m);
        for v in r.iter_mut() {
            *v = v.clamp(0.0, peak);
        }
        project_simplex(p);
    }
}

/// Seed for start `start` of the batch at support size `m`.
pub(crate) fn start_seed(master: u64, m: usize, start: usize) -> u64 {
    // SplitMix64 finalizer over the packed indices.
    let mut z = master ^ ((m as u64) << 32) ^ (start as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Initial point for one start. Start 0 is deterministic: evenly spaced
/// amplitudes with equal weights.
pub(crate) fn initial_point(ctx: &Context<'_>, m: usize, seed: u64, start: usize) -> Vec<f64> {
    let reach = (3.0 * ctx.spec.p_a.sqrt() + 3.0).min(ctx.peak);
    let mut x = vec![0.0; 2 * m];
    if start == 0 {
        for j in 0..m {
            x[j] = if m == 1 {
                ctx.spec.p_a.sqrt().min(ctx.peak)
            } else {
                reach * j as f64 / (m - 1) as f64
            };
            x[m + j] = 1.0 / m as f64;
        }
        return x;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for j in 0..m {
        x[j] = rng.random_range(0.0..=reach);
        x[m + j] = Exp1.sample(&mut rng);
    }
    let total: f64 = x[m..].iter().sum();
    x[m..].iter_mut().for_each(|v| *v /= total);
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_are_distinct_across_starts_and_sizes() {
        let mut seen = std::collections::HashSet::new();
        for m in 1..=12 {
            for s in 0..32 {
                assert!(seen.insert(start_seed(7, m, s)));
            }
        }
    }
}
