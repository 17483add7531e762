//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;

/// Half-window of the sinc interpolator.
pub const WINDOW: i64 = 64;

/// `sinc(l + 1/2)` with `sinc(x) = sin(pi x)/(pi x)`.
pub fn s(l: i64) -> f64 {
    let x = l as f64 + 0.5;
    (PI * x).sin() / (PI * x)
}

/// `Σ s_l` and `Σ s_l²` over `|l| > window`, summed directly far enough out
/// that the remainder is below 1e-9 of the result.
pub fn tail_sums(window: i64) -> (f64, f64) {
    let (mut t1, mut t2) = (0.0, 0.0);
    let far = 4_000_000i64;
    for l in (window + 1..=far).rev() {
        for v in [s(l), s(-l)] {
            t1 += v;
            t2 += v * v;
        }
    }
    // Σ_{|l|>far} s_l² ≈ 2/(π² far).
    (t1, t2 + 2.0 / (PI * PI * far as f64))
}

#[derive(Debug, Clone, Copy)]
pub enum Symbols {
    /// Deterministic carrier `x = a`.
    Cw(f64),
    /// Zero-mean Gaussian with independent parts of the given variances.
    Gaussian { var_r: f64, var_i: f64 },
    /// Amplitude law with uniform independent phase.
    Ring { points: [(f64, f64); 2] },
}

impl Symbols {
    fn draw(&self, rng: &mut ChaCha8Rng) -> (f64, f64) {
        match *self {
            Symbols::Cw(a) => (a, 0.0),
            Symbols::Gaussian { var_r, var_i } => {
                let a: f64 = rng.sample(StandardNormal);
                let b: f64 = rng.sample(StandardNormal);
                (a * var_r.sqrt(), b * var_i.sqrt())
            }
            Symbols::Ring { points } => {
                let u: f64 = rng.random();
                let r = if u < points[0].1 { points[0].0 } else { points[1].0 };
                let th = rng.random::<f64>() * 2.0 * PI;
                (r * th.cos(), r * th.sin())
            }
        }
    }

    /// Mean and real/imaginary covariance of one symbol.
    fn stats(&self) -> ((f64, f64), [[f64; 2]; 2]) {
        match *self {
            Symbols::Cw(a) => ((a, 0.0), [[0.0; 2]; 2]),
            Symbols::Gaussian { var_r, var_i } => ((0.0, 0.0), [[var_r, 0.0], [0.0, var_i]]),
            Symbols::Ring { points } => {
                let e2: f64 = points.iter().map(|(r, p)| p * r * r).sum();
                ((0.0, 0.0), [[e2 / 2.0, 0.0], [0.0, e2 / 2.0]])
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct OracleEstimate {
    pub mean: f64,
    /// Standard error from batch means, which absorbs the correlation
    /// between neighbouring interpolated samples.
    pub std_error: f64,
}

/// Monte Carlo estimate of `k2 E|y|² + (3k4/2)(E|ỹ|⁴ + E|y|⁴)`, where `y` is
/// a received symbol and `ỹ` the received signal halfway between symbols.
/// Noise has variance 2 per real dimension at both instants. The
/// interpolator uses `|l| <= window` taps plus a Gaussian stand-in for the
/// truncated tail.
pub fn delivered_power_mc(sym: Symbols, k2: f64, k4: f64, n: usize, window: i64, seed: u64) -> OracleEstimate {
    const SHARDS: usize = 100;
    let per = n / SHARDS;
    let taps: Vec<f64> = (-window..=window).map(s).collect();
    let (t1, t2) = tail_sums(window);
    let (mu, cov) = sym.stats();
    let tail_mean = (mu.0 * t1, mu.1 * t1);
    let tail_sd = (cov[0][0] * t2).sqrt();
    let tail_sd_i = (cov[1][1] * t2).sqrt();
    let noise = Normal::new(0.0, 2f64.sqrt()).expect("valid normal");
    let batch: Vec<f64> = (0..SHARDS)
        .into_par_iter()
        .map(|shard| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ shard as u64);
            let w = window as usize;
            let x: Vec<(f64, f64)> = (0..per + 2 * w).map(|_| sym.draw(&mut rng)).collect();
            let mut acc = 0.0;
            for k in w..w + per {
                let (xr, xi) = x[k];
                let yr = xr + noise.sample(&mut rng);
                let yi = xi + noise.sample(&mut rng);
                let y2 = yr * yr + yi * yi;
                // ỹ_k = Σ_l x_{k-l} s_l
                let (mut ir, mut ii) = (0.0, 0.0);
                for (j, tap) in taps.iter().enumerate() {
                    let (a, b) = x[k + w - j];
                    ir += a * tap;
                    ii += b * tap;
                }
                let z: f64 = rng.sample(StandardNormal);
                let z2: f64 = rng.sample(StandardNormal);
                ir += tail_mean.0 + tail_sd * z + noise.sample(&mut rng);
                ii += tail_mean.1 + tail_sd_i * z2 + noise.sample(&mut rng);
                let t2v = ir * ir + ii * ii;
                acc += k2 * y2 + 1.5 * k4 * (t2v * t2v + y2 * y2);
            }
            acc / per as f64
        })
        .collect();
    let mean = batch.iter().sum::<f64>() / SHARDS as f64;
    let var = batch.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / (SHARDS - 1) as f64;
    OracleEstimate {
        mean,
        std_error: (var / SHARDS as f64).sqrt(),
    }
}
