//! KKT certificate for a candidate amplitude law.
//!
//! The optimum is characterized by multipliers `λ, μ >= 0` and a constant
//! `K` with `h(r) - λr² + μg(r) = K` on the support and `<= K` on
//! `[0, r_p]`. The multipliers are recovered by least squares from the
//! support equalities and the interior stationarity conditions, with
//! inactive constraints pinned to zero.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::rule::{Rule, SupportEval};
use super::ChannelSpec;
use crate::distributions::AmplitudeDistribution;
use crate::error::Result;

/// Relative slack below which a constraint is treated as active.
pub(crate) const ACTIVE_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    pub lambda: f64,
    pub mu: f64,
    #[serde(rename = "K")]
    pub k: f64,
    /// `|h(r_j) - λr_j² + μg(r_j) - K|` per support point.
    pub support_residuals: Vec<f64>,
    /// `|h'(r_j) - 2λr_j + μg'(r_j)|` per interior support point.
    pub stationarity_residuals: Vec<f64>,
    /// Maximum of `h(r) - λr² + μg(r) - K` over the check grid.
    pub grid_violation: f64,
    /// Where that maximum occurs.
    pub grid_argmax: f64,
    /// Local maxima `(r, value)` of the grid violation above tolerance,
    /// largest first.
    pub violation_peaks: Vec<(f64, f64)>,
    pub grid_points: usize,
    /// `P_a - E[r²]`.
    pub slack_power: f64,
    /// `E[g] - P_d`.
    pub slack_delivered: f64,
    pub power_active: bool,
    pub delivered_active: bool,
    /// Multipliers whose fitted value was negative and clamped to zero.
    pub clamped: Vec<String>,
    /// The support could not identify every multiplier; the free direction
    /// was fixed by minimizing the grid violation.
    pub underdetermined: bool,
    pub tolerance: f64,
    pub verified: bool,
}

impl KktReport {
    pub fn max_support_residual(&self) -> f64 {
        self.support_residuals.iter().copied().fold(0.0, f64::max)
    }
}

/// Which of `(K, λ, μ)` are free in the fit.
#[derive(Debug, Clone, Copy)]
struct Unknowns {
    lambda: bool,
    mu: bool,
}

impl Unknowns {
    fn count(&self) -> usize {
        1 + usize::from(self.lambda) + usize::from(self.mu)
    }

    /// Expands a fitted vector into `(K, λ, μ)`.
    fn expand(&self, x: &[f64]) -> (f64, f64, f64) {
        let mut it = x.iter().copied();
        let k = it.next().unwrap_or(0.0);
        let l = if self.lambda { it.next().unwrap_or(0.0) } else { 0.0 };
        let m = if self.mu { it.next().unwrap_or(0.0) } else { 0.0 };
        (k, l, m)
    }
}

/// Linear system rows for the multiplier fit.
pub(crate) struct FitData {
    rows: Vec<[f64; 3]>,
    rhs: Vec<f64>,
    /// Number of leading rows that are support equalities.
    n_support: usize,
}

impl FitData {
    pub fn new(spec: &ChannelSpec, r: &[f64], eval: &SupportEval, peak: f64) -> Self {
        let g = &spec.g;
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        for (j, &rj) in r.iter().enumerate() {
            // h_j = K + λ r² - μ g
            rows.push([1.0, rj * rj, -g.eval(rj)]);
            rhs.push(eval.h[j]);
        }
        let n_support = rows.len();
        for (j, &rj) in r.iter().enumerate() {
            if rj > 0.0 && rj < peak {
                // h'_j = 2λ r - μ g'
                rows.push([0.0, 2.0 * rj, -g.derivative(rj)]);
                rhs.push(eval.dh[j]);
            }
        }
        Self {
            rows,
            rhs,
            n_support,
        }
    }

    fn matrix(&self, u: Unknowns) -> DMatrix<f64> {
        let cols: Vec<usize> = [Some(0), u.lambda.then_some(1), u.mu.then_some(2)]
            .into_iter()
            .flatten()
            .collect();
        DMatrix::from_fn(self.rows.len(), cols.len(), |i, c| self.rows[i][cols[c]])
    }

    /// Minimum-norm least-squares fit with its numerical rank and, when
    /// rank deficient, a basis of the null space.
    fn solve(&self, u: Unknowns) -> (Vec<f64>, usize, Vec<Vec<f64>>) {
        let a = self.matrix(u);
        let b = DVector::from_vec(self.rhs.clone());
        let n = u.count();
        let svd = a.clone().svd(true, true);
        let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
        let eps = 1e-10 * smax.max(1e-300);
        let x = svd
            .solve(&b, eps)
            .map(|v| v.iter().copied().collect())
            .unwrap_or_else(|_| vec![0.0; n]);
        let rank = svd.singular_values.iter().filter(|&&s| s > eps).count();
        let mut null = Vec::new();
        if rank < n {
            // Null space from the eigenvectors of AᵀA with tiny eigenvalues.
            let ata = a.transpose() * &a;
            let eig = ata.symmetric_eigen();
            let emax = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
            for (i, &ev) in eig.eigenvalues.iter().enumerate() {
                if ev <= 1e-18 * emax.max(1e-300) || ev.abs() <= 1e-20 {
                    null.push(eig.eigenvectors.column(i).iter().copied().collect());
                }
            }
            null.truncate(n - rank);
        }
        (x, rank, null)
    }

    fn support_residuals(&self, k: f64, l: f64, m: f64) -> Vec<f64> {
        self.residuals(k, l, m, 0..self.n_support)
    }

    fn stationarity_residuals(&self, k: f64, l: f64, m: f64) -> Vec<f64> {
        self.residuals(k, l, m, self.n_support..self.rows.len())
    }

    fn residuals(&self, k: f64, l: f64, m: f64, range: std::ops::Range<usize>) -> Vec<f64> {
        range
            .map(|i| {
                let row = self.rows[i];
                (row[0] * k + row[1] * l + row[2] * m - self.rhs[i]).abs()
            })
            .collect()
    }
}

/// `h(r)` on the check grid together with the grid itself.
pub(crate) struct GridValues {
    pub r: Vec<f64>,
    pub h: Vec<f64>,
    g: Vec<f64>,
}

impl GridValues {
    pub fn new(spec: &ChannelSpec, rule: &Rule, log_terms: &[f64], peak: f64, n: usize) -> Self {
        let n = n.max(2);
        let r: Vec<f64> = (0..n).map(|i| peak * i as f64 / (n - 1) as f64).collect();
        let h = r.iter().map(|&x| rule.h_at(x, log_terms)).collect();
        let g = r.iter().map(|&x| spec.g.eval(x)).collect();
        Self { r, h, g }
    }

    /// Local maxima of `h - λr² + μg - K` above `floor`, largest first.
    pub fn peaks(&self, k: f64, l: f64, m: f64, floor: f64) -> Vec<(f64, f64)> {
        let v: Vec<f64> = (0..self.r.len())
            .map(|i| self.h[i] - l * self.r[i] * self.r[i] + m * self.g[i] - k)
            .collect();
        let n = v.len();
        let mut out: Vec<(f64, f64)> = (0..n)
            .filter(|&i| {
                v[i] > floor && (i == 0 || v[i] >= v[i - 1]) && (i + 1 == n || v[i] > v[i + 1])
            })
            .map(|i| (self.r[i], v[i]))
            .collect();
        out.sort_by(|a, b| b.1.total_cmp(&a.1));
        out
    }

    /// `(max, argmax)` of `h - λr² + μg - K`.
    pub fn violation(&self, k: f64, l: f64, m: f64) -> (f64, f64) {
        let mut best = (f64::NEG_INFINITY, 0.0);
        for i in 0..self.r.len() {
            let v = self.h[i] - l * self.r[i] * self.r[i] + m * self.g[i] - k;
            if v > best.0 {
                best = (v, self.r[i]);
            }
        }
        best
    }
}

/// Minimizes a convex function of one variable on `[lo, hi]`.
fn ternary(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    for _ in 0..200 {
        let a = lo + (hi - lo) / 3.0;
        let b = hi - (hi - lo) / 3.0;
        if f(a) <= f(b) {
            hi = b;
        } else {
            lo = a;
        }
        if hi - lo <= 1e-14 * (1.0 + lo.abs().max(hi.abs())) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Fixes the null-space component of an underdetermined fit by minimizing
/// the grid violation subject to `λ, μ >= 0`. Handles up to two free
/// directions.
fn settle_null_space(
    x0: &[f64],
    null: &[Vec<f64>],
    u: Unknowns,
    grid: &GridValues,
) -> Vec<f64> {
    let point = |t: &[f64]| -> Vec<f64> {
        let mut x = x0.to_vec();
        for (dir, &tk) in null.iter().zip(t) {
            for (xi, di) in x.iter_mut().zip(dir) {
                *xi += tk * di;
            }
        }
        x
    };
    let cost = |t: &[f64]| -> f64 {
        let (k, l, m) = u.expand(&point(t));
        let penalty = 1e6 * ((-l).max(0.0) + (-m).max(0.0));
        grid.violation(k, l, m).0 + penalty
    };
    let span = 1e3 * (1.0 + x0.iter().map(|v| v.abs()).fold(0.0, f64::max));
    match null.len() {
        0 => x0.to_vec(),
        1 => point(&[ternary(-span, span, |t| cost(&[t]))]),
        _ => {
            let inner = |t0: f64| ternary(-span, span, |t1| cost(&[t0, t1]));
            let t0 = ternary(-span, span, |t0| cost(&[t0, inner(t0)]));
            point(&[t0, inner(t0)])
        }
    }
}

/// Builds the KKT report at the given support using a prepared rule.
pub(crate) fn report_from_eval(
    spec: &ChannelSpec,
    d: &AmplitudeDistribution,
    rule: &Rule,
    eval: &SupportEval,
    grid_n: usize,
) -> KktReport {
    let peak = spec.effective_peak();
    let r = d.support();
    let mean_power = d.mean_power();
    let delivered = crate::powermodel::expected_g(d, &spec.g);
    let slack_power = spec.p_a - mean_power;
    let slack_delivered = delivered - spec.p_d;
    let power_active = slack_power <= ACTIVE_TOL * spec.p_a.max(1.0);
    let delivered_active =
        spec.p_d > 0.0 && slack_delivered <= ACTIVE_TOL * spec.p_d.abs().max(1e-300);
    let data = FitData::new(spec, &r, eval, peak);
    let grid = GridValues::new(spec, rule, &eval.log_terms, peak, grid_n);

    let mut u = Unknowns {
        lambda: power_active,
        mu: delivered_active,
    };
    let mut clamped = Vec::new();
    let (k, l, m, underdetermined) = loop {
        let (x0, rank, null) = data.solve(u);
        let underdetermined = rank < u.count();
        let x = if underdetermined {
            settle_null_space(&x0, &null, u, &grid)
        } else {
            x0
        };
        let (k, l, m) = u.expand(&x);
        if u.lambda && l < 0.0 {
            u.lambda = false;
            clamped.push("lambda".to_string());
            continue;
        }
        if u.mu && m < 0.0 {
            u.mu = false;
            clamped.push("mu".to_string());
            continue;
        }
        break (k, l, m, underdetermined);
    };

    let support_residuals = data.support_residuals(k, l, m);
    let stationarity_residuals = data.stationarity_residuals(k, l, m);
    let (grid_violation, grid_argmax) = grid.violation(k, l, m);
    let tolerance = spec.knobs.kkt_tol * k.abs().max(1.0);
    let violation_peaks = grid.peaks(k, l, m, tolerance);
    let feasible = slack_power >= -1e-8 * spec.p_a.max(1.0)
        && slack_delivered >= -1e-8 * spec.p_d.abs().max(1.0)
        && d.max_amplitude() <= peak;
    let verified = feasible
        && support_residuals.iter().all(|&v| v <= tolerance)
        && grid_violation <= tolerance
        && l * slack_power.max(0.0) <= tolerance
        && m * slack_delivered.max(0.0) <= tolerance;
    KktReport {
        lambda: l,
        mu: m,
        k,
        support_residuals,
        stationarity_residuals,
        grid_violation,
        grid_argmax,
        violation_peaks,
        grid_points: grid.r.len(),
        slack_power,
        slack_delivered,
        power_active,
        delivered_active,
        clamped,
        underdetermined,
        tolerance,
        verified,
    }
}

/// Recovers `(λ, μ, K)` for `d` and checks the KKT conditions on a
/// `grid_n`-point grid over `[0, r_p]`.
pub fn verify_kkt(
    spec: &ChannelSpec,
    d: &AmplitudeDistribution,
    grid_n: usize,
) -> Result<KktReport> {
    spec.validate()?;
    let peak = spec.effective_peak();
    let d = d.merged(spec.knobs.merge_tol * peak);
    let rule = Rule::fine(peak.max(d.max_amplitude()) + spec.quadrature.tail_margin);
    let eval = SupportEval::new(&rule, &d.support(), &d.probabilities(), false);
    Ok(report_from_eval(spec, &d, &rule, &eval, grid_n))
}
