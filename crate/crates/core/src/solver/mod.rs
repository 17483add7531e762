//! Capacity-achieving amplitude laws under power, peak and delivered-power
//! constraints.
//!
//! [`solve`] proceeds in stages. A probability-only relaxation on a fixed
//! amplitude grid gives a clustered seed; a Newton polish on the KKT system
//! turns it into an exact stationary point; [`verify_kkt`] certifies it on
//! a dense grid. Uncertified candidates get an exchange step at the worst
//! grid violation, and as a last resort the support size is escalated with
//! random multistarts of [`solve_fixed_m`].

mod fixed;
mod gaussian;
mod kkt;
mod newton;
mod relax;
mod rule;
mod spg;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{peak_serde, AmplitudeDistribution};
use crate::entropy::mutual_information;
use crate::error::{Error, Result};
use crate::powermodel::{expected_g, PowerPolynomial};
use crate::quadrature::QuadratureSpec;

pub use gaussian::{
    gaussian_family_range, gaussian_power_allocation, gaussian_power_allocation_for, gaussian_rate,
    gaussian_rp_point, gaussian_rp_point_for,
};
pub use kkt::{verify_kkt, KktReport};

use fixed::{initial_point, start_seed, FixedMProblem};
use newton::{polish_best, Polished};
use rule::{Rule, SupportEval};
use spg::{augmented_lagrangian, SpgOptions};

/// Mass beyond `proxy - TAIL_BAND` that triggers a larger proxy peak.
const TAIL_BAND: f64 = 5.0;
const TAIL_MASS: f64 = 1e-6;
const MAX_PROXY_DOUBLINGS: usize = 3;
/// Mass given to a point inserted by the exchange step.
const EXCHANGE_MASS: f64 = 0.05;
/// Violation peaks tried per exchange round.
const EXCHANGE_PEAKS: usize = 3;
/// Entropy gain per extra mass point below which escalation counts a stall.
const ESCALATION_GAIN: f64 = 1e-7;
const ESCALATION_PATIENCE: usize = 1;
const EXPLORE_OUTER: usize = 6;
const EXPLORE_INNER: usize = 250;
const EXPLORE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverKnobs {
    /// Random starts per support size during escalation.
    pub multistarts: usize,
    pub m_max: usize,
    pub seed: u64,
    /// Points in the KKT inequality grid.
    pub kkt_grid: usize,
    /// Relative KKT tolerance, scaled by `max(1, |K|)`.
    pub kkt_tol: f64,
    /// Points closer than this are merged.
    pub merge_tol: f64,
    /// Finite stand-in for an infinite peak.
    pub peak_proxy: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    /// Projected-gradient tolerance of the inner solver.
    pub stationarity_tol: f64,
    pub relaxation_grid: usize,
    pub exchange_rounds: usize,
}

impl Default for SolverKnobs {
    fn default() -> Self {
        Self {
            multistarts: 32,
            m_max: 12,
            seed: 1,
            kkt_grid: 2000,
            kkt_tol: 1e-4,
            merge_tol: 1e-6,
            peak_proxy: 50.0,
            max_outer: 30,
            max_inner: 400,
            stationarity_tol: 1e-8,
            relaxation_grid: 160,
            exchange_rounds: 8,
        }
    }
}

impl SolverKnobs {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("solver knobs: {m}")));
        if self.multistarts == 0 {
            return bad("multistarts must be at least 1");
        }
        if self.m_max == 0 {
            return bad("m_max must be at least 1");
        }
        if self.kkt_grid < 2 {
            return bad("kkt_grid must be at least 2");
        }
        if !(self.kkt_tol.is_finite() && self.kkt_tol > 0.0) {
            return bad("kkt_tol must be positive");
        }
        if !(self.merge_tol.is_finite() && self.merge_tol >= 0.0) {
            return bad("merge_tol must be nonnegative");
        }
        if !(self.peak_proxy.is_finite() && self.peak_proxy > TAIL_BAND) {
            return bad("peak_proxy must exceed 5");
        }
        if self.max_outer == 0 || self.max_inner == 0 {
            return bad("iteration limits must be positive");
        }
        if !(self.stationarity_tol.is_finite() && self.stationarity_tol > 0.0) {
            return bad("stationarity_tol must be positive");
        }
        if self.relaxation_grid < 8 {
            return bad("relaxation_grid must be at least 8");
        }
        Ok(())
    }
}

/// Constraints `E[r²] <= P_a`, `E[g(r)] >= P_d`, `r <= r_p`, with solver
/// and quadrature settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    pub p_a: f64,
    pub p_d: f64,
    #[serde(with = "peak_serde")]
    pub r_p: f64,
    pub g: PowerPolynomial,
    #[serde(default)]
    pub knobs: SolverKnobs,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
}

impl ChannelSpec {
    pub fn new(p_a: f64, p_d: f64, r_p: f64, g: PowerPolynomial) -> Self {
        Self {
            p_a,
            p_d,
            r_p,
            g,
            knobs: SolverKnobs::default(),
            quadrature: QuadratureSpec::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p_a.is_finite() && self.p_a > 0.0) {
            return Err(Error::Config(format!("P_a = {} must be positive", self.p_a)));
        }
        if !(self.p_d.is_finite() && self.p_d >= 0.0) {
            return Err(Error::Config(format!("P_d = {} must be nonnegative", self.p_d)));
        }
        if self.r_p.is_nan() || self.r_p <= 0.0 {
            return Err(Error::Config(format!("r_p = {} must be positive", self.r_p)));
        }
        self.knobs.validate()?;
        self.quadrature.validate()
    }

    /// `r_p`, or the proxy when it is infinite.
    pub fn effective_peak(&self) -> f64 {
        if self.r_p.is_finite() {
            self.r_p
        } else {
            self.knobs.peak_proxy
        }
    }
}

/// One line of the solve log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub stage: String,
    pub m: usize,
    pub start: Option<usize>,
    /// Rate `H - 1` on the solver's fixed rule.
    pub rate: f64,
    pub verified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub distribution: AmplitudeDistribution,
    /// Mutual information in nats from the adaptive engine.
    pub rate: f64,
    pub delivered: f64,
    pub mean_power: f64,
    pub kkt: KktReport,
    pub m_used: usize,
    pub verified: bool,
    pub trace: Vec<TraceEntry>,
    pub flags: Vec<String>,
}

impl SolveResult {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let r: Self = serde_json::from_str(s)?;
        r.distribution.validate()?;
        Ok(r)
    }
}

/// Shared state of one solve at a fixed (possibly proxy) peak.
pub(crate) struct Context<'a> {
    pub spec: &'a ChannelSpec,
    pub peak: f64,
    pub fine: Rule,
    pub coarse: Rule,
}

impl<'a> Context<'a> {
    fn new(spec: &'a ChannelSpec, peak: f64) -> Self {
        let upper = peak + spec.quadrature.tail_margin;
        Self {
            spec,
            peak,
            fine: Rule::fine(upper),
            coarse: Rule::coarse(upper),
        }
    }

    fn inner_options(&self) -> SpgOptions {
        SpgOptions {
            max_iter: self.spec.knobs.max_inner,
            tol: self.spec.knobs.stationarity_tol,
            ..SpgOptions::default()
        }
    }

    /// A cheaper budget for starts that the Newton polish finishes.
    fn exploration(&self) -> (usize, SpgOptions) {
        let knobs = &self.spec.knobs;
        let opts = SpgOptions {
            max_iter: knobs.max_inner.min(EXPLORE_INNER),
            tol: knobs.stationarity_tol.max(EXPLORE_TOL),
            ..SpgOptions::default()
        };
        (knobs.max_outer.min(EXPLORE_OUTER), opts)
    }
}

/// A normalized candidate with its certificate.
#[derive(Debug, Clone)]
struct Candidate {
    distribution: AmplitudeDistribution,
    entropy: f64,
    report: KktReport,
}

impl Candidate {
    fn new(ctx: &Context<'_>, points: Vec<(f64, f64)>) -> Result<Self> {
        let d = AmplitudeDistribution::normalized(points, ctx.peak, ctx.spec.knobs.merge_tol)?;
        let eval = SupportEval::new(&ctx.fine, &d.support(), &d.probabilities(), false);
        let report = kkt::report_from_eval(ctx.spec, &d, &ctx.fine, &eval, ctx.spec.knobs.kkt_grid);
        Ok(Self {
            distribution: d,
            entropy: eval.entropy,
            report,
        })
    }

    fn feasible(&self, spec: &ChannelSpec) -> bool {
        self.report.slack_power >= -1e-8 * spec.p_a.max(1.0)
            && self.report.slack_delivered >= -1e-8 * spec.p_d.max(1.0)
    }

    /// Verified beats unverified, feasible beats infeasible, then entropy,
    /// then fewer points.
    fn better_than(&self, other: &Candidate, spec: &ChannelSpec) -> bool {
        let key = |c: &Candidate| (c.report.verified, c.feasible(spec));
        let (a, b) = (key(self), key(other));
        if a != b {
            return a > b;
        }
        if (self.entropy - other.entropy).abs() > 1e-10 {
            return self.entropy > other.entropy;
        }
        self.distribution.len() < other.distribution.len()
    }

    fn trace(&self, stage: &str, start: Option<usize>) -> TraceEntry {
        TraceEntry {
            stage: stage.into(),
            m: self.distribution.len(),
            start,
            rate: self.entropy - 1.0,
            verified: self.report.verified,
        }
    }
}

/// Largest `E[g(r)]` over laws on `[0, r_p]` with `E[r²] <= P_a`.
///
/// For `g` convex and increasing this is the two-point law `{0, r_p}` with
/// `p(r_p) = min(1, P_a/r_p²)`. Otherwise the concave envelope of
/// `u ↦ g(√u)` on `[0, r_p²]` is evaluated at the best `u <= P_a`. An
/// infinite peak gives an unbounded edge unless `g` is at most quadratic.
pub fn max_feasible_delivered_power(p_a: f64, r_p: f64, g: &PowerPolynomial) -> f64 {
    let c = g.coefficients();
    if r_p.is_infinite() {
        return match g.degree() {
            0 => c[0],
            1 => c[0] + c[1] * p_a,
            _ => f64::INFINITY,
        };
    }
    let u_max = r_p * r_p;
    if g.is_convex_increasing_on(r_p) {
        let p = (p_a / u_max).min(1.0);
        return p * g.eval(r_p) + (1.0 - p) * g.eval(0.0);
    }
    let n = 4000;
    let pts: Vec<(f64, f64)> = (0..=n)
        .map(|k| {
            let u = u_max * k as f64 / n as f64;
            (u, g.eval(u.sqrt()))
        })
        .collect();
    // Upper hull by the monotone chain.
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for &q in &pts {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (b.0 - a.0) * (q.1 - a.1) - (b.1 - a.1) * (q.0 - a.0);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(q);
    }
    let mut best = f64::NEG_INFINITY;
    for w in hull.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a.0 <= p_a {
            best = best.max(a.1);
        }
        if a.0 <= p_a && p_a < b.0 {
            best = best.max(a.1 + (b.1 - a.1) * (p_a - a.0) / (b.0 - a.0));
        }
    }
    if let Some(&last) = hull.last() {
        if last.0 <= p_a {
            best = best.max(last.1);
        }
    }
    best
}

/// Multistart batch at support size `m` on the coarse rule, best first
/// (ties broken by start index).
fn multistart(
    ctx: &Context<'_>,
    m: usize,
    seed: u64,
    max_outer: usize,
    inner: &SpgOptions,
) -> Vec<(usize, Vec<(f64, f64)>, f64)> {
    let knobs = &ctx.spec.knobs;
    let problem = FixedMProblem { ctx, m };
    let mut runs: Vec<(usize, Vec<(f64, f64)>, f64, f64)> = (0..knobs.multistarts)
        .into_par_iter()
        .map(|s| {
            let x0 = initial_point(ctx, m, start_seed(seed, m, s), s);
            let out = augmented_lagrangian(&problem, x0, None, max_outer, inner, 1e-9);
            let pts = (0..m).map(|j| (out.x[j], out.x[m + j])).collect();
            (s, pts, -out.objective, out.violation)
        })
        .collect();
    // Feasible runs first, then by entropy.
    runs.sort_by(|a, b| {
        let fa = a.3 <= 1e-6;
        let fb = b.3 <= 1e-6;
        fb.cmp(&fa).then(b.2.total_cmp(&a.2)).then(a.0.cmp(&b.0))
    });
    runs.into_iter().map(|(s, p, h, _)| (s, p, h)).collect()
}

fn finish(
    spec: &ChannelSpec,
    best: Candidate,
    trace: Vec<TraceEntry>,
    mut flags: Vec<String>,
) -> Result<SolveResult> {
    let distribution = best.distribution.with_peak(spec.r_p)?;
    let rate = mutual_information(&distribution, &spec.quadrature)?;
    if !best.report.verified {
        flags.push("unverified".into());
    }
    if best.report.underdetermined {
        flags.push("underdetermined".into());
    }
    if !best.report.clamped.is_empty() {
        flags.push("multiplier-clamped".into());
    }
    Ok(SolveResult {
        delivered: expected_g(&distribution, &spec.g),
        mean_power: distribution.mean_power(),
        m_used: distribution.len(),
        verified: best.report.verified,
        kkt: best.report,
        distribution,
        rate,
        trace,
        flags,
    })
}

/// Local maximization at a fixed support size: a batch of augmented
/// Lagrangian starts on `(r, p)`, returning the best one unpolished.
pub fn solve_fixed_m(spec: &ChannelSpec, m: usize, seed: u64) -> Result<SolveResult> {
    if m == 0 {
        return Err(Error::Config("m must be at least 1".into()));
    }
    check_feasible(spec)?;
    let ctx = Context::new(spec, spec.effective_peak());
    let runs = multistart(&ctx, m, seed, spec.knobs.max_outer, &ctx.inner_options());
    let mut trace = Vec::new();
    let mut best: Option<Candidate> = None;
    for (s, pts, _) in runs {
        let c = Candidate::new(&ctx, pts)?;
        trace.push(c.trace("multistart", Some(s)));
        if best.as_ref().is_none_or(|b| c.better_than(b, spec)) {
            best = Some(c);
        }
    }
    trace.sort_by_key(|t| t.start);
    finish(spec, best.expect("at least one start"), trace, Vec::new())
}

fn check_feasible(spec: &ChannelSpec) -> Result<f64> {
    spec.validate()?;
    let edge = max_feasible_delivered_power(spec.p_a, spec.r_p, &spec.g);
    if spec.p_d > edge * (1.0 + 1e-12) {
        return Err(Error::Infeasible {
            requested: spec.p_d,
            edge,
        });
    }
    Ok(edge)
}

/// Maximizes the rate for `spec`, escalating the support size until the
/// KKT conditions verify. An uncertified best candidate is returned with
/// the `unverified` flag rather than as an error.
pub fn solve(spec: &ChannelSpec) -> Result<SolveResult> {
    solve_warm(spec, None)
}

/// [`solve`] seeded with a previous solution, typically the neighbouring
/// point of a sweep.
pub fn solve_warm(spec: &ChannelSpec, warm: Option<&SolveResult>) -> Result<SolveResult> {
    check_feasible(spec)?;
    if spec.r_p.is_finite() {
        let ctx = Context::new(spec, spec.r_p);
        let warm = warm.map(Warm::from_result);
        let (best, trace, flags) = solve_at(&ctx, warm.as_ref())?;
        return finish(spec, best, trace, flags);
    }
    let mut peak = spec.knobs.peak_proxy;
    let mut flags = Vec::new();
    let mut doublings = 0;
    while max_feasible_delivered_power(spec.p_a, peak, &spec.g) < spec.p_d
        && doublings < MAX_PROXY_DOUBLINGS
    {
        peak *= 2.0;
        doublings += 1;
        flags.push(format!("peak-proxy-enlarged:{peak}"));
    }
    let mut warm = warm.map(Warm::from_result);
    let mut trace = Vec::new();
    loop {
        let ctx = Context::new(spec, peak);
        let (best, stage_trace, stage_flags) = solve_at(&ctx, warm.as_ref())?;
        trace.extend(stage_trace);
        let tail: f64 = best
            .distribution
            .points()
            .iter()
            .filter(|&&(r, _)| r > peak - TAIL_BAND)
            .map(|&(_, p)| p)
            .sum();
        if tail < TAIL_MASS || doublings >= MAX_PROXY_DOUBLINGS {
            if tail >= TAIL_MASS {
                flags.push("tail-sensitive".into());
            }
            flags.extend(stage_flags);
            return finish(spec, best, trace, flags);
        }
        peak *= 2.0;
        doublings += 1;
        flags.push(format!("peak-proxy-enlarged:{peak}"));
        // The smaller proxy's answer stays feasible and seeds the next pass.
        warm = Some(Warm {
            points: best.distribution.points().to_vec(),
            lambda: best.report.lambda,
            mu: best.report.mu,
        });
    }
}

/// Starting support handed to [`solve_at`].
struct Warm {
    points: Vec<(f64, f64)>,
    lambda: f64,
    mu: f64,
}

impl Warm {
    fn from_result(w: &SolveResult) -> Self {
        Warm {
            points: w.distribution.points().to_vec(),
            lambda: w.kkt.lambda,
            mu: w.kkt.mu,
        }
    }
}

fn consider(
    best: &mut Option<Candidate>,
    c: Candidate,
    spec: &ChannelSpec,
    trace: &mut Vec<TraceEntry>,
    stage: &str,
) {
    log::debug!("{stage}: m = {}, H = {}, verified = {}", c.distribution.len(), c.entropy, c.report.verified);
    trace.push(c.trace(stage, None));
    if best.as_ref().is_none_or(|b| c.better_than(b, spec)) {
        *best = Some(c);
    }
}

fn polished_candidate(ctx: &Context<'_>, p: Option<Polished>) -> Result<Option<Candidate>> {
    match p {
        Some(p) => Candidate::new(ctx, p.points).map(Some),
        None => Ok(None),
    }
}

fn verified(best: &Option<Candidate>) -> bool {
    best.as_ref().is_some_and(|c| c.report.verified)
}

/// Short augmented Lagrangian run on `(r, p)` from `seed`.
fn refine(ctx: &Context<'_>, seed: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let m = seed.len();
    let problem = FixedMProblem { ctx, m };
    let mut x0 = vec![0.0; 2 * m];
    for (j, &(r, p)) in seed.iter().enumerate() {
        x0[j] = r;
        x0[m + j] = p;
    }
    let (outer, inner) = ctx.exploration();
    let out = augmented_lagrangian(&problem, x0, None, outer, &inner, 1e-9);
    (0..m).map(|j| (out.x[j], out.x[m + j])).collect()
}

/// Polishes `seed`; if that does not certify, refines it first and
/// polishes again. Every candidate produced is offered to `best`.
fn improve(
    ctx: &Context<'_>,
    seed: &[(f64, f64)],
    lambda: f64,
    mu: f64,
    stage: &str,
    best: &mut Option<Candidate>,
    trace: &mut Vec<TraceEntry>,
) -> Result<()> {
    let spec = ctx.spec;
    for patient in [false, true] {
        let direct = polished_candidate(ctx, polish_best(ctx, seed, lambda, mu, patient))?;
        let done = direct.as_ref().is_some_and(|c| c.report.verified);
        if let Some(c) = direct {
            consider(best, c, spec, trace, stage);
        }
        if done {
            return Ok(());
        }
    }
    let refined = refine(ctx, seed);
    let stage = format!("{stage}-refined");
    match polished_candidate(ctx, polish_best(ctx, &refined, lambda, mu, false))? {
        Some(c) => consider(best, c, spec, trace, &stage),
        None => consider(best, Candidate::new(ctx, refined)?, spec, trace, &stage),
    }
    Ok(())
}

/// Seeds with mass moved to the strongest violation peaks: each of the
/// leading peaks alone, then all of them together.
fn exchange_seeds(cur: &Candidate, p_a: f64) -> Vec<Vec<(f64, f64)>> {
    let peaks: Vec<f64> = cur
        .report
        .violation_peaks
        .iter()
        .take(EXCHANGE_PEAKS)
        .map(|&(r, _)| r)
        .collect();
    let mut sets: Vec<Vec<f64>> = peaks.iter().map(|&r| vec![r]).collect();
    if peaks.len() > 1 {
        sets.push(peaks);
    }
    if sets.is_empty() {
        sets.push(vec![cur.report.grid_argmax]);
    }
    sets.into_iter()
        .map(|add| {
            let masses: Vec<f64> = add.iter().map(|&r| inserted_mass(r, p_a)).collect();
            let eta: f64 = masses.iter().sum();
            let mut seed: Vec<(f64, f64)> = cur
                .distribution
                .points()
                .iter()
                .map(|&(r, p)| (r, p * (1.0 - eta)))
                .collect();
            seed.extend(add.iter().zip(&masses).map(|(&r, &q)| (r, q)));
            seed.sort_by(|a, b| a.0.total_cmp(&b.0));
            seed
        })
        .collect()
}

/// Mass given to an inserted point; far points get less so the power
/// budget stays close to feasible.
fn inserted_mass(r: f64, p_a: f64) -> f64 {
    EXCHANGE_MASS.min(0.2 * p_a / (r * r).max(1e-12))
}

/// Supports with one more point than `cur`: one beyond the outermost point
/// and one in the middle of each gap.
fn growth_seeds(cur: &Candidate, peak: f64, p_a: f64) -> Vec<Vec<(f64, f64)>> {
    let pts = cur.distribution.points();
    let mut spots = Vec::new();
    if let Some(&(last, _)) = pts.last() {
        let step = pts.windows(2).map(|w| w[1].0 - w[0].0).fold(1.0, f64::max);
        if last < peak {
            spots.push((last + step).min(peak));
        }
    }
    spots.extend(pts.windows(2).map(|w| 0.5 * (w[0].0 + w[1].0)));
    spots
        .into_iter()
        .map(|r| {
            let q = 0.2 * inserted_mass(r, p_a);
            let mut seed: Vec<(f64, f64)> = pts.iter().map(|&(x, p)| (x, p * (1.0 - q))).collect();
            seed.push((r, q));
            seed.sort_by(|a, b| a.0.total_cmp(&b.0));
            seed
        })
        .collect()
}

/// Best support found from `seed` when the delivered-power floor is lifted.
fn without_floor(ctx: &Context<'_>, seed: &[(f64, f64)], lambda: f64) -> Result<Option<Vec<(f64, f64)>>> {
    let mut relaxed = ctx.spec.clone();
    relaxed.p_d = 0.0;
    let rctx = Context::new(&relaxed, ctx.peak);
    let mut best = None;
    improve(&rctx, seed, lambda, 0.0, "floor-free", &mut best, &mut Vec::new())?;
    Ok(best.map(|c| c.distribution.points().to_vec()))
}

/// Inserts mass at the grid violation peaks and re-polishes.
fn exchange(
    ctx: &Context<'_>,
    best: &mut Option<Candidate>,
    trace: &mut Vec<TraceEntry>,
) -> Result<()> {
    for _ in 0..ctx.spec.knobs.exchange_rounds {
        let Some(cur) = best.clone() else {
            return Ok(());
        };
        if cur.report.verified || cur.report.grid_violation <= cur.report.tolerance {
            return Ok(());
        }
        let before = cur.entropy;
        for seed in exchange_seeds(&cur, ctx.spec.p_a) {
            improve(ctx, &seed, cur.report.lambda, cur.report.mu, "exchange", best, trace)?;
            if verified(best) {
                return Ok(());
            }
        }
        let after = best.as_ref().expect("a candidate was offered");
        if after.entropy <= before + 1e-12 {
            return Ok(());
        }
    }
    Ok(())
}

fn solve_at(
    ctx: &Context<'_>,
    warm: Option<&Warm>,
) -> Result<(Candidate, Vec<TraceEntry>, Vec<String>)> {
    let spec = ctx.spec;
    let knobs = &spec.knobs;
    let mut trace = Vec::new();
    let mut best: Option<Candidate> = None;

    if let Some(w) = warm {
        let seed: Vec<(f64, f64)> = w.points.iter().map(|&(r, p)| (r.min(ctx.peak), p)).collect();
        consider(&mut best, Candidate::new(ctx, seed.clone())?, spec, &mut trace, "warm-raw");
        improve(ctx, &seed, w.lambda, w.mu, "warm", &mut best, &mut trace)?;
    }
    if !verified(&best) {
        let grid = relax::relaxation_grid(spec.p_a, ctx.peak, knobs.relaxation_grid);
        let seed = relax::relax(ctx, &grid);
        log::debug!("relaxed seed {:?} lambda {} mu {}", seed.points, seed.lambda, seed.mu);
        improve(ctx, &seed.points, seed.lambda, seed.mu, "relaxation", &mut best, &mut trace)?;
        exchange(ctx, &mut best, &mut trace)?;
    }
    let mut flags = Vec::new();
    if !verified(&best) {
        let start_m = best.as_ref().map_or(1, |c| c.distribution.len() + 1);
        let (outer, inner) = ctx.exploration();
        let mut stalls = 0;
        for m in start_m..=knobs.m_max {
            let before = best.as_ref().map_or(f64::NEG_INFINITY, |c| c.entropy);
            if let Some(cur) = best.clone().filter(|c| c.distribution.len() + 1 == m) {
                for (i, seed) in growth_seeds(&cur, ctx.peak, spec.p_a).into_iter().enumerate() {
                    if i == 0 && spec.p_d > 0.0 {
                        // The outward extension is first solved without the
                        // delivered-power floor, then pulled back onto it.
                        if let Some(free) = without_floor(ctx, &seed, cur.report.lambda)? {
                            improve(ctx, &free, cur.report.lambda, 0.0, "growth-floor", &mut best, &mut trace)?;
                        }
                    }
                    improve(ctx, &seed, cur.report.lambda, cur.report.mu, "growth", &mut best, &mut trace)?;
                    if verified(&best) {
                        break;
                    }
                }
                if verified(&best) {
                    break;
                }
            }
            let grown = best.as_ref().map_or(f64::NEG_INFINITY, |c| c.entropy) > before + ESCALATION_GAIN;
            let runs = if grown { Vec::new() } else { multistart(ctx, m, knobs.seed, outer, &inner) };
            // Polish the leading starts; they usually share a basin.
            for (s, pts, _) in runs.into_iter().take(3) {
                let polished = polish_best(ctx, &pts, 0.0, 0.0, false);
                let c = match polished_candidate(ctx, polished)? {
                    Some(c) => c,
                    None => Candidate::new(ctx, pts)?,
                };
                log::debug!("escalation m = {m} start {s}: H = {}, verified = {}", c.entropy, c.report.verified);
                trace.push(c.trace("escalation", Some(s)));
                if best.as_ref().is_none_or(|b| c.better_than(b, spec)) {
                    best = Some(c);
                }
            }
            exchange(ctx, &mut best, &mut trace)?;
            if verified(&best) {
                break;
            }
            let after = best.as_ref().map_or(f64::NEG_INFINITY, |c| c.entropy);
            stalls = if after > before + ESCALATION_GAIN { 0 } else { stalls + 1 };
            if stalls >= ESCALATION_PATIENCE && m < knobs.m_max {
                flags.push(format!("escalation-stalled:m={m}"));
                break;
            }
        }
    }
    let best = best.ok_or_else(|| Error::Config("solver produced no candidate".into()))?;
    Ok((best, trace, flags))
}
