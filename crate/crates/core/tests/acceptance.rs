//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! fails. Tolerances are pinned in the constants below.

mod common;

use std::path::Path;
use std::time::{Duration, Instant};

use swipt_core::distributions::{make_flash, Cscg};
use swipt_core::entropy::{cscg_entropy, entropy_H, entropy_of_law, marginal_entropy_density};
use swipt_core::powermodel::{
    delivered_power, discrete_moments, gaussian_moments, sinc_series_partial, SincSeriesConstants,
    SincSum,
};
use swipt_core::quadrature::integrate;
use swipt_core::rpregion::{self, gaussian_curve, noi_curve_on, plateau_demo, Curve, PdGrid, Source, SweepConfig};
use swipt_core::solver::{solve, verify_kkt};
use swipt_core::specfun::{
    bessel_i0, bessel_i0_bound_loose, bessel_i0_bound_simple, bessel_i0_upper_bound, kernel,
    kernel_moment, kernel_moment_quadrature, kernel_polynomial_inverse,
    kernel_polynomial_transform,
};
use swipt_core::{
    AmplitudeConvention, AmplitudeDistribution, ChannelSpec, InputLaw, MomentSet, PowerPolynomial,
    PowerSpec, QuadratureSpec, RectennaModel, Result,
};

use common::{delivered_power_mc, Symbols};

const P_A: f64 = 5.0;
const RAW: [f64; 3] = [0.01, 0.01, 0.01];

const PLATEAU_TOL: f64 = 1e-2;
const PLATEAU_BUDGET: Duration = Duration::from_secs(300);
const ENDPOINT_TOL: f64 = 1e-12;
const KKT_TOL: f64 = 1e-4;
const KKT_GRID: usize = 2000;
const VERIFIED_SHARE: f64 = 0.8;
const DOMINANCE_TOL: f64 = 1e-6;
/// Slack for monotonicity and nesting of numerically solved curves.
const CURVE_TOL: f64 = 1e-6;
const MC_SYMBOLS: usize = 10_000_000;
const MC_SIGMAS: f64 = 3.0;
const SERIES_N: u64 = 1_000_000;
const PARTIAL_TOL: f64 = 1e-3;
const IDENTITY_TOL: f64 = 1e-8;
const NORMALIZATION_TOL: f64 = 1e-8;
const MOMENT_TOL: f64 = 1e-8;
const ROUNDTRIP_TOL: f64 = 1e-9;
const ENTROPY_TOL: f64 = 1e-8;
const MIXTURE_TOL: f64 = 2e-10;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn raw() -> PowerPolynomial {
    PowerPolynomial::new(RAW.to_vec()).expect("valid polynomial")
}

fn sweep_config(r_p: Vec<f64>, grid: PdGrid) -> SweepConfig {
    let mut cfg = SweepConfig::new(P_A, PowerSpec::Raw(raw()), r_p);
    cfg.grid = grid;
    cfg
}

/// Step grid shared by every curve, so rates can be compared point by point.
fn shared_grid() -> PdGrid {
    PdGrid::Step {
        start: 0.56,
        step: 0.05,
        stop: None,
    }
}

fn ceiling() -> f64 {
    (1.0 + P_A / 2.0).ln()
}

fn p_gaussian() -> f64 {
    Cscg::new(P_A, AmplitudeConvention::PowerConsistent)
        .expect("valid law")
        .expected_g(&raw())
}

fn plateau() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    let mut slowest = Duration::ZERO;
    let mut parts = Vec::new();
    for p_d in [0.0, p_gaussian()] {
        let t = Instant::now();
        let res = solve(&ChannelSpec::new(P_A, p_d, f64::INFINITY, raw()))?;
        let took = t.elapsed();
        slowest = slowest.max(took);
        worst = worst.max((res.rate - ceiling()).abs());
        parts.push(format!("P_d {p_d:.2}: {:.6} in {:.0?}", res.rate, took));
    }
    Ok(outcome(
        worst <= PLATEAU_TOL && slowest <= PLATEAU_BUDGET,
        format!(
            "max |rate - ln 3.5| {worst:.2e} (tol {PLATEAU_TOL:.0e}), slowest {slowest:.0?} (budget {PLATEAU_BUDGET:?}); {}",
            parts.join(", ")
        ),
    ))
}

fn gaussian_endpoints() -> Result<Outcome> {
    let curve = gaussian_curve(&sweep_config(vec![4.0], PdGrid::default()))?;
    let rate = |i: usize| curve.points[i].rate.unwrap_or(f64::NAN);
    let first = rate(0);
    let last = rate(curve.points.len() - 1);
    let err = (first - ceiling()).abs().max((last - 0.5 * 6f64.ln()).abs());
    Ok(outcome(
        err <= ENDPOINT_TOL,
        format!("endpoints {first:.15} and {last:.15}, error {err:.1e} (tol {ENDPOINT_TOL:.0e})"),
    ))
}

/// `h(r) - λr² + μg(r) - K` by adaptive quadrature, independent of the
/// solver's fixed rule.
fn kkt_density(d: &AmplitudeDistribution, r: f64, lambda: f64, mu: f64, k: f64) -> Result<f64> {
    let h = marginal_entropy_density(d, r, &QuadratureSpec::default())?;
    Ok(h - lambda * r * r + mu * raw().eval(r) - k)
}

/// Re-certifies every verified point of `curve`; returns failures found.
fn recheck(curve: &Curve, failures: &mut Vec<String>, worst: &mut f64) -> Result<()> {
    let g = raw();
    for pt in curve.points.iter().filter(|p| p.verified) {
        let d = pt.distribution.as_ref().expect("verified points keep their law");
        let spec = ChannelSpec::new(P_A, pt.p_d, curve.r_p, g.clone());
        let report = verify_kkt(&spec, d, KKT_GRID)?;
        let scale = report.k.abs().max(1.0);
        let tol = KKT_TOL * scale;
        let mut bad = |what: String| failures.push(format!("r_p {} P_d {:.3}: {what}", curve.r_p, pt.p_d));

        let support = report.max_support_residual();
        let mut grid_worst = report.grid_violation;
        for i in 0..KKT_GRID {
            let r = curve.r_p * i as f64 / (KKT_GRID - 1) as f64;
            grid_worst = grid_worst.max(kkt_density(d, r, report.lambda, report.mu, report.k)?);
        }
        let mut oracle_support: f64 = 0.0;
        for &r in &d.support() {
            oracle_support = oracle_support.max(kkt_density(d, r, report.lambda, report.mu, report.k)?.abs());
        }
        let support = support.max(oracle_support);
        *worst = worst.max(support.max(grid_worst) / scale);
        if support > tol {
            bad(format!("support residual {support:.2e}"));
        }
        if grid_worst > tol {
            bad(format!("grid violation {grid_worst:.2e}"));
        }
        if d.mean_power() > P_A + 1e-8 || d.expect(|r| g.eval(r)) < pt.p_d - 1e-8 {
            bad("constraint violated".into());
        }
        if d.max_amplitude() > curve.r_p {
            bad("mass beyond the peak".into());
        }
    }
    Ok(())
}

fn kkt_verification(curves: &[Curve]) -> Result<Outcome> {
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    let mut total = 0;
    let mut verified = 0;
    let mut counts = Vec::new();
    for c in curves {
        recheck(c, &mut failures, &mut worst)?;
        let v = c.points.iter().filter(|p| p.verified).count();
        counts.push(format!("r_p {}: {v}/{}", c.r_p, c.points.len()));
        total += c.points.len();
        verified += v;
    }
    let share = verified as f64 / total as f64;
    let mut detail = format!(
        "{verified}/{total} verified ({:.0}%, need {:.0}%), worst relative residual {worst:.2e} (tol {KKT_TOL:.0e}); {}",
        100.0 * share,
        100.0 * VERIFIED_SHARE,
        counts.join(", ")
    );
    if !failures.is_empty() {
        detail.push_str(&format!("; {}", failures.join("; ")));
    }
    Ok(outcome(failures.is_empty() && share >= VERIFIED_SHARE, detail))
}

fn rates(c: &Curve) -> Vec<(f64, f64)> {
    c.points.iter().filter_map(|p| p.rate.map(|r| (p.p_d, r))).collect()
}

/// Largest rise between consecutive points of `pts`.
fn largest_rise(pts: &[(f64, f64)]) -> f64 {
    pts.windows(2).map(|w| w[1].1 - w[0].1).fold(f64::NEG_INFINITY, f64::max)
}

/// `gapa` against the infinite-peak NOI curve, monotonicity, and nesting of
/// the finite-peak curves (sorted by peak) under the infinite one.
///
/// The infinite-peak curve is never certified, so it is held to
/// monotonicity only within the accuracy its plateau is checked to; GAPA
/// and the verified points of the finite curves use the tight slack.
fn dominance(gapa: &Curve, finite: &[Curve], proxy: &Curve) -> Result<Outcome> {
    let mut problems = Vec::new();
    let mut worst_margin = f64::INFINITY;
    let mut shared = 0;
    for (p_d, r_g) in rates(gapa) {
        if let Some(r_n) = proxy.rate_at(p_d) {
            shared += 1;
            worst_margin = worst_margin.min(r_n - r_g);
            if r_n < r_g - DOMINANCE_TOL {
                problems.push(format!("NOI {r_n:.9} below GAPA {r_g:.9} at P_d {p_d:.3}"));
            }
        }
    }
    if shared == 0 {
        problems.push("no shared P_d".into());
    }
    let mut tight_rise = largest_rise(&rates(gapa));
    for c in finite {
        let verified: Vec<(f64, f64)> = c
            .points
            .iter()
            .filter(|p| p.verified)
            .filter_map(|p| p.rate.map(|r| (p.p_d, r)))
            .collect();
        let rise = largest_rise(&verified);
        if rise > CURVE_TOL {
            problems.push(format!("verified rates at r_p {} rise by {rise:.2e}", c.r_p));
        }
        tight_rise = tight_rise.max(rise);
    }
    let proxy_rise = largest_rise(&rates(proxy));
    if proxy_rise > PLATEAU_TOL {
        problems.push(format!("infinite-peak rates rise by {proxy_rise:.2e}"));
    }
    let mut nest_checks = 0;
    let ladder: Vec<&Curve> = finite.iter().chain(std::iter::once(proxy)).collect();
    for pair in ladder.windows(2) {
        for (p_d, low) in rates(pair[0]) {
            if let Some(high) = pair[1].rate_at(p_d) {
                nest_checks += 1;
                if low > high + CURVE_TOL {
                    problems.push(format!(
                        "r_p {} rate {low:.9} above r_p {} rate {high:.9} at P_d {p_d:.3}",
                        pair[0].r_p, pair[1].r_p
                    ));
                }
            }
        }
    }
    let detail = format!(
        "{shared} shared P_d, min NOI - GAPA {worst_margin:.4e} (tol {DOMINANCE_TOL:.0e}), largest rise {tight_rise:.1e} on certified curves (slack {CURVE_TOL:.0e}) and {proxy_rise:.1e} on the infinite-peak curve (slack {PLATEAU_TOL:.0e}), {nest_checks} nesting comparisons{}",
        if problems.is_empty() { String::new() } else { format!("; {}", problems.join("; ")) }
    );
    Ok(outcome(problems.is_empty(), detail))
}

fn oracle() -> Result<Outcome> {
    let rect = RectennaModel::new(0.1, 0.01)?;
    let a = P_A.sqrt();
    let ring = |l: u32| {
        let q = 1.0 / f64::from(l * l);
        Symbols::Ring {
            points: [(0.0, 1.0 - q), (a * f64::from(l), q)],
        }
    };
    let cases: Vec<(&str, MomentSet, Symbols)> = vec![
        ("CW", MomentSet::point(a, 0.0), Symbols::Cw(a)),
        (
            "CG",
            gaussian_moments(0.0, 0.0, P_A / 2.0, P_A / 2.0)?,
            Symbols::Gaussian {
                var_r: P_A / 2.0,
                var_i: P_A / 2.0,
            },
        ),
        (
            "RG",
            gaussian_moments(0.0, 0.0, P_A, 0.0)?,
            Symbols::Gaussian { var_r: P_A, var_i: 0.0 },
        ),
        ("flash2", discrete_moments(&make_flash(2, P_A)?), ring(2)),
        ("flash4", discrete_moments(&make_flash(4, P_A)?), ring(4)),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    let mut exact = Vec::new();
    let mut sampled = Vec::new();
    for (seed, (name, moments, sym)) in cases.into_iter().enumerate() {
        let closed = delivered_power(&moments, &rect)?;
        let mc = delivered_power_mc(sym, rect.k2, rect.k4, MC_SYMBOLS, common::WINDOW, 1000 + seed as u64);
        let z = (mc.mean - closed) / mc.std_error;
        pass &= z.abs() <= MC_SIGMAS;
        parts.push(format!("{name} {closed:.4} vs {:.4} ({z:+.2} SE)", mc.mean));
        exact.push(closed);
        sampled.push(mc.mean);
    }
    let ordered = |v: &[f64]| v.windows(2).all(|w| w[0] < w[1]);
    let ordering = ordered(&exact) && ordered(&sampled);
    Ok(outcome(
        pass && ordering,
        format!(
            "{}; ordering CW < CG < RG < flash {}",
            parts.join(", "),
            if ordering { "holds" } else { "BROKEN" }
        ),
    ))
}

/// Power sums `Σ_{|l|<=n} s_l^k`, k = 1..4, summed directly.
fn direct_power_sums(n: i64) -> [f64; 4] {
    let mut acc = [0.0; 4];
    for l in (-n..=n).rev() {
        let s = common::s(l);
        acc[0] += s;
        acc[1] += s * s;
        acc[2] += s * s * s;
        acc[3] += s * s * s * s;
    }
    acc
}

fn series() -> Result<Outcome> {
    let [p1, p2, p3, p4] = direct_power_sums(SERIES_N as i64);
    // Expansions of the distinct-index sums in power sums.
    let direct = |w: SincSum| match w {
        SincSum::S0 => p2,
        SincSum::S5 => p4,
        SincSum::T0 => p1,
        SincSum::T1 => p3,
        SincSum::S1 => p1 * p1 - p2,
        SincSum::S3 => p2 * p2 - p4,
        SincSum::S6 => p1 * p3 - p4,
        SincSum::S4 => p1 * p1 * p2 - 2.0 * p1 * p3 - p2 * p2 + 2.0 * p4,
        SincSum::S2 => p1.powi(4) - 6.0 * p1 * p1 * p2 + 3.0 * p2 * p2 + 8.0 * p1 * p3 - 6.0 * p4,
    };
    let identities = SincSeriesConstants::tail_corrected(1000)?.via_identities();
    let (mut partial_worst, mut agree_worst, mut identity_worst): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for w in SincSum::ALL {
        let library = sinc_series_partial(w, SERIES_N)?;
        agree_worst = agree_worst.max((library - direct(w)).abs());
        partial_worst = partial_worst.max((direct(w) - w.limit()).abs());
        identity_worst = identity_worst.max((identities.get(w) - w.limit()).abs());
    }
    Ok(outcome(
        partial_worst <= PARTIAL_TOL && identity_worst <= IDENTITY_TOL && agree_worst <= 1e-9,
        format!(
            "partial sums at N = 1e6 off by {partial_worst:.2e} (tol {PARTIAL_TOL:.0e}), identity values off by {identity_worst:.2e} (tol {IDENTITY_TOL:.0e}), library vs direct {agree_worst:.1e}"
        ),
    ))
}

/// `I0(x) = Σ ((x/2)^k / k!)²`.
fn i0_series(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..400 {
        term *= x / 2.0 / k as f64;
        sum += term * term;
        if term * term < 1e-18 * sum {
            break;
        }
    }
    sum
}

fn special_functions() -> Result<Outcome> {
    let q = QuadratureSpec::default();
    let mut problems = Vec::new();
    // Log grid over (0, 50] plus x = 0.
    let xs: Vec<f64> = std::iter::once(0.0)
        .chain((0..=400).map(|k| 10f64.powf(-4.0 + k as f64 * (50f64.log10() + 4.0) / 400.0)))
        .collect();
    let mut i0_err: f64 = 0.0;
    let mut min_slack = f64::INFINITY;
    for &x in &xs {
        let i0 = bessel_i0(x)?;
        i0_err = i0_err.max((i0 - i0_series(x)).abs() / i0_series(x));
        let mut bounds = Vec::new();
        for a in [0.1, 0.3, 0.5, 0.7, 0.9] {
            bounds.push(bessel_i0_upper_bound(x, a)?);
        }
        if x > 0.0 {
            bounds.push(bessel_i0_bound_loose(x)?);
            bounds.push(bessel_i0_bound_simple(x)?);
        }
        for b in bounds {
            min_slack = min_slack.min((b - i0) / i0);
        }
    }
    if min_slack <= 0.0 {
        problems.push(format!("a Bessel bound is violated (slack {min_slack:.2e})"));
    }
    if i0_err > 1e-13 {
        problems.push(format!("I0 off its series by {i0_err:.1e}"));
    }

    let mut norm_err: f64 = 0.0;
    for r in [0.0, 1.0, 5.0, 6.0] {
        let upper = r + 10.0;
        let est = integrate(|big_r| kernel(big_r, r).unwrap_or(f64::NAN), &[0.0, r, upper], &q)?;
        if !(est.value <= 1.0 + 1e-15) {
            problems.push(format!("kernel integral {} above 1 at r = {r}", est.value));
        }
        norm_err = norm_err.max((1.0 - est.value).abs());
    }
    if norm_err > NORMALIZATION_TOL {
        problems.push(format!("kernel normalization off by {norm_err:.1e}"));
    }

    let mut moment_err: f64 = 0.0;
    for i in 1..=4 {
        let b = 2.0 * f64::from(i);
        for r in [0.0, 0.5, 2.0, 5.0] {
            let exact = kernel_moment(b, r)?;
            moment_err = moment_err.max((exact - kernel_moment_quadrature(b, r, &q)?).abs() / exact);
        }
    }
    if moment_err > MOMENT_TOL {
        problems.push(format!("kernel moments off by {moment_err:.1e}"));
    }

    let mut roundtrip_err: f64 = 0.0;
    for alpha in [RAW.to_vec(), vec![1.0, -2.0, 0.5, 0.1], vec![0.0, 0.0, 0.0, 0.0, 1.0]] {
        let c = kernel_polynomial_inverse(&alpha)?;
        for r in [0.0f64, 0.5, 1.5, 3.0, 7.0] {
            let want: f64 = alpha.iter().enumerate().map(|(i, a)| a * r.powi(2 * i as i32)).sum();
            let got = kernel_polynomial_transform(&c, r)?;
            roundtrip_err = roundtrip_err.max((got - want).abs() / want.abs().max(1e-300));
        }
    }
    if roundtrip_err > ROUNDTRIP_TOL {
        problems.push(format!("polynomial roundtrip off by {roundtrip_err:.1e}"));
    }

    Ok(outcome(
        problems.is_empty(),
        format!(
            "min bound slack {min_slack:.2e}, I0 vs series {i0_err:.1e}, normalization {norm_err:.1e}, moments {moment_err:.1e}, roundtrip {roundtrip_err:.1e}{}",
            if problems.is_empty() { String::new() } else { format!("; {}", problems.join("; ")) }
        ),
    ))
}

fn entropy_identities() -> Result<Outcome> {
    let q = QuadratureSpec::default();
    let noise = (entropy_H(&AmplitudeDistribution::point_mass(0.0), &q)? - 1.0).abs();
    let mut cscg: f64 = 0.0;
    for p_a in [1.0, 5.0, 10.0] {
        let conv = AmplitudeConvention::PowerConsistent;
        let law = InputLaw::Cscg(Cscg::new(p_a, conv)?);
        let closed = (1.0 + p_a / 2.0).ln() + 1.0;
        cscg = cscg.max((entropy_of_law(&law, &q)? - closed).abs());
        cscg = cscg.max((cscg_entropy(p_a, conv) - closed).abs());
    }
    let laws = [
        AmplitudeDistribution::new(vec![(0.3, 0.2), (1.7, 0.5), (3.9, 0.3)], 4.0)?,
        AmplitudeDistribution::new(vec![(0.0, 0.1), (1.57, 0.3), (2.92, 0.3), (4.35, 0.2), (6.0, 0.1)], 6.0)?,
        make_flash(2, P_A)?,
        make_flash(4, P_A)?,
    ];
    let mut mixture: f64 = 0.0;
    for d in &laws {
        let h = entropy_H(d, &q)?;
        let mut sum = 0.0;
        for &(r, p) in d.points() {
            sum += p * marginal_entropy_density(d, r, &q)?;
        }
        mixture = mixture.max((sum - h).abs());
    }
    Ok(outcome(
        noise <= ENTROPY_TOL && cscg <= ENTROPY_TOL && mixture <= MIXTURE_TOL,
        format!(
            "pure noise {noise:.1e}, CSCG {cscg:.1e} (tol {ENTROPY_TOL:.0e}), mixture identity {mixture:.1e} (tol {MIXTURE_TOL:.0e})"
        ),
    ))
}

fn timesharing() -> Result<Outcome> {
    let target = 2.0 * p_gaussian();
    let l = [4, 8, 16, 32];
    let rows = plateau_demo(P_A, &raw(), &l, target, AmplitudeConvention::PowerConsistent, &QuadratureSpec::default())?;
    let all = rows.len() == l.len();
    let gaps = rows.windows(2).all(|w| w[1].gap < w[0].gap);
    let taus = rows.windows(2).all(|w| w[1].tau < w[0].tau);
    let feasible = rows
        .iter()
        .all(|r| r.mean_power <= P_A * (1.0 + 1e-12) && r.delivered >= target * (1.0 - 1e-12));
    let listed: Vec<String> = rows.iter().map(|r| format!("l {} gap {:.3e} tau {:.3e}", r.l, r.gap, r.tau)).collect();
    Ok(outcome(
        all && gaps && taus && feasible,
        format!(
            "P_d {target:.2}: {}; gap decreasing {gaps}, tau decreasing {taus}, constraints met {feasible}",
            listed.join(", ")
        ),
    ))
}

fn bundle(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .expect("output directory")
        .map(|e| {
            let e = e.expect("directory entry");
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).expect("readable"))
        })
        .collect();
    files.sort();
    files
}

fn determinism() -> Result<Outcome> {
    let cfg = sweep_config(
        vec![4.0, 5.0],
        PdGrid::Step {
            start: 0.56,
            step: 0.1,
            stop: None,
        },
    );
    let mut bundles = Vec::new();
    for threads in [1, 3] {
        let dir = tempfile::tempdir().expect("temporary directory");
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("thread pool");
        pool.install(|| -> Result<()> {
            let region = rpregion::sweep(&cfg)?;
            rpregion::emit(&region, dir.path())?;
            Ok(())
        })?;
        bundles.push(bundle(dir.path()));
    }
    let same = bundles[0] == bundles[1];
    Ok(outcome(
        same && !bundles[0].is_empty(),
        format!(
            "{} files, 1 vs 3 threads {}",
            bundles[0].len(),
            if same { "byte-identical" } else { "DIFFER" }
        ),
    ))
}

fn report(id: usize, name: &str, started: Instant, result: Result<Outcome>) -> bool {
    let o = result.unwrap_or_else(|e| outcome(false, format!("error: {e}")));
    println!(
        "{} C{id:<2} {name:<22} [{:.1?}] {}",
        if o.pass { "PASS" } else { "FAIL" },
        started.elapsed(),
        o.detail
    );
    o.pass
}

fn main() {
    let mut passed = Vec::new();
    let mut run = |id: usize, name: &str, f: &mut dyn FnMut() -> Result<Outcome>| {
        let t = Instant::now();
        passed.push(report(id, name, t, f()));
    };

    run(1, "capacity plateau", &mut plateau);
    run(2, "gaussian endpoints", &mut gaussian_endpoints);

    let finite_cfg = sweep_config(vec![4.0, 5.0, 6.0], shared_grid());
    let t = Instant::now();
    let finite: Vec<Curve> = finite_cfg
        .r_p
        .iter()
        .map(|&r_p| {
            let grid = finite_cfg.noi_grid(r_p).expect("grid");
            noi_curve_on(&finite_cfg, r_p, &grid, Source::Noi)
        })
        .collect();
    let sweep_time = t.elapsed();
    run(3, "kkt verification", &mut || {
        let o = kkt_verification(&finite)?;
        Ok(outcome(o.pass, format!("{} (sweeps {sweep_time:.0?})", o.detail)))
    });

    run(4, "region dominance", &mut || {
        // Every other point of the shared grid keeps the slow infinite-peak
        // solves affordable.
        let cfg = sweep_config(
            vec![f64::INFINITY],
            PdGrid::Step {
                start: 0.56,
                step: 0.1,
                stop: None,
            },
        );
        let gapa = gaussian_curve(&sweep_config(vec![f64::INFINITY], shared_grid()))?;
        let proxy = noi_curve_on(&cfg, f64::INFINITY, &cfg.noi_grid(f64::INFINITY)?, Source::Noi);
        dominance(&gapa, &finite, &proxy)
    });
    run(5, "delivered-power oracle", &mut oracle);
    run(6, "series constants", &mut series);
    run(7, "special functions", &mut special_functions);
    run(8, "entropy identities", &mut entropy_identities);
    run(9, "time sharing", &mut timesharing);
    run(10, "determinism", &mut determinism);

    let failed = passed.iter().filter(|p| !**p).count();
    println!("{} criteria, {failed} failed", passed.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
