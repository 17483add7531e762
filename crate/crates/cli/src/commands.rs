//! Subcommand bodies. Each returns the process exit status.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use swipt_core::distributions::Cscg;
use swipt_core::powermodel::{delivered_power, discrete_moments, expected_g, SincSeriesConstants, SincSum};
use swipt_core::rpregion::{self, curve_csv, gaussian_curve, plateau_demo, sweep};
use swipt_core::solver::{max_feasible_delivered_power, solve, verify_kkt};
use swipt_core::{AmplitudeDistribution, KktReport, PowerSpec, SolveResult};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::selftest;

/// Writes to stdout; a closed pipe ends the process quietly.
fn emit(text: &str) {
    let mut o = std::io::stdout().lock();
    if let Err(e) = o.write_all(text.as_bytes()).and_then(|_| o.flush()) {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
        eprintln!("error: stdout: {e}");
        std::process::exit(i32::from(EXIT_ERROR));
    }
}

macro_rules! say {
    ($($t:tt)*) => {
        emit(&(format!($($t)*) + "\n"))
    };
}

pub const EXIT_OK: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_UNVERIFIED: u8 = 2;

fn peak_label(r_p: f64) -> String {
    if r_p.is_finite() {
        format!("{r_p}")
    } else {
        "inf".into()
    }
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn render_kkt(out: &mut String, k: &KktReport) {
    let _ = writeln!(
        out,
        "KKT: lambda {:.6e}, mu {:.6e}, K {:.9}, support residual {:.2e}, grid violation {:.2e} at r = {:.3} (tol {:.2e}), {}",
        k.lambda,
        k.mu,
        k.k,
        k.max_support_residual(),
        k.grid_violation,
        k.grid_argmax,
        k.tolerance,
        if k.verified { "verified" } else { "NOT verified" }
    );
    if !k.clamped.is_empty() {
        let _ = writeln!(out, "  clamped multipliers: {}", k.clamped.join(", "));
    }
}

fn render_solve(cfg: &RunConfig, r_p: f64, res: &SolveResult) -> String {
    let u = cfg.units;
    let mut out = String::new();
    let _ = writeln!(out, "P_a = {}, P_d = {}, r_p = {}", cfg.p_a, cfg.p_d, peak_label(r_p));
    let _ = writeln!(out, "rate       {:.9} {}", u.convert(res.rate), u.label());
    let _ = writeln!(out, "delivered  {:.9}", res.delivered);
    let _ = writeln!(out, "mean power {:.9}", res.mean_power);
    let _ = writeln!(out, "mass points ({}):", res.m_used);
    for &(r, p) in res.distribution.points() {
        let _ = writeln!(out, "  r = {r:>12.8}  p = {p:.10}");
    }
    render_kkt(&mut out, &res.kkt);
    if !res.flags.is_empty() {
        let _ = writeln!(out, "flags: {}", res.flags.join(", "));
    }
    out
}

pub fn capacity(cfg: &RunConfig, json: bool, save: Option<&Path>) -> CliResult<u8> {
    let r_p = cfg.r_p[0];
    let spec = cfg.channel(cfg.p_d, r_p);
    let res = solve(&spec)?;
    let text = res.to_json()? + "\n";
    if let Some(path) = save {
        write_text(path, &text)?;
    }
    if json {
        emit(&text);
    } else {
        emit(&render_solve(cfg, r_p, &res));
    }
    Ok(if res.verified { EXIT_OK } else { EXIT_UNVERIFIED })
}

pub fn rp_region(cfg: &RunConfig) -> CliResult<u8> {
    let region = sweep(&cfg.sweep())?;
    let emitted = rpregion::emit(&region, &cfg.output)?;
    let u = cfg.units;
    let gapa = &region.gapa.points;
    if let (Some(a), Some(b)) = (gapa.first(), gapa.last()) {
        say!(
            "GAPA: {} points, rate {:.6} .. {:.6} {}",
            gapa.len(),
            u.convert(a.rate.unwrap_or(f64::NAN)),
            u.convert(b.rate.unwrap_or(f64::NAN)),
            u.label()
        );
    }
    for c in &region.noi {
        let verified = c.points.iter().filter(|p| p.verified).count();
        let failed = c.points.iter().filter(|p| p.error.is_some()).count();
        say!(
            "NOI r_p = {}: {} points, {verified} verified, {failed} failed",
            peak_label(c.r_p),
            c.points.len()
        );
    }
    for f in &emitted.files {
        say!("wrote {}", f.display());
    }
    Ok(EXIT_OK)
}

pub fn gaussian_rp(cfg: &RunConfig, csv: bool) -> CliResult<u8> {
    let curve = gaussian_curve(&cfg.sweep())?;
    if csv {
        emit(&curve_csv(&curve)?);
        return Ok(EXIT_OK);
    }
    let u = cfg.units;
    say!("{:>14} {:>14} {:>14}", "P_i", "P_d", format!("rate [{}]", u.label()));
    for p in &curve.points {
        say!(
            "{:>14.9} {:>14.9} {:>14.9}",
            p.p_i.unwrap_or(f64::NAN),
            p.delivered.unwrap_or(f64::NAN),
            u.convert(p.rate.unwrap_or(f64::NAN))
        );
    }
    Ok(EXIT_OK)
}

pub fn verify(cfg: &RunConfig, file: &Path, json: bool) -> CliResult<u8> {
    let text = std::fs::read_to_string(file).map_err(|e| CliError::io(file, e))?;
    let d = AmplitudeDistribution::from_json(&text)?;
    let spec = cfg.channel(cfg.p_d, d.peak());
    let report = verify_kkt(&spec, &d, cfg.knobs.kkt_grid)?;
    if json {
        say!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{} mass points, E[r^2] = {:.9}, E[g] = {:.9}, P_a = {}, P_d = {}, r_p = {}",
            d.len(),
            d.mean_power(),
            expected_g(&d, &spec.g),
            cfg.p_a,
            cfg.p_d,
            peak_label(d.peak())
        );
        render_kkt(&mut out, &report);
        emit(&out);
    }
    Ok(if report.verified { EXIT_OK } else { EXIT_UNVERIFIED })
}

pub fn timeshare(cfg: &RunConfig, p_d: Option<f64>, l: &[u32], json: bool) -> CliResult<u8> {
    let g = cfg.power.polynomial();
    let p_g = Cscg::new(cfg.p_a, cfg.convention)?.expected_g(&g);
    let target = p_d.unwrap_or(2.0 * p_g);
    let rows = plateau_demo(cfg.p_a, &g, l, target, cfg.convention, &cfg.quadrature)?;
    if json {
        say!("{}", serde_json::to_string_pretty(&rows)?);
        return Ok(EXIT_OK);
    }
    let u = cfg.units;
    say!("P_a = {}, P_d = {target} (Gaussian power {p_g:.6})", cfg.p_a);
    say!(
        "{:>5} {:>14} {:>14} {:>14} {:>14} {:>14}",
        "l",
        "tau",
        "flash power",
        format!("rate [{}]", u.label()),
        "gap",
        "delivered"
    );
    for r in &rows {
        say!(
            "{:>5} {:>14.6e} {:>14.6} {:>14.9} {:>14.6e} {:>14.9}",
            r.l,
            r.tau,
            r.flash_power,
            u.convert(r.entropy - 1.0),
            u.convert(r.gap),
            r.delivered
        );
    }
    if rows.len() < l.len() {
        say!("({} values of l skipped: flash power below the target)", l.len() - rows.len());
    }
    Ok(EXIT_OK)
}

pub enum PowerInput<'a> {
    Distribution(&'a Path),
    Gaussian { p_i: f64 },
}

pub fn power(cfg: &RunConfig, input: PowerInput<'_>) -> CliResult<u8> {
    match input {
        PowerInput::Distribution(file) => {
            let text = std::fs::read_to_string(file).map_err(|e| CliError::io(file, e))?;
            let d = AmplitudeDistribution::from_json(&text)?;
            let g = cfg.power.polynomial();
            say!("E[r^2]     {:.12}", d.mean_power());
            say!("E[g(r)]    {:.12}", expected_g(&d, &g));
            if let PowerSpec::Rectenna(rect) = &cfg.power {
                let delivered = delivered_power(&discrete_moments(&d), rect)?;
                say!("delivered  {delivered:.12}");
            }
            let edge = max_feasible_delivered_power(cfg.p_a, d.peak(), &g);
            say!("edge       {edge:.12} (largest feasible P_d at P_a = {})", cfg.p_a);
        }
        PowerInput::Gaussian { p_i } => {
            if !(0.0..=cfg.p_a).contains(&p_i) {
                return Err(CliError::Config(format!("P_i = {p_i} must lie in [0, P_a = {}]", cfg.p_a)));
            }
            let delivered = cfg.power.gaussian_power(cfg.p_a - p_i, p_i)?;
            say!("P_r = {}, P_i = {p_i}", cfg.p_a - p_i);
            say!("delivered  {delivered:.12}");
        }
    }
    Ok(EXIT_OK)
}

/// Parses `NAME=VALUE` overrides of the reference series constants.
pub fn tampered_reference(pairs: &[String]) -> CliResult<SincSeriesConstants> {
    let mut reference = SincSeriesConstants::exact();
    for pair in pairs {
        let (name, value) = pair
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("expected NAME=VALUE, got {pair}")))?;
        let which = SincSum::ALL
            .into_iter()
            .find(|w| w.name() == name.trim())
            .ok_or_else(|| CliError::Config(format!("unknown series constant {name}")))?;
        let v: f64 = value
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("bad value in {pair}")))?;
        *reference.get_mut(which) = v;
    }
    Ok(reference)
}

pub fn selftest(reference: &SincSeriesConstants, json: bool) -> CliResult<u8> {
    let report = selftest::run(reference);
    if json {
        say!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        emit(&report.render());
    }
    Ok(if report.passed { EXIT_OK } else { EXIT_ERROR })
}
