//! Rate-power region sweeps.
//!
//! A sweep traces the Gaussian asymmetric-allocation curve (GAPA) and, for
//! each configured peak amplitude, the curve of numerically optimized
//! inputs (NOI) over a grid of delivered-power floors `P_d`. Points of one
//! NOI curve are solved in order of increasing `P_d`, each warm-started
//! from its predecessor; curves for different peaks run in parallel and are
//! gathered in configuration order, so output does not depend on the
//! number of worker threads.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{make_timeshare, peak_list_serde, peak_serde, AmplitudeDistribution, Cscg};
use crate::entropy::{cscg_entropy, entropy_of_mixture};
use crate::error::{Error, Result};
use crate::powermodel::{AmplitudeConvention, PowerPolynomial, PowerSpec};
use crate::quadrature::QuadratureSpec;
use crate::solver::{
    gaussian_family_range, gaussian_power_allocation_for, gaussian_rp_point_for,
    max_feasible_delivered_power, solve_warm, ChannelSpec, SolveResult, SolverKnobs,
};

/// Fraction of an auto grid spaced uniformly; the rest approaches the end
/// geometrically.
const AUTO_UNIFORM_SHARE: f64 = 0.75;
/// Closest approach of the geometric part to the end, relative to the span.
const AUTO_FINEST: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Source {
    #[serde(rename = "GAPA")]
    Gapa,
    #[serde(rename = "NOI")]
    Noi,
    #[serde(rename = "plateau")]
    Plateau,
    #[serde(rename = "timeshare")]
    Timeshare,
}

impl Source {
    pub fn tag(&self) -> &'static str {
        match self {
            Source::Gapa => "gapa",
            Source::Noi => "noi",
            Source::Plateau => "plateau",
            Source::Timeshare => "timeshare",
        }
    }
}

/// One achieved `(P_d, rate)` pair. A point whose solve failed keeps its
/// `P_d` and carries the error instead of a rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RpPoint {
    pub source: Source,
    pub p_d: f64,
    pub rate: Option<f64>,
    pub delivered: Option<f64>,
    #[serde(with = "peak_serde")]
    pub r_p: f64,
    pub m_used: Option<usize>,
    pub verified: bool,
    /// Imaginary-part power of a Gaussian point.
    #[serde(default)]
    pub p_i: Option<f64>,
    #[serde(default)]
    pub distribution: Option<AmplitudeDistribution>,
    #[serde(default)]
    pub flags: Vec<String>,
    #[serde(default)]
    pub error: Option<String>,
}

impl RpPoint {
    fn failed(source: Source, p_d: f64, r_p: f64, e: &Error) -> Self {
        RpPoint {
            source,
            p_d,
            rate: None,
            delivered: None,
            r_p,
            m_used: None,
            verified: false,
            p_i: None,
            distribution: None,
            flags: Vec::new(),
            error: Some(e.to_string()),
        }
    }

    fn from_solve(source: Source, p_d: f64, r_p: f64, s: &SolveResult) -> Self {
        RpPoint {
            source,
            p_d,
            rate: Some(s.rate),
            delivered: Some(s.delivered),
            r_p,
            m_used: Some(s.m_used),
            verified: s.verified,
            p_i: None,
            distribution: Some(s.distribution.clone()),
            flags: s.flags.clone(),
            error: None,
        }
    }

    /// Free-text annotation used in the CSV `note` column.
    pub fn note(&self) -> String {
        match &self.error {
            Some(e) => format!("error: {e}"),
            None => self.flags.join(";"),
        }
    }
}

/// `P_d` values to sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PdGrid {
    /// `points` values from the Gaussian symmetric power to the end of the
    /// curve, uniform at first and geometric towards the end.
    Auto { points: usize },
    /// `start, start + step, ...` up to `stop`, or up to the curve's end
    /// (which is then appended) when `stop` is absent.
    Step {
        start: f64,
        step: f64,
        #[serde(default)]
        stop: Option<f64>,
    },
}

impl Default for PdGrid {
    fn default() -> Self {
        PdGrid::Auto { points: 40 }
    }
}

impl PdGrid {
    pub fn validate(&self) -> Result<()> {
        match *self {
            PdGrid::Auto { points } if points < 2 => {
                Err(Error::Config(format!("auto grid needs at least 2 points, got {points}")))
            }
            PdGrid::Step { start, step, stop } => {
                if !(start.is_finite() && start >= 0.0) {
                    return Err(Error::Config(format!("grid start {start} must be nonnegative")));
                }
                if !(step.is_finite() && step > 0.0) {
                    return Err(Error::Config(format!("grid step {step} must be positive")));
                }
                if let Some(stop) = stop {
                    if !(stop.is_finite() && stop >= start) {
                        return Err(Error::Config(format!("grid stop {stop} must be at least start {start}")));
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Grid values on `[low, end]` where `end` is the last feasible `P_d`.
    pub fn values(&self, low: f64, end: f64) -> Vec<f64> {
        match *self {
            PdGrid::Auto { points } => auto_grid(low, end, points),
            PdGrid::Step { start, step, stop } => {
                let last = stop.map_or(end, |s| s.min(end));
                let mut out = Vec::new();
                let mut k = 0u32;
                loop {
                    let v = start + f64::from(k) * step;
                    if v > last * (1.0 + 1e-12) {
                        break;
                    }
                    out.push(v);
                    k += 1;
                }
                if stop.is_none() && out.last().is_none_or(|&v| v < end * (1.0 - 1e-12)) && start <= end {
                    out.push(end);
                }
                out
            }
        }
    }
}

fn auto_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    if b <= a {
        return vec![b];
    }
    let span = b - a;
    let n_uniform = n / 2;
    let n_geom = n - n_uniform;
    let mut out: Vec<f64> = (0..n_uniform)
        .map(|k| a + AUTO_UNIFORM_SHARE * span * k as f64 / n_uniform as f64)
        .collect();
    // Distances to the end shrink from (1 - share) * span to AUTO_FINEST * span.
    let d0 = (1.0 - AUTO_UNIFORM_SHARE) * span;
    let steps = n_geom.saturating_sub(1);
    for j in 0..steps {
        let t = if steps > 1 { j as f64 / (steps - 1) as f64 } else { 0.0 };
        let d = d0 * (AUTO_FINEST / (1.0 - AUTO_UNIFORM_SHARE)).powf(t);
        out.push(b - d);
    }
    out.push(b);
    out
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

/// Everything a sweep needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub p_a: f64,
    pub power: PowerSpec,
    #[serde(with = "peak_list_serde")]
    pub r_p: Vec<f64>,
    #[serde(default)]
    pub grid: PdGrid,
    #[serde(default)]
    pub knobs: SolverKnobs,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    #[serde(default)]
    pub convention: AmplitudeConvention,
    /// Where [`emit`] writes. Not serialized, so bundles do not depend on
    /// the directory they were written to.
    #[serde(default = "default_output", skip_serializing)]
    pub output: PathBuf,
}

impl SweepConfig {
    pub fn new(p_a: f64, power: PowerSpec, r_p: Vec<f64>) -> Self {
        Self {
            p_a,
            power,
            r_p,
            grid: PdGrid::default(),
            knobs: SolverKnobs::default(),
            quadrature: QuadratureSpec::default(),
            convention: AmplitudeConvention::default(),
            output: default_output(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p_a.is_finite() && self.p_a > 0.0) {
            return Err(Error::Config(format!("P_a = {} must be positive", self.p_a)));
        }
        self.power.validate()?;
        if let Some(&bad) = self.r_p.iter().find(|r| r.is_nan() || **r <= 0.0) {
            return Err(Error::Config(format!("r_p = {bad} must be positive")));
        }
        self.grid.validate()?;
        self.knobs.validate()?;
        self.quadrature.validate()
    }

    pub fn polynomial(&self) -> PowerPolynomial {
        self.power.polynomial()
    }

    /// Delivered power of the symmetric Gaussian input, where every curve
    /// starts.
    pub fn gaussian_symmetric_power(&self) -> Result<f64> {
        Ok(gaussian_family_range(self.p_a, &self.power)?.0)
    }

    /// Last `P_d` of the NOI curve at `r_p`: the feasibility edge, or the
    /// Gaussian family maximum when `r_p` is infinite.
    pub fn curve_end(&self, r_p: f64) -> Result<f64> {
        let edge = max_feasible_delivered_power(self.p_a, r_p, &self.polynomial());
        if edge.is_finite() {
            Ok(edge)
        } else {
            Ok(gaussian_family_range(self.p_a, &self.power)?.1)
        }
    }

    fn start(&self, end: f64) -> Result<f64> {
        let p_g = self.gaussian_symmetric_power()?;
        Ok(if p_g < end { p_g } else { 0.0 })
    }

    pub fn noi_grid(&self, r_p: f64) -> Result<Vec<f64>> {
        let end = self.curve_end(r_p)?;
        Ok(self.grid.values(self.start(end)?, end))
    }

    pub fn gapa_grid(&self) -> Result<Vec<f64>> {
        let (lo, hi) = gaussian_family_range(self.p_a, &self.power)?;
        Ok(self.grid.values(lo, hi))
    }

    fn channel(&self, p_d: f64, r_p: f64) -> ChannelSpec {
        ChannelSpec {
            p_a: self.p_a,
            p_d,
            r_p,
            g: self.polynomial(),
            knobs: self.knobs.clone(),
            quadrature: self.quadrature,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Curve {
    pub source: Source,
    #[serde(with = "peak_serde")]
    pub r_p: f64,
    pub points: Vec<RpPoint>,
}

/// One mass point of one NOI solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub p_d: f64,
    pub index: usize,
    pub r: f64,
    pub p: f64,
}

impl Curve {
    /// Mass-point positions along the curve; empty for Gaussian curves.
    pub fn trajectory(&self) -> Vec<TrajectoryRow> {
        self.points
            .iter()
            .filter_map(|pt| pt.distribution.as_ref().map(|d| (pt.p_d, d)))
            .flat_map(|(p_d, d)| {
                d.points()
                    .iter()
                    .enumerate()
                    .map(move |(index, &(r, p))| TrajectoryRow { p_d, index, r, p })
            })
            .collect()
    }

    /// Rate at exactly `p_d`, if the curve has a successful point there.
    pub fn rate_at(&self, p_d: f64) -> Option<f64> {
        self.points.iter().find(|q| q.p_d == p_d).and_then(|q| q.rate)
    }

    pub fn file_stem(&self, p_a: f64) -> String {
        format!("rp_{}_rp{}_Pa{}", self.source.tag(), number_tag(self.r_p), number_tag(p_a))
    }
}

fn number_tag(x: f64) -> String {
    if x.is_infinite() {
        "inf".into()
    } else {
        format!("{x}")
    }
}

/// The Gaussian curve on the configured grid. `P_d` values below the
/// family minimum map to the symmetric split; values above the maximum are
/// recorded as failed rows.
pub fn gaussian_curve(cfg: &SweepConfig) -> Result<Curve> {
    cfg.validate()?;
    let points = cfg
        .gapa_grid()?
        .into_iter()
        .map(|p_d| {
            let point = gaussian_power_allocation_for(cfg.p_a, p_d, &cfg.power)
                .and_then(|p_i| Ok((p_i, gaussian_rp_point_for(cfg.p_a, p_i, &cfg.power)?)));
            match point {
                Ok((p_i, (rate, delivered))) => RpPoint {
                    source: Source::Gapa,
                    p_d,
                    rate: Some(rate),
                    delivered: Some(delivered),
                    r_p: f64::INFINITY,
                    m_used: None,
                    verified: true,
                    p_i: Some(p_i),
                    distribution: None,
                    flags: Vec::new(),
                    error: None,
                },
                Err(e) => RpPoint::failed(Source::Gapa, p_d, f64::INFINITY, &e),
            }
        })
        .collect();
    Ok(Curve {
        source: Source::Gapa,
        r_p: f64::INFINITY,
        points,
    })
}

/// NOI curve at peak `r_p` over `grid`, warm-starting every point from the
/// last successful one. Failures are kept in-row.
pub fn noi_curve_on(cfg: &SweepConfig, r_p: f64, grid: &[f64], source: Source) -> Curve {
    let mut warm: Option<SolveResult> = None;
    let mut points = Vec::with_capacity(grid.len());
    for &p_d in grid {
        let spec = cfg.channel(p_d, r_p);
        match solve_warm(&spec, warm.as_ref()) {
            Ok(s) => {
                log::info!(
                    "r_p {r_p} P_d {p_d}: rate {} m {} verified {}",
                    s.rate,
                    s.m_used,
                    s.verified
                );
                points.push(RpPoint::from_solve(source, p_d, r_p, &s));
                warm = Some(s);
            }
            Err(e) => {
                log::warn!("r_p {r_p} P_d {p_d}: {e}");
                points.push(RpPoint::failed(source, p_d, r_p, &e));
            }
        }
    }
    Curve { source, r_p, points }
}

/// NOI curve at `r_p` on the configured grid.
pub fn noi_curve(cfg: &SweepConfig, r_p: f64) -> Result<Curve> {
    cfg.validate()?;
    let grid = cfg.noi_grid(r_p)?;
    Ok(noi_curve_on(cfg, r_p, &grid, Source::Noi))
}

/// Rates at an infinite peak for floors at or below the Gaussian symmetric
/// power, where capacity stays at `ln(1 + P_a/2)`.
pub fn plateau_points(cfg: &SweepConfig, p_d: &[f64]) -> Result<Curve> {
    cfg.validate()?;
    Ok(noi_curve_on(cfg, f64::INFINITY, p_d, Source::Plateau))
}

/// Results of a full sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Region {
    pub config: SweepConfig,
    pub gapa: Curve,
    pub noi: Vec<Curve>,
}

/// GAPA plus one NOI curve per configured peak.
pub fn sweep(cfg: &SweepConfig) -> Result<Region> {
    cfg.validate()?;
    let gapa = gaussian_curve(cfg)?;
    let noi = cfg
        .r_p
        .par_iter()
        .map(|&r_p| noi_curve(cfg, r_p))
        .collect::<Result<Vec<_>>>()?;
    Ok(Region {
        config: cfg.clone(),
        gapa,
        noi,
    })
}

/// One row of the time-sharing table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeshareRow {
    pub l: u32,
    pub tau: f64,
    /// Delivered power of the flash component.
    pub flash_power: f64,
    pub entropy: f64,
    /// `ln(1 + P_a/2) + 1 - H(F_ts)`.
    pub gap: f64,
    pub delivered: f64,
    pub mean_power: f64,
}

impl TimeshareRow {
    pub fn to_point(&self, p_d: f64) -> RpPoint {
        RpPoint {
            source: Source::Timeshare,
            p_d,
            rate: Some(self.entropy - 1.0),
            delivered: Some(self.delivered),
            r_p: f64::INFINITY,
            m_used: None,
            verified: false,
            p_i: None,
            distribution: None,
            flags: vec![format!("l={}", self.l), format!("tau={}", self.tau)],
            error: None,
        }
    }
}

/// Time-sharing between CSCG and flash signalling at the floor `p_d`, for
/// each `l`. Values of `l` whose flash component cannot reach `p_d` are
/// skipped.
pub fn plateau_demo(
    p_a: f64,
    g: &PowerPolynomial,
    l_list: &[u32],
    p_d: f64,
    convention: AmplitudeConvention,
    q: &QuadratureSpec,
) -> Result<Vec<TimeshareRow>> {
    let p_g = Cscg::new(p_a, convention)?.expected_g(g);
    if !(p_d > p_g) {
        return Err(Error::Config(format!(
            "time-sharing needs P_d above the Gaussian power {p_g}, got {p_d}"
        )));
    }
    let ceiling = cscg_entropy(p_a, convention);
    let mut rows = Vec::new();
    for &l in l_list {
        let mix = match make_timeshare(p_a, p_d, g, l, convention) {
            Ok(m) => m,
            Err(Error::IncreaseFlash { .. }) => continue,
            Err(e) => return Err(e),
        };
        let entropy = entropy_of_mixture(&mix, q)?;
        rows.push(TimeshareRow {
            l,
            tau: mix.tau,
            flash_power: mix.spike.expect(|r| g.eval(r)),
            entropy,
            gap: ceiling - entropy,
            delivered: mix.expected_g(g),
            mean_power: mix.mean_power(),
        });
    }
    Ok(rows)
}

/// Files written by [`emit`].
#[derive(Debug, Clone, Default)]
pub struct Emitted {
    pub files: Vec<PathBuf>,
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, |v| format!("{v}"))
}

/// CSV text of a curve.
pub fn curve_csv(c: &Curve) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Config(format!("csv: {e}"));
    w.write_record(["P_d", "rate_nats", "delivered", "r_p", "m", "verified", "note"])
        .map_err(io)?;
    for pt in &c.points {
        w.write_record([
            format!("{}", pt.p_d),
            opt(pt.rate),
            opt(pt.delivered),
            number_tag(pt.r_p),
            pt.m_used.map_or_else(String::new, |m| m.to_string()),
            pt.verified.to_string(),
            pt.note(),
        ])
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// CSV text of a trajectory table.
pub fn trajectory_csv(rows: &[TrajectoryRow]) -> String {
    let mut s = String::from("P_d,index,r,p\n");
    for t in rows {
        let _ = writeln!(s, "{},{},{},{}", t.p_d, t.index, t.r, t.p);
    }
    s
}

/// Writes one CSV per curve, one trajectory CSV per NOI curve and a JSON
/// bundle with the full distributions into `dir`.
pub fn emit(region: &Region, dir: &Path) -> Result<Emitted> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let p_a = region.config.p_a;
    let mut out = Emitted::default();
    for c in std::iter::once(&region.gapa).chain(&region.noi) {
        let path = dir.join(format!("{}.csv", c.file_stem(p_a)));
        write_file(&path, curve_csv(c)?.as_bytes())?;
        out.files.push(path);
        if c.source != Source::Gapa {
            let path = dir.join(format!("traj_{}.csv", c.file_stem(p_a)));
            write_file(&path, trajectory_csv(&c.trajectory()).as_bytes())?;
            out.files.push(path);
        }
    }
    let path = dir.join(format!("rp_region_Pa{}.json", number_tag(p_a)));
    let mut json = serde_json::to_string_pretty(region)?;
    json.push('\n');
    write_file(&path, json.as_bytes())?;
    out.files.push(path);
    Ok(out)
}

/// Reads a bundle written by [`emit`].
pub fn load_bundle(path: &Path) -> Result<Region> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}
