//! Input amplitude laws: finite discrete distributions, the Rayleigh
//! amplitude of a circularly symmetric Gaussian input, flash signalling and
//! time-sharing mixtures.

use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::powermodel::{
    flash_power, rayleigh_delivered_power, rayleigh_even_moment, AmplitudeConvention,
    PowerPolynomial,
};

/// Allowed deviation of `Σ p_j` from one.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Finite set of amplitudes `r_j` with probabilities `p_j`, supported on
/// `[0, peak]`. Points are strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeDistribution {
    points: Vec<(f64, f64)>,
    peak: f64,
}

impl AmplitudeDistribution {
    /// Strict constructor: every invariant must already hold.
    pub fn new(points: Vec<(f64, f64)>, peak: f64) -> Result<Self> {
        let d = Self { points, peak };
        d.validate()?;
        Ok(d)
    }

    /// Unit mass at `r`, with infinite peak.
    pub fn point_mass(r: f64) -> Self {
        Self {
            points: vec![(r.max(0.0), 1.0)],
            peak: f64::INFINITY,
        }
    }

    /// Lenient constructor used on optimizer output: clamps negative
    /// probabilities, drops empty points, sorts, merges points closer than
    /// `min_separation` (positions averaged by weight) and renormalizes.
    pub fn normalized(points: Vec<(f64, f64)>, peak: f64, min_separation: f64) -> Result<Self> {
        if points.iter().any(|(r, p)| !r.is_finite() || !p.is_finite()) {
            return Err(Error::InvalidDistribution("non-finite point".into()));
        }
        let mut pts: Vec<(f64, f64)> = points
            .into_iter()
            .map(|(r, p)| (r.clamp(0.0, peak), p.max(0.0)))
            .filter(|&(_, p)| p > 0.0)
            .collect();
        let total: f64 = pts.iter().map(|p| p.1).sum();
        if pts.is_empty() || total <= 0.0 {
            return Err(Error::InvalidDistribution("no positive mass".into()));
        }
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
        for (r, p) in pts {
            match merged.last_mut() {
                Some(last) if r - last.0 <= min_separation => {
                    let w = last.1 + p;
                    // Keep boundary points pinned where they are.
                    let pos = if last.0 == 0.0 || r == peak {
                        if r == peak { r } else { 0.0 }
                    } else {
                        (last.0 * last.1 + r * p) / w
                    };
                    *last = (pos, w);
                }
                _ => merged.push((r, p)),
            }
        }
        for pt in &mut merged {
            pt.1 /= total;
        }
        Self::new(merged, peak)
    }

    /// The same law with points closer than `min_separation` merged.
    pub fn merged(&self, min_separation: f64) -> Self {
        Self::normalized(self.points.clone(), self.peak, min_separation)
            .expect("a valid distribution stays valid under merging")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidDistribution(m));
        if self.peak.is_nan() || self.peak < 0.0 {
            return bad(format!("peak {} must be nonnegative", self.peak));
        }
        if self.points.is_empty() {
            return bad("empty support".into());
        }
        let mut sum = 0.0;
        let mut prev = f64::NEG_INFINITY;
        for &(r, p) in &self.points {
            if !r.is_finite() || r < 0.0 || r > self.peak {
                return bad(format!("amplitude {r} outside [0, {}]", self.peak));
            }
            if !p.is_finite() || p < 0.0 {
                return bad(format!("probability {p} at r = {r}"));
            }
            if r <= prev {
                return bad(format!("amplitudes not strictly increasing at r = {r}"));
            }
            prev = r;
            sum += p;
        }
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return bad(format!("probabilities sum to {sum}"));
        }
        Ok(())
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn peak(&self) -> f64 {
        self.peak
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn support(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.0).collect()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.1).collect()
    }

    pub fn max_amplitude(&self) -> f64 {
        self.points.last().map_or(0.0, |p| p.0)
    }

    /// `E[r^{2i}]`.
    pub fn even_moment(&self, i: usize) -> f64 {
        self.points
            .iter()
            .map(|&(r, p)| p * (r * r).powi(i as i32))
            .sum()
    }

    /// `E[r²]`.
    pub fn mean_power(&self) -> f64 {
        self.even_moment(1)
    }

    /// `E[h(r)]`.
    pub fn expect(&self, h: impl Fn(f64) -> f64) -> f64 {
        self.points.iter().map(|&(r, p)| p * h(r)).sum()
    }

    /// Same points with a different peak.
    pub fn with_peak(&self, peak: f64) -> Result<Self> {
        Self::new(self.points.clone(), peak)
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        let w = WeightedIndex::new(self.points.iter().map(|p| p.1))
            .expect("validated probabilities are nonnegative with positive sum");
        (0..n).map(|_| self.points[w.sample(rng)].0).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Serde adapter for a peak amplitude that may be infinite, written as a
/// number or the string `"inf"`.
pub mod peak_serde {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::PeakRepr;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        PeakRepr::from_value(*v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        PeakRepr::deserialize(d)?
            .value()
            .map_err(serde::de::Error::custom)
    }
}

/// [`peak_serde`] for a list of peaks.
pub mod peak_list_serde {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::PeakRepr;

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|&x| PeakRepr::from_value(x)).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Vec::<PeakRepr>::deserialize(d)?
            .into_iter()
            .map(|p| p.value().map_err(serde::de::Error::custom))
            .collect()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum PeakRepr {
    Number(f64),
    Text(String),
}

impl PeakRepr {
    fn from_value(v: f64) -> Self {
        if v.is_infinite() && v > 0.0 {
            PeakRepr::Text("inf".into())
        } else {
            PeakRepr::Number(v)
        }
    }

    fn value(self) -> std::result::Result<f64, String> {
        match self {
            PeakRepr::Number(v) => Ok(v),
            PeakRepr::Text(t) if t == "inf" => Ok(f64::INFINITY),
            PeakRepr::Text(t) => Err(format!("peak must be a number or \"inf\", got {t:?}")),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DistributionRepr {
    peak: PeakRepr,
    points: Vec<[f64; 2]>,
}

impl Serialize for AmplitudeDistribution {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        DistributionRepr {
            peak: PeakRepr::from_value(self.peak),
            points: self.points.iter().map(|&(r, p)| [r, p]).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for AmplitudeDistribution {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = DistributionRepr::deserialize(d)?;
        let peak = repr.peak.value().map_err(D::Error::custom)?;
        AmplitudeDistribution::new(repr.points.into_iter().map(|[r, p]| (r, p)).collect(), peak)
            .map_err(D::Error::custom)
    }
}

/// Rayleigh amplitude of a circularly symmetric Gaussian input with average
/// power `p_a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cscg {
    pub p_a: f64,
    #[serde(default)]
    pub convention: AmplitudeConvention,
}

impl Cscg {
    pub fn new(p_a: f64, convention: AmplitudeConvention) -> Result<Self> {
        if !(p_a.is_finite() && p_a > 0.0) {
            return Err(Error::InvalidDistribution(format!("CSCG power {p_a} must be positive")));
        }
        Ok(Self { p_a, convention })
    }

    /// `E[r²]` under the configured convention.
    pub fn scale(&self) -> f64 {
        self.convention.rayleigh_scale(self.p_a)
    }

    pub fn even_moment(&self, i: usize) -> f64 {
        rayleigh_even_moment(i, self.scale())
    }

    pub fn expected_g(&self, g: &PowerPolynomial) -> f64 {
        rayleigh_delivered_power(self.p_a, g, self.convention)
            .expect("p_a validated on construction")
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        let e = Exp::new(1.0 / self.scale()).expect("positive rate");
        (0..n).map(|_| e.sample(rng).sqrt()).collect()
    }
}

/// Continuous or discrete component of a time-sharing mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixtureBase {
    Discrete(AmplitudeDistribution),
    Cscg(Cscg),
}

/// `(1 - τ) base + τ spike`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub tau: f64,
    pub base: MixtureBase,
    pub spike: AmplitudeDistribution,
}

impl MixtureSpec {
    pub fn new(tau: f64, base: MixtureBase, spike: AmplitudeDistribution) -> Result<Self> {
        if !(tau > 0.0 && tau < 1.0) {
            return Err(Error::TimeshareWeight(tau));
        }
        Ok(Self { tau, base, spike })
    }

    pub fn even_moment(&self, i: usize) -> f64 {
        let base = match &self.base {
            MixtureBase::Discrete(d) => d.even_moment(i),
            MixtureBase::Cscg(c) => c.even_moment(i),
        };
        (1.0 - self.tau) * base + self.tau * self.spike.even_moment(i)
    }

    pub fn mean_power(&self) -> f64 {
        self.even_moment(1)
    }

    pub fn expected_g(&self, g: &PowerPolynomial) -> f64 {
        g.expectation_from_moments(|i| self.even_moment(i))
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        (0..n)
            .map(|_| {
                if rng.random::<f64>() < self.tau {
                    self.spike.sample(1, rng)[0]
                } else {
                    match &self.base {
                        MixtureBase::Discrete(d) => d.sample(1, rng)[0],
                        MixtureBase::Cscg(c) => c.sample(1, rng)[0],
                    }
                }
            })
            .collect()
    }
}

/// Any supported input amplitude law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputLaw {
    Discrete(AmplitudeDistribution),
    Cscg(Cscg),
    Mixture(MixtureSpec),
}

impl InputLaw {
    pub fn even_moment(&self, i: usize) -> f64 {
        match self {
            Self::Discrete(d) => d.even_moment(i),
            Self::Cscg(c) => c.even_moment(i),
            Self::Mixture(m) => m.even_moment(i),
        }
    }

    pub fn mean_power(&self) -> f64 {
        self.even_moment(1)
    }

    pub fn expected_g(&self, g: &PowerPolynomial) -> f64 {
        g.expectation_from_moments(|i| self.even_moment(i))
    }

    /// Reproducible amplitude draws from an explicit generator.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        match self {
            Self::Discrete(d) => d.sample(n, rng),
            Self::Cscg(c) => c.sample(n, rng),
            Self::Mixture(m) => m.sample(n, rng),
        }
    }
}

/// `{0 w.p. 1 - 1/l², √P_a·l w.p. 1/l²}`, which meets `E[r²] = P_a`.
pub fn make_flash(l: u32, p_a: f64) -> Result<AmplitudeDistribution> {
    if l < 2 {
        return Err(Error::domain("make_flash", format!("l = {l}, need l >= 2")));
    }
    if !(p_a.is_finite() && p_a > 0.0) {
        return Err(Error::domain("make_flash", format!("P_a = {p_a}, need P_a > 0")));
    }
    let l = f64::from(l);
    let q = 1.0 / (l * l);
    AmplitudeDistribution::new(vec![(0.0, 1.0 - q), (p_a.sqrt() * l, q)], f64::INFINITY)
}

/// Time-sharing between the CSCG law and flash signalling that meets the
/// delivered-power target `p_d` with equality:
/// `τ = (P_d - P_G) / (P_{d,l} - P_G)`.
pub fn make_timeshare(
    p_a: f64,
    p_d: f64,
    g: &PowerPolynomial,
    l: u32,
    convention: AmplitudeConvention,
) -> Result<MixtureSpec> {
    let cscg = Cscg::new(p_a, convention)?;
    let p_g = cscg.expected_g(g);
    let p_dl = flash_power(l, p_a, g)?;
    if p_dl <= p_d {
        return Err(Error::IncreaseFlash {
            l,
            flash_power: p_dl,
            target: p_d,
        });
    }
    let tau = (p_d - p_g) / (p_dl - p_g);
    MixtureSpec::new(tau, MixtureBase::Cscg(cscg), make_flash(l, p_a)?)
}
