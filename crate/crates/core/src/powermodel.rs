//! Delivered-power models.
//!
//! Two surrogates are used: the even polynomial `g(r) = Σ α_i r^{2i}` that
//! the optimizer constrains, and the moment-based baseband formula for the
//! rectenna output, `α(Q + Q̃) + βP + γ`, which depends on the second,
//! third and fourth moments of the complex input symbol (including cross
//! moments of its real and imaginary parts).

use serde::{Deserialize, Serialize};

use crate::distributions::AmplitudeDistribution;
use crate::error::{Error, Result};

/// `g(r) = Σ_i α_i r^{2i}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PowerPolynomial {
    alpha: Vec<f64>,
}

impl PowerPolynomial {
    /// Trailing zero coefficients are dropped. The leading coefficient of a
    /// non-constant polynomial must be positive and `g(0) = α_0 >= 0`.
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        let mut alpha = alpha;
        if alpha.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidPolynomial(format!(
                "non-finite coefficient in {alpha:?}"
            )));
        }
        while alpha.len() > 1 && *alpha.last().expect("non-empty") == 0.0 {
            alpha.pop();
        }
        if alpha.is_empty() {
            return Err(Error::InvalidPolynomial("no coefficients".into()));
        }
        if alpha.len() > 1 && alpha[alpha.len() - 1] <= 0.0 {
            return Err(Error::InvalidPolynomial(format!(
                "leading coefficient must be positive, got {alpha:?}"
            )));
        }
        if alpha[0] < 0.0 {
            return Err(Error::InvalidPolynomial(format!(
                "g(0) = {} is negative",
                alpha[0]
            )));
        }
        Ok(Self { alpha })
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.alpha
    }

    /// Highest power of `r^2`.
    pub fn degree(&self) -> usize {
        self.alpha.len() - 1
    }

    pub fn eval(&self, r: f64) -> f64 {
        let u = r * r;
        self.alpha.iter().rev().fold(0.0, |acc, &a| acc * u + a)
    }

    /// `dg/dr`.
    pub fn derivative(&self, r: f64) -> f64 {
        let u = r * r;
        let mut acc = 0.0;
        for (i, &a) in self.alpha.iter().enumerate().skip(1).rev() {
            acc = acc * u + 2.0 * i as f64 * a;
        }
        acc * r
    }

    /// `d²g/dr²`.
    pub fn second_derivative(&self, r: f64) -> f64 {
        let u = r * r;
        let mut acc = 0.0;
        for (i, &a) in self.alpha.iter().enumerate().skip(1).rev() {
            let i = i as f64;
            acc = acc * u + 2.0 * i * (2.0 * i - 1.0) * a;
        }
        acc
    }

    /// `Σ α_i m_i` given the even moments `m_i = E[r^{2i}]`.
    pub fn expectation_from_moments(&self, moment: impl Fn(usize) -> f64) -> f64 {
        self.alpha
            .iter()
            .enumerate()
            .map(|(i, &a)| if a == 0.0 { 0.0 } else { a * moment(i) })
            .sum()
    }

    /// Whether `g` is nonnegative, nondecreasing and convex on `[0, r_max]`,
    /// checked on a grid. These are the shape conditions behind the
    /// closed-form feasibility edge.
    pub fn is_convex_increasing_on(&self, r_max: f64) -> bool {
        let n = 512;
        (0..=n).all(|k| {
            let r = r_max * k as f64 / n as f64;
            self.eval(r) >= 0.0
                && self.derivative(r) >= -1e-12
                && self.second_derivative(r) >= -1e-12
        })
    }
}

impl TryFrom<Vec<f64>> for PowerPolynomial {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<PowerPolynomial> for Vec<f64> {
    fn from(g: PowerPolynomial) -> Self {
        g.alpha
    }
}

/// Small-signal diode model with Taylor coefficients `k2`, `k4`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RectennaModel {
    pub k2: f64,
    pub k4: f64,
}

impl RectennaModel {
    /// `k2 > 0` and `k4 >= 0`; `k4 = 0` is the linear limit.
    pub fn new(k2: f64, k4: f64) -> Result<Self> {
        let m = Self { k2, k4 };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k2.is_finite() && self.k2 > 0.0 && self.k4.is_finite() && self.k4 >= 0.0) {
            return Err(Error::InvalidPolynomial(format!(
                "rectenna coefficients need k2 > 0, k4 >= 0 (got k2 = {}, k4 = {})",
                self.k2, self.k4
            )));
        }
        Ok(())
    }

    pub fn alpha(&self) -> f64 {
        1.5 * self.k4
    }

    pub fn beta(&self) -> f64 {
        self.k2 + 48.0 * self.k4
    }

    pub fn gamma(&self) -> f64 {
        4.0 * self.k2 + 96.0 * self.k4
    }

    /// `g_NL(r) = (3k4/2) r^4 + (k2 + 24k4) r^2 + 4k2 + 48k4`.
    pub fn g_nl(&self) -> PowerPolynomial {
        PowerPolynomial::new(vec![
            4.0 * self.k2 + 48.0 * self.k4,
            self.k2 + 24.0 * self.k4,
            1.5 * self.k4,
        ])
        .expect("validated coefficients give a valid polynomial")
    }
}

/// Free-function form of [`RectennaModel::g_nl`].
pub fn g_nl(rect: &RectennaModel) -> PowerPolynomial {
    rect.g_nl()
}

/// The delivered-power model of a run: rectenna coefficients, or a raw
/// polynomial `g` given directly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PowerSpec {
    Rectenna(RectennaModel),
    Raw(PowerPolynomial),
}

impl PowerSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            PowerSpec::Rectenna(r) => r.validate(),
            PowerSpec::Raw(_) => Ok(()),
        }
    }

    /// The polynomial the optimizer constrains.
    pub fn polynomial(&self) -> PowerPolynomial {
        match self {
            PowerSpec::Rectenna(r) => r.g_nl(),
            PowerSpec::Raw(g) => g.clone(),
        }
    }

    /// Delivered power of a zero-mean Gaussian input with independent parts
    /// of variances `var_r`, `var_i`: the moment formula for a rectenna,
    /// `E[g(|x|)]` for a raw polynomial.
    pub fn gaussian_power(&self, var_r: f64, var_i: f64) -> Result<f64> {
        match self {
            PowerSpec::Rectenna(r) => delivered_power(&gaussian_moments(0.0, 0.0, var_r, var_i)?, r),
            PowerSpec::Raw(g) => {
                if !(var_r >= 0.0 && var_i >= 0.0 && var_r.is_finite() && var_i.is_finite()) {
                    return Err(Error::InvalidMoments(format!(
                        "variances must be finite and nonnegative (got {var_r}, {var_i})"
                    )));
                }
                Ok(gaussian_expected_g(var_r, var_i, g))
            }
        }
    }
}

/// Moments of the complex input symbol `x = x_r + j x_i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSet {
    pub mu_r: f64,
    pub mu_i: f64,
    /// `E[x_r^2]`, `E[x_i^2]`.
    pub p_r: f64,
    pub p_i: f64,
    /// `E[x_r^3]`, `E[x_i^3]`.
    pub t_r: f64,
    pub t_i: f64,
    /// `E[x_r^4]`, `E[x_i^4]`.
    pub q_r: f64,
    pub q_i: f64,
    /// `E[x_r x_i]`.
    pub e_ri: f64,
    /// `E[x_r^2 x_i^2]`.
    pub e_rrii: f64,
    /// `E[x_r x_i^2]`.
    pub e_rii: f64,
    /// `E[x_r^2 x_i]`.
    pub e_rri: f64,
}

impl MomentSet {
    /// Moment set with independent real and imaginary parts.
    #[allow(clippy::too_many_arguments)]
    pub fn independent(
        mu_r: f64,
        mu_i: f64,
        p_r: f64,
        p_i: f64,
        t_r: f64,
        t_i: f64,
        q_r: f64,
        q_i: f64,
    ) -> Self {
        Self {
            mu_r,
            mu_i,
            p_r,
            p_i,
            t_r,
            t_i,
            q_r,
            q_i,
            e_ri: mu_r * mu_i,
            e_rrii: p_r * p_i,
            e_rii: mu_r * p_i,
            e_rri: p_r * mu_i,
        }
    }

    /// Deterministic symbol `x = x_r + j x_i`.
    pub fn point(x_r: f64, x_i: f64) -> Self {
        Self {
            mu_r: x_r,
            mu_i: x_i,
            p_r: x_r * x_r,
            p_i: x_i * x_i,
            t_r: x_r.powi(3),
            t_i: x_i.powi(3),
            q_r: x_r.powi(4),
            q_i: x_i.powi(4),
            e_ri: x_r * x_i,
            e_rrii: x_r * x_r * x_i * x_i,
            e_rii: x_r * x_i * x_i,
            e_rri: x_r * x_r * x_i,
        }
    }

    pub fn zero() -> Self {
        Self::point(0.0, 0.0)
    }

    /// Same moments with real and imaginary parts exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            mu_r: self.mu_i,
            mu_i: self.mu_r,
            p_r: self.p_i,
            p_i: self.p_r,
            t_r: self.t_i,
            t_i: self.t_r,
            q_r: self.q_i,
            q_i: self.q_r,
            e_ri: self.e_ri,
            e_rrii: self.e_rrii,
            e_rii: self.e_rri,
            e_rri: self.e_rii,
        }
    }

    /// `P = E|x|^2`.
    pub fn power(&self) -> f64 {
        self.p_r + self.p_i
    }

    /// `Q = E|x|^4`.
    pub fn fourth(&self) -> f64 {
        self.q_r + self.q_i + 2.0 * self.e_rrii
    }

    pub fn is_zero_mean(&self) -> bool {
        self.mu_r == 0.0 && self.mu_i == 0.0
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            self.mu_r, self.mu_i, self.p_r, self.p_i, self.t_r, self.t_i, self.q_r, self.q_i,
            self.e_ri, self.e_rrii, self.e_rii, self.e_rri,
        ];
        if fields.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidMoments("non-finite moment".into()));
        }
        let slack = |a: f64, b: f64| 1e-12 * (1.0 + a.abs().max(b.abs()));
        let check = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidMoments(what.to_string()))
            }
        };
        let mr2 = self.mu_r * self.mu_r;
        let mi2 = self.mu_i * self.mu_i;
        check(self.p_r >= mr2 - slack(self.p_r, mr2), "E[x_r^2] < E[x_r]^2")?;
        check(self.p_i >= mi2 - slack(self.p_i, mi2), "E[x_i^2] < E[x_i]^2")?;
        let pr2 = self.p_r * self.p_r;
        let pi2 = self.p_i * self.p_i;
        check(self.q_r >= pr2 - slack(self.q_r, pr2), "E[x_r^4] < E[x_r^2]^2")?;
        check(self.q_i >= pi2 - slack(self.q_i, pi2), "E[x_i^4] < E[x_i^2]^2")?;
        let cs = self.p_r * self.p_i;
        check(
            self.e_ri * self.e_ri <= cs + slack(cs, self.e_ri * self.e_ri),
            "E[x_r x_i]^2 > E[x_r^2] E[x_i^2]",
        )?;
        let cs4 = self.q_r * self.q_i;
        check(
            self.e_rrii >= 0.0 && self.e_rrii * self.e_rrii <= cs4 + slack(cs4, self.e_rrii * self.e_rrii),
            "E[x_r^2 x_i^2] outside [0, sqrt(E[x_r^4] E[x_i^4])]",
        )?;
        Ok(())
    }

    /// `Q̃` in the general complex form. With zero mean the mean-dependent
    /// group is exactly `0.0`, so the value equals [`Self::q_tilde_zero_mean`]
    /// bit for bit.
    pub fn q_tilde(&self) -> f64 {
        let p = self.power();
        // P' = E[x^2], T' = E[|x|^2 x].
        let pp_re = self.p_r - self.p_i;
        let pp_im = 2.0 * self.e_ri;
        let tp_re = self.t_r + self.e_rii;
        let tp_im = self.t_i + self.e_rri;
        let (mr, mi) = (self.mu_r, self.mu_i);
        let mu_abs2 = mr * mr + mi * mi;
        // conj(mu)^2 = (mr^2 - mi^2) - 2j mr mi
        let cm2_re = mr * mr - mi * mi;
        let cm2_im = -2.0 * mr * mi;
        let re_pp_cm2 = pp_re * cm2_re - pp_im * cm2_im;
        let re_tp_cm = tp_re * mr + tp_im * mi;
        let mean_terms = -4.0 * p * mu_abs2 - 2.0 * re_pp_cm2 + 2.0 * re_tp_cm;
        (self.fourth() + 4.0 * p * p + 2.0 * (pp_re * pp_re + pp_im * pp_im) + mean_terms) / 3.0
    }

    /// `Q̃` for zero-mean inputs, where every `μ` and `T` term vanishes.
    pub fn q_tilde_zero_mean(&self) -> f64 {
        let p = self.power();
        let pp_re = self.p_r - self.p_i;
        let pp_im = 2.0 * self.e_ri;
        (self.fourth() + 4.0 * p * p + 2.0 * (pp_re * pp_re + pp_im * pp_im) + 0.0) / 3.0
    }
}

/// `α(Q + Q̃) + βP + γ`.
pub fn delivered_power(m: &MomentSet, rect: &RectennaModel) -> Result<f64> {
    m.validate()?;
    rect.validate()?;
    Ok(rect.alpha() * (m.fourth() + m.q_tilde()) + rect.beta() * m.power() + rect.gamma())
}

/// [`delivered_power`] restricted to zero-mean inputs.
pub fn delivered_power_zero_mean(m: &MomentSet, rect: &RectennaModel) -> Result<f64> {
    if !m.is_zero_mean() {
        return Err(Error::InvalidMoments(format!(
            "zero-mean path called with mean ({}, {})",
            m.mu_r, m.mu_i
        )));
    }
    m.validate()?;
    rect.validate()?;
    Ok(rect.alpha() * (m.fourth() + m.q_tilde_zero_mean()) + rect.beta() * m.power() + rect.gamma())
}

/// The displayed closed form that assumes independent real and imaginary
/// parts:
/// `Q̃ = (Q_r + Q_i + 2(μ_r T_r + μ_i T_i) + 6P_rP_i + 6P_r(P_r - μ_r²) + 6P_i(P_i - μ_i²))/3`
/// and `Q = Q_r + Q_i + 2P_rP_i`. Cross moments are ignored.
pub fn delivered_power_independent_display(m: &MomentSet, rect: &RectennaModel) -> Result<f64> {
    m.validate()?;
    rect.validate()?;
    let q = m.q_r + m.q_i + 2.0 * m.p_r * m.p_i;
    let q_tilde = (m.q_r
        + m.q_i
        + 2.0 * (m.mu_r * m.t_r + m.mu_i * m.t_i)
        + 6.0 * m.p_r * m.p_i
        + 6.0 * m.p_r * (m.p_r - m.mu_r * m.mu_r)
        + 6.0 * m.p_i * (m.p_i - m.mu_i * m.mu_i))
        / 3.0;
    Ok(rect.alpha() * (q + q_tilde) + rect.beta() * m.power() + rect.gamma())
}

/// Independent Gaussian real and imaginary parts.
pub fn gaussian_moments(mu_r: f64, mu_i: f64, var_r: f64, var_i: f64) -> Result<MomentSet> {
    if !(var_r >= 0.0 && var_i >= 0.0) || !var_r.is_finite() || !var_i.is_finite() {
        return Err(Error::InvalidMoments(format!(
            "variances must be finite and nonnegative (got {var_r}, {var_i})"
        )));
    }
    if !(mu_r.is_finite() && mu_i.is_finite()) {
        return Err(Error::InvalidMoments("non-finite mean".into()));
    }
    let part = |mu: f64, v: f64| {
        let mu2 = mu * mu;
        (
            mu2 + v,
            mu * mu2 + 3.0 * mu * v,
            mu2 * mu2 + 6.0 * mu2 * v + 3.0 * v * v,
        )
    };
    let (p_r, t_r, q_r) = part(mu_r, var_r);
    let (p_i, t_i, q_i) = part(mu_i, var_i);
    Ok(MomentSet::independent(mu_r, mu_i, p_r, p_i, t_r, t_i, q_r, q_i))
}

/// Moments of `r e^{jθ}` with `r ~ d` and `θ` uniform and independent.
pub fn discrete_moments(d: &AmplitudeDistribution) -> MomentSet {
    let m2 = d.even_moment(1);
    let m4 = d.even_moment(2);
    MomentSet {
        mu_r: 0.0,
        mu_i: 0.0,
        p_r: 0.5 * m2,
        p_i: 0.5 * m2,
        t_r: 0.0,
        t_i: 0.0,
        q_r: 0.375 * m4,
        q_i: 0.375 * m4,
        e_ri: 0.0,
        e_rrii: 0.125 * m4,
        e_rii: 0.0,
        e_rri: 0.0,
    }
}

/// `E[g(r)] = Σ_j p_j g(r_j)`.
pub fn expected_g(d: &AmplitudeDistribution, g: &PowerPolynomial) -> f64 {
    d.points().iter().map(|&(r, p)| p * g.eval(r)).sum()
}

/// Amplitude law of a circularly symmetric Gaussian input.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AmplitudeConvention {
    /// CDF `1 - e^{-r²/P_a}`, so `E[r²] = P_a` matches the power constraint.
    #[default]
    PowerConsistent,
    /// CDF `1 - e^{-r²/(2P_a)}`, so `E[r²] = 2P_a`.
    DoubledPower,
}

impl AmplitudeConvention {
    /// `E[r²]` of the Rayleigh amplitude for average power `p_a`.
    pub fn rayleigh_scale(&self, p_a: f64) -> f64 {
        match self {
            Self::PowerConsistent => p_a,
            Self::DoubledPower => 2.0 * p_a,
        }
    }
}

/// `E[r^{2i}] = i! s^i` for a Rayleigh amplitude with `E[r²] = s`.
pub fn rayleigh_even_moment(i: usize, s: f64) -> f64 {
    let mut v = 1.0;
    for k in 1..=i {
        v *= k as f64 * s;
    }
    v
}

/// `E[g(r)]` for the Rayleigh amplitude of a Gaussian input with average
/// power `p_a`.
pub fn rayleigh_delivered_power(
    p_a: f64,
    g: &PowerPolynomial,
    convention: AmplitudeConvention,
) -> Result<f64> {
    if !(p_a.is_finite() && p_a >= 0.0) {
        return Err(Error::domain("rayleigh_delivered_power", format!("P_a = {p_a}")));
    }
    let s = convention.rayleigh_scale(p_a);
    Ok(g.expectation_from_moments(|i| rayleigh_even_moment(i, s)))
}

/// Delivered power of the flash law `{0 w.p. 1 - 1/l², √P_a·l w.p. 1/l²}`:
/// `α_0 + α_1 P_a + Σ_{i>=2} α_i P_a^i l^{2i-2}`.
pub fn flash_power(l: u32, p_a: f64, g: &PowerPolynomial) -> Result<f64> {
    if l < 2 {
        return Err(Error::domain("flash_power", format!("l = {l}, need l >= 2")));
    }
    if !(p_a.is_finite() && p_a >= 0.0) {
        return Err(Error::domain("flash_power", format!("P_a = {p_a}")));
    }
    let l2 = f64::from(l) * f64::from(l);
    Ok(g.expectation_from_moments(|i| {
        if i == 0 {
            1.0
        } else {
            p_a.powi(i as i32) * l2.powi(i as i32 - 1)
        }
    }))
}

fn double_factorial_odd(k: usize) -> f64 {
    // (2k - 1)!!, with (-1)!! = 1.
    (1..=k).map(|j| (2 * j - 1) as f64).product()
}

/// `E|x|^{2i}` for zero-mean independent Gaussian parts with variances
/// `var_r`, `var_i`.
pub fn gaussian_abs_moment(i: usize, var_r: f64, var_i: f64) -> f64 {
    let mut binom = 1.0;
    let mut sum = 0.0;
    for k in 0..=i {
        if k > 0 {
            binom = binom * (i - k + 1) as f64 / k as f64;
        }
        sum += binom
            * double_factorial_odd(k)
            * var_r.powi(k as i32)
            * double_factorial_odd(i - k)
            * var_i.powi((i - k) as i32);
    }
    sum
}

/// `E[g(|x|)]` for zero-mean independent Gaussian parts.
pub fn gaussian_expected_g(var_r: f64, var_i: f64, g: &PowerPolynomial) -> f64 {
    g.expectation_from_moments(|i| gaussian_abs_moment(i, var_r, var_i))
}

/// The family extremes as displayed alongside the Gaussian allocation
/// result: `(3αP_a² + 2βP_a + γ, 2αP_a² + 2βP_a + γ)`. Reported for
/// comparison only; the Gaussian curve uses [`delivered_power`].
pub fn displayed_gaussian_extremes(p_a: f64, rect: &RectennaModel) -> (f64, f64) {
    let (a, b, c) = (rect.alpha(), rect.beta(), rect.gamma());
    (
        3.0 * a * p_a * p_a + 2.0 * b * p_a + c,
        2.0 * a * p_a * p_a + 2.0 * b * p_a + c,
    )
}

/// The infinite sinc series built from `s_l = sinc(l + 1/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SincSum {
    /// `Σ s_l²`
    S0,
    /// `Σ_{l≠k} s_l s_k`
    S1,
    /// `Σ` over distinct `(l, k, d, m)` of `s_l s_k s_d s_m`
    S2,
    /// `Σ_{l≠k} s_l² s_k²`
    S3,
    /// `Σ` over distinct `(l, k, d)` of `s_l² s_k s_d`
    S4,
    /// `Σ s_l⁴`
    S5,
    /// `Σ_{l≠k} s_l³ s_k`
    S6,
    /// `Σ s_l`
    T0,
    /// `Σ s_l³`
    T1,
}

impl SincSum {
    pub const ALL: [SincSum; 9] = [
        Self::S0,
        Self::S1,
        Self::S2,
        Self::S3,
        Self::S4,
        Self::S5,
        Self::S6,
        Self::T0,
        Self::T1,
    ];

    /// Value of the infinite series.
    pub fn limit(&self) -> f64 {
        match self {
            Self::S0 | Self::T0 => 1.0,
            Self::S1 | Self::S2 => 0.0,
            Self::S3 => 2.0 / 3.0,
            Self::S4 => -1.0 / 3.0,
            Self::S5 => 1.0 / 3.0,
            Self::S6 => 1.0 / 6.0,
            Self::T1 => 0.5,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::S0 => "S0",
            Self::S1 => "S1",
            Self::S2 => "S2",
            Self::S3 => "S3",
            Self::S4 => "S4",
            Self::S5 => "S5",
            Self::S6 => "S6",
            Self::T0 => "T0",
            Self::T1 => "T1",
        }
    }

    /// The sum expressed through the power sums `p_k = Σ s_l^k`.
    fn combine(&self, p: &PowerSums) -> f64 {
        let PowerSums { p1, p2, p3, p4 } = *p;
        match self {
            Self::S0 => p2,
            Self::S5 => p4,
            Self::T0 => p1,
            Self::T1 => p3,
            Self::S1 => p1 * p1 - p2,
            Self::S3 => p2 * p2 - p4,
            Self::S6 => p1 * p3 - p4,
            Self::S4 => p1 * p1 * p2 - 2.0 * p1 * p3 - p2 * p2 + 2.0 * p4,
            Self::S2 => {
                p1.powi(4) - 6.0 * p1 * p1 * p2 + 3.0 * p2 * p2 + 8.0 * p1 * p3 - 6.0 * p4
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct PowerSums {
    p1: f64,
    p2: f64,
    p3: f64,
    p4: f64,
}

/// `sinc(l + 1/2) = (-1)^l / (π (l + 1/2))`.
fn sinc_half(l: i64) -> f64 {
    let sign = if l.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    sign / (std::f64::consts::PI * (l as f64 + 0.5))
}

/// Power sums over `|l| <= n`. The terms are symmetric about `l = -1/2`
/// (`s_{-l-1} = s_l`), so they are folded and summed smallest first.
fn power_sums(n: u64) -> PowerSums {
    let n = n as i64;
    let mut acc = [0.0f64; 4];
    let mut add = |s: f64, w: f64| {
        let s2 = s * s;
        acc[0] += w * s;
        acc[1] += w * s2;
        acc[2] += w * s2 * s;
        acc[3] += w * s2 * s2;
    };
    add(sinc_half(n), 1.0);
    for l in (0..n).rev() {
        add(sinc_half(l), 2.0);
    }
    PowerSums {
        p1: acc[0],
        p2: acc[1],
        p3: acc[2],
        p4: acc[3],
    }
}

/// Hurwitz zeta `ζ(s, x) = Σ_{k>=0} (k + x)^{-s}` for large `x`
/// (Euler-Maclaurin with four Bernoulli terms).
fn hurwitz_zeta_large_x(s: f64, x: f64) -> f64 {
    const B: [f64; 4] = [1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0];
    let mut sum = x.powf(1.0 - s) / (s - 1.0) + 0.5 * x.powf(-s);
    // (s)_{2k-1} / (2k)!
    let mut rising = s;
    let mut fact = 2.0;
    for (k, b) in B.iter().enumerate() {
        let k = k + 1;
        sum += b / fact * rising * x.powf(-s - 2.0 * k as f64 + 1.0);
        let m = 2.0 * k as f64;
        rising *= (s + m - 1.0) * (s + m);
        fact *= (m + 1.0) * (m + 2.0);
    }
    sum
}

/// `2 Σ_{k>=0} (-1)^k f(x + k) - f(x)` for `f(y) = y^{-s}`, by Boole
/// summation: `-f'/2 + f'''/24 - f^(5)/240 + 17 f^(7)/40320`.
fn alternating_tail_large_x(s: f64, x: f64) -> f64 {
    // f^(n)(x) = (-1)^n (s)_n x^{-s-n}
    let deriv = |n: i32| {
        let rising: f64 = (0..n).map(|j| s + f64::from(j)).product();
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        sign * rising * x.powf(-s - f64::from(n))
    };
    -0.5 * deriv(1) + deriv(3) / 24.0 - deriv(5) / 240.0 + 17.0 * deriv(7) / 40320.0
}

/// Partial sum of a sinc series over the symmetric window `|l| <= n`.
pub fn sinc_series_partial(which: SincSum, n: u64) -> Result<f64> {
    if n < 1 {
        return Err(Error::domain("sinc_series_partial", "need N >= 1"));
    }
    Ok(which.combine(&power_sums(n)))
}

/// The window `|l| <= n` plus asymptotic expansions of the missing tails
/// of the power sums (Euler-Maclaurin for the even powers, Boole summation
/// for the alternating odd powers). Requires `n >= 100`.
pub fn sinc_series_tail_corrected(which: SincSum, n: u64) -> Result<f64> {
    if n < 100 {
        return Err(Error::domain("sinc_series_tail_corrected", "need N >= 100"));
    }
    let mut p = power_sums(n);
    let pi = std::f64::consts::PI;
    // Missing part: 2 Σ_{l>=n} s_l^k - s_n^k.
    let x = n as f64 + 0.5;
    let sn = sinc_half(n as i64).abs();
    p.p2 += 2.0 * hurwitz_zeta_large_x(2.0, x) / (pi * pi) - sn * sn;
    p.p4 += 2.0 * hurwitz_zeta_large_x(4.0, x) / pi.powi(4) - sn.powi(4);
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    p.p1 += sign * alternating_tail_large_x(1.0, x) / pi;
    p.p3 += sign * alternating_tail_large_x(3.0, x) / pi.powi(3);
    Ok(which.combine(&p))
}

/// All nine series evaluated one way, and the identities linking them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SincSeriesConstants {
    pub s0: f64,
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
    pub s4: f64,
    pub s5: f64,
    pub s6: f64,
    pub t0: f64,
    pub t1: f64,
}

impl SincSeriesConstants {
    pub fn exact() -> Self {
        Self::from_fn(|w| w.limit())
    }

    pub fn partial(n: u64) -> Result<Self> {
        if n < 1 {
            return Err(Error::domain("SincSeriesConstants::partial", "need N >= 1"));
        }
        let p = power_sums(n);
        Ok(Self::from_fn(|w| w.combine(&p)))
    }

    pub fn tail_corrected(n: u64) -> Result<Self> {
        let mut out = Self::exact();
        for w in SincSum::ALL {
            *out.get_mut(w) = sinc_series_tail_corrected(w, n)?;
        }
        Ok(out)
    }

    fn from_fn(f: impl Fn(SincSum) -> f64) -> Self {
        Self {
            s0: f(SincSum::S0),
            s1: f(SincSum::S1),
            s2: f(SincSum::S2),
            s3: f(SincSum::S3),
            s4: f(SincSum::S4),
            s5: f(SincSum::S5),
            s6: f(SincSum::S6),
            t0: f(SincSum::T0),
            t1: f(SincSum::T1),
        }
    }

    pub fn get(&self, w: SincSum) -> f64 {
        match w {
            SincSum::S0 => self.s0,
            SincSum::S1 => self.s1,
            SincSum::S2 => self.s2,
            SincSum::S3 => self.s3,
            SincSum::S4 => self.s4,
            SincSum::S5 => self.s5,
            SincSum::S6 => self.s6,
            SincSum::T0 => self.t0,
            SincSum::T1 => self.t1,
        }
    }

    pub fn get_mut(&mut self, w: SincSum) -> &mut f64 {
        match w {
            SincSum::S0 => &mut self.s0,
            SincSum::S1 => &mut self.s1,
            SincSum::S2 => &mut self.s2,
            SincSum::S3 => &mut self.s3,
            SincSum::S4 => &mut self.s4,
            SincSum::S5 => &mut self.s5,
            SincSum::S6 => &mut self.s6,
            SincSum::T0 => &mut self.t0,
            SincSum::T1 => &mut self.t1,
        }
    }

    /// Residuals of `S1 = T0² - S0`, `S3 = S0² - S5`, `S6 = T1 - S5` and
    /// `S4 = 2(S5 - T1)` (the last two use `T0 = S0 = 1`).
    pub fn identity_residuals(&self) -> [(&'static str, f64); 4] {
        [
            ("S1 = T0^2 - S0", self.s1 - (self.t0 * self.t0 - self.s0)),
            ("S3 = S0^2 - S5", self.s3 - (self.s0 * self.s0 - self.s5)),
            ("S6 = T1 - S5", self.s6 - (self.t1 - self.s5)),
            ("S4 = 2(S5 - T1)", self.s4 - 2.0 * (self.s5 - self.t1)),
        ]
    }

    /// `S1`, `S3`, `S4`, `S6` rebuilt from `S0`, `S5`, `T0`, `T1` through
    /// the identities.
    pub fn via_identities(&self) -> Self {
        Self {
            s1: self.t0 * self.t0 - self.s0,
            s3: self.s0 * self.s0 - self.s5,
            s6: self.t1 - self.s5,
            s4: 2.0 * (self.s5 - self.t1),
            ..*self
        }
    }
}
