//! Run configuration: a TOML file, then command-line overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use swipt_core::distributions::peak_list_serde;
use swipt_core::rpregion::{PdGrid, SweepConfig};
use swipt_core::{
    AmplitudeConvention, ChannelSpec, PowerPolynomial, PowerSpec, QuadratureSpec, RectennaModel,
    SolverKnobs,
};

use crate::error::{CliError, CliResult};

/// Environment variable read for the default worker count.
pub const THREADS_ENV: &str = "SWIPT_THREADS";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    #[default]
    Nats,
    Bits,
}

impl Units {
    pub fn convert(self, nats: f64) -> f64 {
        match self {
            Units::Nats => nats,
            Units::Bits => nats / std::f64::consts::LN_2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Units::Nats => "nats",
            Units::Bits => "bits",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed; overrides `knobs.seed`.
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    pub units: Units,
    pub output: PathBuf,
    pub p_a: f64,
    /// Delivered-power floor for single solves.
    pub p_d: f64,
    #[serde(with = "peak_list_serde")]
    pub r_p: Vec<f64>,
    pub convention: AmplitudeConvention,
    pub power: PowerSpec,
    pub grid: PdGrid,
    pub knobs: SolverKnobs,
    pub quadrature: QuadratureSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: SolverKnobs::default().seed,
            threads: None,
            units: Units::Nats,
            output: PathBuf::from("out"),
            p_a: 5.0,
            p_d: 0.0,
            r_p: vec![4.0, 5.0, 6.0, f64::INFINITY],
            convention: AmplitudeConvention::default(),
            power: PowerSpec::Raw(
                PowerPolynomial::new(vec![0.01, 0.01, 0.01]).expect("valid default polynomial"),
            ),
            grid: PdGrid::default(),
            knobs: SolverKnobs::default(),
            quadrature: QuadratureSpec::default(),
        }
    }
}

/// Flag values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub bits: bool,
    pub output: Option<PathBuf>,
    pub p_a: Option<f64>,
    pub p_d: Option<f64>,
    pub r_p: Option<Vec<f64>>,
    pub raw: Option<Vec<f64>>,
    pub rectenna: Option<Vec<f64>>,
    pub convention: Option<AmplitudeConvention>,
}

/// Parses an amplitude bound; `inf` means no peak constraint.
pub fn parse_peak(s: &str) -> Result<f64, String> {
    let t = s.trim();
    if matches!(t.to_ascii_lowercase().as_str(), "inf" | "infinity" | "+inf") {
        return Ok(f64::INFINITY);
    }
    let v: f64 = t.parse().map_err(|_| format!("not a number or 'inf': {t}"))?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(format!("peak amplitude must be positive, got {v}"))
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> CliResult<String> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn apply(&mut self, o: &Overrides) -> CliResult<()> {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if o.threads.is_some() {
            self.threads = o.threads;
        }
        if o.bits {
            self.units = Units::Bits;
        }
        if let Some(p) = &o.output {
            self.output = p.clone();
        }
        if let Some(v) = o.p_a {
            self.p_a = v;
        }
        if let Some(v) = o.p_d {
            self.p_d = v;
        }
        if let Some(v) = &o.r_p {
            self.r_p = v.clone();
        }
        if let Some(c) = o.convention {
            self.convention = c;
        }
        match (&o.raw, &o.rectenna) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config("give either --raw or --rectenna, not both".into()))
            }
            (Some(alpha), None) => self.power = PowerSpec::Raw(PowerPolynomial::new(alpha.clone())?),
            (None, Some(k)) => {
                let [k2, k4] = k[..] else {
                    return Err(CliError::Config(format!(
                        "--rectenna takes two values k2,k4; got {}",
                        k.len()
                    )));
                };
                self.power = PowerSpec::Rectenna(RectennaModel::new(k2, k4)?);
            }
            (None, None) => {}
        }
        self.knobs.seed = self.seed;
        Ok(())
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.r_p.is_empty() {
            return Err(CliError::Config("r_p needs at least one value".into()));
        }
        if self.threads == Some(0) {
            return Err(CliError::Config("threads must be at least 1".into()));
        }
        self.sweep().validate()?;
        self.channel(self.p_d, self.r_p[0]).validate()?;
        Ok(())
    }

    /// Worker count: flag or file, then the environment, then all cores.
    pub fn effective_threads(&self) -> CliResult<Option<usize>> {
        if self.threads.is_some() {
            return Ok(self.threads);
        }
        match std::env::var(THREADS_ENV) {
            Ok(v) if !v.trim().is_empty() => match v.trim().parse::<usize>() {
                Ok(n) if n > 0 => Ok(Some(n)),
                _ => Err(CliError::Config(format!("{THREADS_ENV}={v} is not a positive integer"))),
            },
            _ => Ok(None),
        }
    }

    pub fn sweep(&self) -> SweepConfig {
        let mut s = SweepConfig::new(self.p_a, self.power.clone(), self.r_p.clone());
        s.grid = self.grid.clone();
        s.knobs = self.knobs.clone();
        s.knobs.seed = self.seed;
        s.quadrature = self.quadrature;
        s.convention = self.convention;
        s.output = self.output.clone();
        s
    }

    pub fn channel(&self, p_d: f64, r_p: f64) -> ChannelSpec {
        let mut spec = ChannelSpec::new(self.p_a, p_d, r_p, self.power.polynomial());
        spec.knobs = self.knobs.clone();
        spec.knobs.seed = self.seed;
        spec.quadrature = self.quadrature;
        spec
    }
}
