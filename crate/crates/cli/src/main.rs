//! `swipt`: capacity-achieving amplitude distributions and rate-power
//! region data from the command line.

mod commands;
mod config;
mod error;
mod selftest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use swipt_core::AmplitudeConvention;

use commands::{PowerInput, EXIT_ERROR};
use config::{parse_peak, Overrides, RunConfig, THREADS_ENV};
use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "swipt", version, about)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// TOML run configuration; flags override its values.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Write the effective configuration to this file before running.
    #[arg(long, global = true, value_name = "FILE")]
    dump_config: Option<PathBuf>,
    /// Master seed for every randomized stage.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: $SWIPT_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Print rates in bits instead of nats.
    #[arg(long, global = true)]
    bits: bool,
    /// Output directory for written files.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// Average-power budget.
    #[arg(long = "p-a", global = true)]
    p_a: Option<f64>,
    /// Peak amplitude(s), comma separated; `inf` for none.
    #[arg(long = "r-p", global = true, value_delimiter = ',', value_parser = parse_peak)]
    r_p: Option<Vec<f64>>,
    /// Raw power polynomial coefficients a0,a1,... of g(r) = sum a_i r^(2i).
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    raw: Option<Vec<f64>>,
    /// Rectenna diode coefficients k2,k4.
    #[arg(long, global = true, value_delimiter = ',')]
    rectenna: Option<Vec<f64>>,
    /// Amplitude convention of the Gaussian reference law.
    #[arg(long, global = true, value_enum)]
    convention: Option<Convention>,
    /// Increase log verbosity (-v debug, -vv trace).
    #[arg(long, short, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum Convention {
    PowerConsistent,
    DoubledPower,
}

impl From<Convention> for AmplitudeConvention {
    fn from(c: Convention) -> Self {
        match c {
            Convention::PowerConsistent => AmplitudeConvention::PowerConsistent,
            Convention::DoubledPower => AmplitudeConvention::DoubledPower,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve for the capacity-achieving distribution at one P_d (first r_p).
    Capacity {
        /// Delivered-power floor.
        #[arg(long = "p-d")]
        p_d: Option<f64>,
        /// Print the full result as JSON.
        #[arg(long)]
        json: bool,
        /// Also write the JSON result to this file.
        #[arg(long, value_name = "FILE")]
        save: Option<PathBuf>,
    },
    /// Sweep P_d for the Gaussian and numerical inputs and write CSV/JSON files.
    RpRegion,
    /// Rate-power curve of the asymmetric Gaussian inputs.
    GaussianRp {
        /// Print CSV instead of a table.
        #[arg(long)]
        csv: bool,
    },
    /// Check the optimality conditions for a distribution JSON file.
    VerifyKkt {
        file: PathBuf,
        #[arg(long = "p-d")]
        p_d: Option<f64>,
        #[arg(long)]
        json: bool,
    },
    /// Time sharing between the Gaussian input and flash signalling.
    TimeshareDemo {
        /// Target delivered power (default: twice the Gaussian power).
        #[arg(long = "p-d")]
        p_d: Option<f64>,
        /// Flash parameters.
        #[arg(long, value_delimiter = ',', default_values_t = [4u32, 8, 16, 32])]
        l: Vec<u32>,
        #[arg(long)]
        json: bool,
    },
    /// Delivered power of a distribution file or of a Gaussian split.
    Power {
        #[arg(long, value_name = "FILE", conflicts_with = "p_i")]
        distribution: Option<PathBuf>,
        /// Power of the imaginary part; the real part gets P_a - P_i.
        #[arg(long = "p-i", required_unless_present = "distribution")]
        p_i: Option<f64>,
    },
    /// Run the fast invariant battery.
    Selftest {
        #[arg(long)]
        json: bool,
        /// Replace a reference series constant, e.g. S5=0.34.
        #[arg(long, hide = true, value_name = "NAME=VALUE")]
        tamper: Vec<String>,
    },
}

fn effective_config(cli: &Cli) -> CliResult<RunConfig> {
    let g = &cli.global;
    let mut cfg = match &g.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let p_d = match &cli.command {
        Command::Capacity { p_d, .. } | Command::VerifyKkt { p_d, .. } => *p_d,
        _ => None,
    };
    cfg.apply(&Overrides {
        seed: g.seed,
        threads: g.threads,
        bits: g.bits,
        output: g.output.clone(),
        p_a: g.p_a,
        p_d,
        r_p: g.r_p.clone(),
        raw: g.raw.clone(),
        rectenna: g.rectenna.clone(),
        convention: g.convention.map(Into::into),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> CliResult<u8> {
    let cfg = effective_config(&cli)?;
    if let Some(path) = &cli.global.dump_config {
        std::fs::write(path, cfg.to_toml()?).map_err(|e| CliError::io(path, e))?;
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.effective_threads()? {
        pool = pool.num_threads(n);
    }
    let pool = pool.build()?;
    log::debug!("{} worker threads ({THREADS_ENV} honoured)", pool.current_num_threads());
    pool.install(|| match &cli.command {
        Command::Capacity { json, save, .. } => commands::capacity(&cfg, *json, save.as_deref()),
        Command::RpRegion => commands::rp_region(&cfg),
        Command::GaussianRp { csv } => commands::gaussian_rp(&cfg, *csv),
        Command::VerifyKkt { file, json, .. } => commands::verify(&cfg, file, *json),
        Command::TimeshareDemo { p_d, l, json } => commands::timeshare(&cfg, *p_d, l, *json),
        Command::Power { distribution, p_i } => {
            let input = match (distribution, p_i) {
                (Some(f), _) => PowerInput::Distribution(f),
                (None, Some(p_i)) => PowerInput::Gaussian { p_i: *p_i },
                (None, None) => unreachable!("clap requires one of the two"),
            };
            commands::power(&cfg, input)
        }
        Command::Selftest { json, tamper } => {
            commands::selftest(&commands::tampered_reference(tamper)?, *json)
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
