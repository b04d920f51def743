use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rumorlab::mc::ExperimentConfig;
use rumorlab::{InitialConfiguration, SimulationMode};

#[derive(Debug, Parser)]
#[command(
    name = "rumorlab",
    version,
    about = "Simulation and limit theory of the k-spreading Maki-Thompson rumor model"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Write output to this file instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Exact,
    Embedded,
}

impl From<Mode> for SimulationMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Exact => SimulationMode::Exact,
            Mode::Embedded => SimulationMode::Embedded,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate the chain and report final states (and optionally a trajectory).
    Simulate(SimulateArgs),
    /// Limiting final fractions and zero structure of the final-size function.
    Asymptotics(InitArgs),
    /// Fluid-limit trajectory.
    Ode(OdeArgs),
    /// Covariance of the Gaussian fluctuations of the final state.
    Clt(InitArgs),
    /// Monte Carlo check of the limiting final fractions.
    Lln(ExperimentArgs),
    /// Monte Carlo check of the fluctuation covariance.
    Cltcheck(ExperimentArgs),
    /// Limiting final fractions over a range of k.
    Sweep(SweepArgs),
    /// Sign changes and located zeros of the final-size function.
    Zeros(ZerosArgs),
    /// Data behind the standard figures (2: x_inf against k, 3: final-size
    /// graphs, 4: bivariate normal density).
    Figure(FigureArgs),
}

/// Initial configuration as limiting fractions. Without `--x0` the standard
/// configuration (a single initial spreader) is used.
#[derive(Debug, Clone, Args)]
pub struct InitArgs {
    /// Number of hearings needed to become a spreader.
    #[arg(long)]
    pub k: usize,

    /// Standard configuration: x0 = 1, everything else 0.
    #[arg(long, conflicts_with_all = ["x0", "y0", "yi0"])]
    pub standard: bool,

    /// Initial ignorant fraction.
    #[arg(long)]
    pub x0: Option<f64>,

    /// Initial spreader fraction.
    #[arg(long, requires = "x0")]
    pub y0: Option<f64>,

    /// Initial aware fractions y_{1,0},..,y_{k-1,0}, comma separated.
    #[arg(long, value_delimiter = ',', requires = "x0")]
    pub yi0: Option<Vec<f64>>,
}

impl InitArgs {
    pub fn configuration(&self) -> Result<InitialConfiguration> {
        configuration(self.k, self.standard, self.x0, self.y0, self.yi0.clone())
    }
}

fn configuration(
    k: usize,
    standard: bool,
    x0: Option<f64>,
    y0: Option<f64>,
    yi0: Option<Vec<f64>>,
) -> Result<InitialConfiguration> {
    if k == 0 {
        bail!("--k must be at least 1");
    }
    let Some(x0) = x0.filter(|_| !standard) else {
        return Ok(InitialConfiguration::standard(k));
    };
    let aware = yi0.unwrap_or_else(|| vec![0.0; k - 1]);
    if aware.len() != k - 1 {
        bail!("--yi0 needs {} entries for k = {k}, got {}", k - 1, aware.len());
    }
    Ok(InitialConfiguration::new(x0, aware, y0.unwrap_or(0.0))?)
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub init: InitArgs,

    /// Population size.
    #[arg(long)]
    pub n: u64,

    /// Explicit initial counts X,Y_1,..,Y_{k-1},Y,Z instead of fractions.
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["standard", "x0"])]
    pub counts: Option<Vec<u64>>,

    #[arg(long, default_value_t = 1)]
    pub replicas: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, value_enum, default_value_t = Mode::Exact)]
    pub mode: Mode,

    /// Record the full trajectory of replica 0 (exact mode only).
    #[arg(long)]
    pub record: bool,
}

#[derive(Debug, Args)]
pub struct OdeArgs {
    #[command(flatten)]
    pub init: InitArgs,

    /// Final time; defaults to the absorption time of the fluid limit.
    #[arg(long)]
    pub t_end: Option<f64>,

    #[arg(long, default_value_t = 0.01)]
    pub step: f64,

    /// Integrate numerically (RK4) instead of evaluating the closed form.
    #[arg(long)]
    pub numeric: bool,
}

/// Replicated experiment, from a key=value file or from flags.
#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Experiment file with `key = value` lines.
    #[arg(long, conflicts_with_all = ["k", "n", "standard", "x0", "y0", "yi0"])]
    pub config: Option<PathBuf>,

    #[arg(long)]
    pub k: Option<usize>,

    #[arg(long)]
    pub n: Option<u64>,

    #[arg(long, conflicts_with_all = ["x0", "y0", "yi0"])]
    pub standard: bool,

    #[arg(long)]
    pub x0: Option<f64>,

    #[arg(long, requires = "x0")]
    pub y0: Option<f64>,

    #[arg(long, value_delimiter = ',', requires = "x0")]
    pub yi0: Option<Vec<f64>>,

    /// Overrides the file value when both are given.
    #[arg(long)]
    pub replicas: Option<usize>,

    #[arg(long)]
    pub seed: Option<u64>,

    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
}

impl ExperimentArgs {
    pub fn experiment(&self, default_replicas: usize) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                ExperimentConfig::parse(&text).with_context(|| format!("in {}", path.display()))?
            }
            None => {
                let Some(k) = self.k else { bail!("--k is required without --config") };
                let Some(n) = self.n else { bail!("--n is required without --config") };
                let init = configuration(k, self.standard, self.x0, self.y0, self.yi0.clone())?;
                ExperimentConfig::from_fractions(&init, n, default_replicas, 0, SimulationMode::Embedded)?
            }
        };
        if let Some(r) = self.replicas {
            cfg.n_replicas = r;
        }
        if let Some(s) = self.seed {
            cfg.base_seed = s;
        }
        if let Some(m) = self.mode {
            cfg.mode = m.into();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, default_value_t = 1)]
    pub k_min: usize,

    #[arg(long, default_value_t = 12)]
    pub k_max: usize,

    /// Standard configuration for every k (the default).
    #[arg(long, conflicts_with_all = ["x0", "y0"])]
    pub standard: bool,

    /// Sweep configurations with this ignorant fraction and no aware
    /// individuals.
    #[arg(long)]
    pub x0: Option<f64>,

    #[arg(long, requires = "x0")]
    pub y0: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ZerosArgs {
    #[command(flatten)]
    pub init: InitArgs,

    /// Grid points of the sign scan.
    #[arg(long, default_value_t = rumorlab::asymptotics::DEFAULT_ZERO_SCAN_POINTS)]
    pub points: usize,
}

#[derive(Debug, Args)]
pub struct FigureArgs {
    /// Figure number: 2, 3 or 4.
    #[arg(long, value_parser = clap::value_parser!(u8).range(2..=4))]
    pub id: u8,

    /// Largest k for figure 2.
    #[arg(long, default_value_t = 12)]
    pub k_max: usize,

    /// Grid points for figures 3 and 4 (per axis for 4; odd counts put the
    /// origin on the grid).
    #[arg(long, default_value_t = 201)]
    pub points: usize,
}
