use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "dissipation", version, about = "Dissipation-time statistics of quantum systems with a decay channel")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// JSON file with parameters; flags given on the command line win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output file (stdout if omitted).
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Winding number of the resolvent curve.
    Winding(Params),
    /// Poles, residual coefficients, charges and optionally the potential on a grid.
    Poles(Params),
    /// Distinct levels and their overlaps with the decay state.
    Spectrum(Params),
    /// Decay density F(t) on a time grid.
    DecayDist(Params),
    /// Detection probability, moments and variance.
    Moments(Params),
    /// Conditional mean over an observation-time sweep.
    ConditionalMean(Params),
    /// Two-level atom: mean and variance over a Rabi-frequency sweep.
    TwoLevel(Params),
    /// Disordered ring: winding, mean and slowest rate over a disorder sweep.
    Ring(Params),
    /// Line with several decay channels: quadrature means over a rate sweep.
    LineMultichannel(Params),
    /// Ring prepared in a two-site superposition: mean over admixture and rate.
    PrepSweep(Params),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Winding(_) => "winding",
            Command::Poles(_) => "poles",
            Command::Spectrum(_) => "spectrum",
            Command::DecayDist(_) => "decay-dist",
            Command::Moments(_) => "moments",
            Command::ConditionalMean(_) => "conditional-mean",
            Command::TwoLevel(_) => "two-level",
            Command::Ring(_) => "ring",
            Command::LineMultichannel(_) => "line-multichannel",
            Command::PrepSweep(_) => "prep-sweep",
        }
    }

    pub fn params(&self) -> &Params {
        match self {
            Command::Winding(p)
            | Command::Poles(p)
            | Command::Spectrum(p)
            | Command::DecayDist(p)
            | Command::Moments(p)
            | Command::ConditionalMean(p)
            | Command::TwoLevel(p)
            | Command::Ring(p)
            | Command::LineMultichannel(p)
            | Command::PrepSweep(p) => p,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    SingleLevel,
    TwoLevel,
    Ring,
    Line,
    File,
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[command(allow_negative_numbers = true)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelKind>,

    /// Number of lattice sites.
    #[arg(long = "L")]
    #[serde(rename = "L", skip_serializing_if = "Option::is_none")]
    pub l: Option<usize>,

    /// Hopping energy.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hop: Option<f64>,

    /// On-site disorder strength.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,

    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,

    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,

    /// Detuning of the two-level atom.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,

    /// Rabi frequency of the two-level atom.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,

    /// Level energy of the single-level model.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energy: Option<f64>,

    /// JSON system file for `--model file`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub system: Option<PathBuf>,

    /// Decay-channel sites (1-based, comma separated).
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sites: Option<Vec<usize>>,

    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_sweep: Option<String>,

    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_sweep: Option<String>,

    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_sweep: Option<String>,

    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_sweep: Option<String>,

    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_sweep: Option<String>,

    /// Admixture sweep for `prep-sweep`.
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_sweep: Option<String>,

    /// Integration horizon cap for propagation-based means.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,

    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init_points: Option<usize>,

    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_order: Option<usize>,

    /// Potential grid resolution for `poles`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
}

macro_rules! prefer {
    ($a:ident, $b:ident; $($f:ident),*) => {
        Params { $($f: $a.$f.or($b.$f)),* }
    };
}

impl Params {
    /// Fields set here win over those from `fallback`.
    pub fn or(self, fallback: Params) -> Params {
        let a = self;
        let b = fallback;
        prefer!(a, b; model, l, hop, eps, gamma, seed, delta, omega, energy, system, sites,
            omega_sweep, gamma_sweep, eps_sweep, theta_sweep, t_sweep, delta_sweep,
            t_max, init_points, max_order, grid)
    }
}
