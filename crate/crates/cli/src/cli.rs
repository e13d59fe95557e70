use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "resetq", version, about = "Reset control under sensor quantization")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Describing function of a reset element or of a preset controller.
    Sidf(SidfArgs),
    /// One closed-loop time simulation.
    Simulate(SimulateArgs),
    /// Frequency sweeps of the closed loop.
    Sweep {
        #[command(subcommand)]
        kind: SweepKind,
    },
    /// H-beta stability certificate for a preset loop.
    Stability(SystemArgs),
}

#[derive(Debug, Subcommand)]
pub enum SweepKind {
    /// S-sigma for standard reset, time regularization and the unquantized loop.
    Ssigma(SsigmaArgs),
    /// S-sigma for a list of safety factors k.
    K(KSweepArgs),
    /// Cumulative PSD of the measured error.
    Cpsd(CpsdArgs),
}

/// Flags shared by every closed-loop command; each overrides the config file.
#[derive(Debug, Clone, Args)]
pub struct SystemArgs {
    /// JSON config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// `mass-table1` or `stage-table2`.
    #[arg(long)]
    pub preset: Option<String>,
    /// Reset factor of the CgLp lag filter.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Multiplies the controller gain K.
    #[arg(long, allow_negative_numbers = true)]
    pub gain_scale: Option<f64>,
    /// Time regularization: `k=2.5`, `rho=1ms` or `none`.
    #[arg(long)]
    pub tr: Option<String>,
    /// Quantizer: `bits=9 range=5000um`, `q=10nm` or `none`.
    #[arg(long)]
    pub quantizer: Option<String>,
    /// Peak of the uniform sensor noise, e.g. `700nm`.
    #[arg(long)]
    pub noise: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    /// Reference: `sin:63rad`, `sin:10Hz`, `step` or `zero`.
    #[arg(long = "ref")]
    pub reference: Option<String>,
    /// Reference amplitude (default 1mm).
    #[arg(long)]
    pub amplitude: Option<String>,
    /// Simulated time (default max(20 periods, 2s) for a sine, else 2s).
    #[arg(long)]
    pub duration: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    /// Lowest sweep frequency (default 0.5Hz).
    #[arg(long)]
    pub fmin: Option<String>,
    /// Highest sweep frequency (default 300Hz).
    #[arg(long)]
    pub fmax: Option<String>,
    /// Number of log-spaced points (default 40).
    #[arg(long)]
    pub points: Option<usize>,
    /// Reference amplitude (default 1mm).
    #[arg(long)]
    pub amplitude: Option<String>,
}

#[derive(Debug, Args)]
pub struct SsigmaArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Args)]
pub struct KSweepArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Safety factors, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub list: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct CpsdArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    /// Safety factors compared with standard reset (default 2.5,1).
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub list: Vec<f64>,
    /// Reference (default zero).
    #[arg(long = "ref")]
    pub reference: Option<String>,
    #[arg(long)]
    pub amplitude: Option<String>,
    /// Simulated time (default 10s).
    #[arg(long)]
    pub duration: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ElementKind {
    Clegg,
    Gfore,
    Gsore,
    Cglp,
}

#[derive(Debug, Args)]
pub struct SidfArgs {
    #[arg(long, conflicts_with = "preset")]
    pub element: Option<ElementKind>,
    /// `table1-cglp` (the CgLp alone), `mass-table1` or `stage-table2`
    /// (the full CgLp-PID).
    #[arg(long)]
    pub preset: Option<String>,
    /// Reset corner; bare numbers are rad/s.
    #[arg(long)]
    pub wr: Option<String>,
    /// CgLp lag corner.
    #[arg(long)]
    pub wra: Option<String>,
    /// CgLp lead taming corner.
    #[arg(long)]
    pub wf: Option<String>,
    /// GSORE damping.
    #[arg(long)]
    pub beta_r: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Lowest frequency; bare numbers are rad/s.
    #[arg(long, default_value = "0.1")]
    pub wmin: String,
    #[arg(long, default_value = "1e4")]
    pub wmax: String,
    #[arg(long, default_value_t = 200)]
    pub points: usize,
    /// Holding time, e.g. `1ms`; annotates the validity limit pi/rho.
    #[arg(long)]
    pub rho: Option<String>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}
