//! Command line driver for the two-mode resonator reconstruction pipeline.
//!
//! Subcommands cover the full workflow: `gen` writes a synthetic experiment
//! directory, `calibrate` fits the resonance curve and reports the
//! amplitude scale, `fit` reconstructs the coefficient parameters,
//! `simulate` produces model spectra at an explicit parameter vector, and
//! `report` turns a fit result into plot data and a text summary.
//!
//! Exit codes: 0 success, 1 output I/O failure, 2 configuration or input
//! schema error, 3 calibration failure, 4 optimization failure (a partial
//! iteration history is still written).

mod commands;
mod output;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use modefit::data::ChannelChoice;
use modefit::{Branch, Channel};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "modefit", version, about = "Reconstruct coupled-resonator coefficients from measured spectra")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Print more progress detail to stderr.
    #[arg(short, long, action = ArgAction::Count, global = true)]
    verbose: u8,
    /// Silence progress output; errors still go to stderr.
    #[arg(short, long, global = true, conflicts_with = "verbose")]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic experiment directory from a config with a
    /// [truth] section.
    Gen {
        #[command(flatten)]
        io: ConfigOut,
        /// Override the generator seed from the [truth] section.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the detector channel from the config.
        #[arg(long, value_enum)]
        channel: Option<ChannelArg>,
    },
    /// Fit the measured resonance curve and report the amplitude scale.
    Calibrate {
        #[command(flatten)]
        io: ConfigDataOut,
        /// Override the detector channel from the config.
        #[arg(long, value_enum)]
        channel: Option<ChannelArg>,
    },
    /// Reconstruct (theta, d1, d2) from a measured experiment directory.
    Fit {
        #[command(flatten)]
        io: ConfigDataOut,
        /// Override the detector channel from the config.
        #[arg(long, value_enum)]
        channel: Option<ChannelArg>,
    },
    /// Write model spectra at an explicit parameter vector for overlay
    /// plots against the measured data.
    Simulate {
        #[command(flatten)]
        io: ConfigDataOut,
        /// Transform angle in radians; defaults to the [truth] value.
        #[arg(long)]
        theta: Option<f64>,
        /// First damping coefficient in Hz; defaults to the [truth] value.
        #[arg(long)]
        d1: Option<f64>,
        /// Second damping coefficient in Hz; defaults to the [truth] value.
        #[arg(long)]
        d2: Option<f64>,
        /// Transform branch; defaults to the [truth] value.
        #[arg(long, value_enum)]
        branch: Option<BranchArg>,
        /// Integrate the equations of motion and take a windowed spectrum
        /// instead of the closed-form response. Intended for desk-scale
        /// verification; MHz-scale configs exceed the step budget.
        #[arg(long)]
        oracle: bool,
        /// Override the detector channel from the config.
        #[arg(long, value_enum)]
        channel: Option<ChannelArg>,
    },
    /// Emit per-tone improvement ratios and a text summary from a fit
    /// report.
    Report {
        /// Directory holding report.json from a previous fit.
        #[arg(long)]
        data: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct ConfigOut {
    /// Experiment configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ConfigDataOut {
    /// Experiment configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Directory with the measured spectra and FRF sweep.
    #[arg(long)]
    data: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

/// Detector channel override, mirroring the config `channel` key.
#[derive(Clone, Copy, ValueEnum)]
enum ChannelArg {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
    Auto,
}

impl From<ChannelArg> for ChannelChoice {
    fn from(c: ChannelArg) -> ChannelChoice {
        match c {
            ChannelArg::One => ChannelChoice::Fixed(Channel::One),
            ChannelArg::Two => ChannelChoice::Fixed(Channel::Two),
            ChannelArg::Auto => ChannelChoice::Auto,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum BranchArg {
    Rotation,
    Reflection,
}

impl From<BranchArg> for Branch {
    fn from(b: BranchArg) -> Branch {
        match b {
            BranchArg::Rotation => Branch::Rotation,
            BranchArg::Reflection => Branch::Reflection,
        }
    }
}

/// A command failure carrying the process exit code.
pub struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn new(code: u8, error: impl Into<anyhow::Error>) -> Failure {
        Failure { code, error: error.into() }
    }
}

pub type CmdResult = Result<(), Failure>;

/// Stderr progress reporting at three levels: quiet, normal, verbose.
pub struct Log {
    level: i8,
}

impl Log {
    fn new(verbose: u8, quiet: bool) -> Log {
        Log { level: if quiet { -1 } else { verbose as i8 } }
    }

    pub fn info(&self, msg: impl AsRef<str>) {
        if self.level >= 0 {
            eprintln!("{}", msg.as_ref());
        }
    }

    pub fn debug(&self, msg: impl AsRef<str>) {
        if self.level >= 1 {
            eprintln!("{}", msg.as_ref());
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let log = Log::new(cli.verbose, cli.quiet);
    let result = match cli.command {
        Command::Gen { io, seed, channel } => {
            commands::gen(&log, &io.config, &io.out, seed, channel.map(Into::into))
        }
        Command::Calibrate { io, channel } => {
            commands::calibrate(&log, &io.config, &io.data, &io.out, channel.map(Into::into))
        }
        Command::Fit { io, channel } => {
            commands::fit(&log, &io.config, &io.data, &io.out, channel.map(Into::into))
        }
        Command::Simulate { io, theta, d1, d2, branch, oracle, channel } => commands::simulate(
            &log,
            &io.config,
            &io.data,
            &io.out,
            commands::ParamOverrides { theta, d1, d2, branch: branch.map(Into::into) },
            oracle,
            channel.map(Into::into),
        ),
        Command::Report { data, out } => commands::report(&log, &data, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {:#}", failure.error);
            ExitCode::from(failure.code)
        }
    }
}
