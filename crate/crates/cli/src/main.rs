//! `conespectra`: experiment driver for spectral computations on cone operators.

mod commands;
mod config;
mod error;
mod output;
mod pipeline;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::Command;
use crate::config::{ExperimentConfig, Overrides};
use crate::error::CliError;

#[derive(Parser)]
#[command(name = "conespectra", version, about = "Spectral experiments on elliptic cone operators")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Indicial roots and singular functions.
    Indicial,
    /// Scaling flow of the extension and its limit set.
    Flow,
    /// Model-operator invertibility along the configured rays.
    NormalCheck,
    /// Pencil spectrum against the secular-equation oracle.
    Spectrum,
    /// Resolvent norms along the configured rays.
    Resolvent,
    /// Expansion residuals of a bump in eigenvectors.
    Complete,
    /// Embedding approximation numbers and Weyl growth.
    Embed,
    /// Ray verdicts and the completeness certificate.
    Certify,
    /// Full pipeline on the cone over a circle.
    Example52,
    /// Full pipeline on a plane sector.
    Example53,
}

#[derive(Args)]
struct Flags {
    /// JSON experiment configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Sector opening angle (radians).
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// Weight γ of the base space.
    #[arg(long, global = true, allow_hyphen_values = true)]
    gamma: Option<f64>,
    /// Real part of the coefficient a.
    #[arg(long, global = true, allow_hyphen_values = true)]
    a: Option<f64>,
    /// Imaginary part of the coefficient a.
    #[arg(long = "a-im", global = true, allow_hyphen_values = true)]
    a_im: Option<f64>,
    /// Real part of the coefficient b.
    #[arg(long, global = true, allow_hyphen_values = true)]
    b: Option<f64>,
    /// Imaginary part of the coefficient b.
    #[arg(long = "b-im", global = true, allow_hyphen_values = true)]
    b_im: Option<f64>,
    /// Ray angle (radians); repeat for several rays.
    #[arg(long, global = true, allow_hyphen_values = true)]
    theta: Vec<f64>,
    /// Number of radial grid nodes.
    #[arg(long, global = true)]
    nh: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
}

impl Cmd {
    fn command(self) -> Command {
        match self {
            Cmd::Indicial => Command::Indicial,
            Cmd::Flow => Command::Flow,
            Cmd::NormalCheck => Command::NormalCheck,
            Cmd::Spectrum => Command::Spectrum,
            Cmd::Resolvent => Command::Resolvent,
            Cmd::Complete => Command::Complete,
            Cmd::Embed => Command::Embed,
            Cmd::Certify => Command::Certify,
            Cmd::Example52 => Command::Example52,
            Cmd::Example53 => Command::Example53,
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("CONESPECTRA_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Config(format!("CONESPECTRA_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> Result<Vec<String>, CliError> {
    configure_threads()?;
    let f = cli.flags;
    let mut config = ExperimentConfig::load(f.config.as_deref())?;
    config.apply(&Overrides {
        alpha: f.alpha,
        gamma: f.gamma,
        a: f.a,
        a_im: f.a_im,
        b: f.b,
        b_im: f.b_im,
        theta: f.theta,
        nh: f.nh,
        out: f.out,
    });
    let command = cli.command.command();
    if command == Command::Example52 && f.alpha.is_some() {
        return Err(CliError::Config("example52 is the closed cone; --alpha does not apply".into()));
    }
    config.validate()?;
    commands::run(command, &config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = cli.command.command().name();
    match run(cli) {
        Ok(files) => {
            println!("{name}: wrote {}", files.join(", "));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{name}: {e}");
            e.exit_code()
        }
    }
}
