mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use config::{Command, InitialState, Overrides, RunConfig, TimeGrid};

#[derive(Parser)]
#[command(
    name = "dspin",
    version,
    about = "Spectra and dynamics of a collective spin in a polarized bath"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sector spectra and eigenvector distances
    Spectrum(Flags),
    /// Finite-size scaling of doublets, d_1 and precursors
    Scaling(Flags),
    /// Time evolution from a chosen initial state
    Evolve(Flags),
    /// Oracle and invariant checks; nonzero exit on any failure
    Verify(Flags),
}

#[derive(Args, Default)]
struct Flags {
    /// key = value file; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads
    #[arg(long)]
    jobs: Option<usize>,
    /// Doubled spins, comma separated
    #[arg(long = "two-j", value_delimiter = ',')]
    two_j: Option<Vec<u32>>,
    /// Bath polarizations
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    p: Option<Vec<f64>>,
    /// Sectors M (default: all for spectrum, 0 otherwise)
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    m: Option<Vec<i32>>,
    /// Bounds on d_N for the precursor scan
    #[arg(long = "gamma-bound", value_delimiter = ',')]
    gamma_bound: Option<Vec<f64>>,
    /// lin:start:stop:count or log:start:stop:count
    #[arg(long)]
    times: Option<TimeGrid>,
    /// hp-doublet[:a:b] | fock:m | coherent:theta:phi
    #[arg(long, allow_hyphen_values = true)]
    initial: Option<InitialState>,
    #[arg(long, allow_hyphen_values = true)]
    h: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    gamma0: Option<f64>,
    /// lambda_C / j subtracted from precursors
    #[arg(long = "lambda-c", allow_hyphen_values = true)]
    lambda_c: Option<f64>,
    /// Histogram bins for the density of states
    #[arg(long)]
    bins: Option<usize>,
}

impl Flags {
    fn overrides(self) -> Result<Overrides> {
        let file = match &self.config {
            Some(path) => Overrides::from_file(path)?,
            None => Overrides::default(),
        };
        Ok(file.merged(Overrides {
            two_j: self.two_j,
            p: self.p,
            m: self.m,
            gamma_bound: self.gamma_bound,
            times: self.times,
            initial: self.initial,
            out: self.out,
            jobs: self.jobs,
            h: self.h,
            gamma: self.gamma,
            gamma0: self.gamma0,
            lambda_c: self.lambda_c,
            bins: self.bins,
        }))
    }
}

fn run(cli: Cli) -> Result<bool> {
    let (command, flags) = match cli.command {
        Cmd::Spectrum(f) => (Command::Spectrum, f),
        Cmd::Scaling(f) => (Command::Scaling, f),
        Cmd::Evolve(f) => (Command::Evolve, f),
        Cmd::Verify(f) => (Command::Verify, f),
    };
    let cfg = RunConfig::resolve(command, flags.overrides()?)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.jobs {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().context("starting worker pool")?;
    pool.install(|| {
        let files = match command {
            Command::Spectrum => commands::cmd_spectrum(&cfg)?,
            Command::Scaling => commands::cmd_scaling(&cfg)?,
            Command::Evolve => commands::cmd_evolve(&cfg)?,
            Command::Verify => {
                let (lines, ok) = commands::cmd_verify();
                for l in lines {
                    println!("{l}");
                }
                return Ok(ok);
            }
        };
        for f in files {
            println!("wrote {}", f.display());
        }
        Ok(true)
    })
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
