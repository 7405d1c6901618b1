//! `levygen <symbol|generator|simulate|asymptotics|verify> --config path`
//!
//! Exit codes: 0 pass, 1 check failure, 2 config error, 3 numeric
//! non-convergence.

mod commands;
mod config;

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use levygen::stats::DEFAULT_SEED;
use levygen::Error;
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "levygen", version, about = "Symbols, generators and small-time asymptotics of Lévy-type processes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Master seed; overrides the config. Defaults to 0x4C455659.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (defaults to all cores). Results do not depend on it.
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Symbol values, Blumenthal–Getoor index, sector constant, diffusion and growth checks.
    Symbol(Common),
    /// `Lf` on a grid of states.
    Generator(Common),
    /// Sample paths as CSV.
    Simulate(Common),
    /// Small-time Monte Carlo experiments.
    Asymptotics(Common),
    /// Verification suites: moment-identity, diffusion, kernel, domain.
    Verify(Common),
}

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Numeric(String),
    /// Any other library error.
    Run(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::NonConvergence { .. } | Error::CompensatorUndefined | Error::InsufficientRegularity(_) => {
                Failure::Numeric(msg)
            }
            Error::Domain(_) | Error::Contract(_) | Error::Expr(_) | Error::Json(_) => Failure::Config(msg),
            _ => Failure::Run(msg),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Run(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Run(e.to_string())
    }
}

/// Where a command writes and which seed it uses.
pub struct Ctx {
    pub out: PathBuf,
    pub seed: Option<u64>,
}

impl Ctx {
    pub fn seed_or(&self, config: Option<u64>) -> u64 {
        self.seed.or(config).unwrap_or(DEFAULT_SEED)
    }

    pub fn file(&self, name: &str) -> Result<BufWriter<File>, Failure> {
        Ok(BufWriter::new(File::create(self.out.join(name))?))
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), Failure> {
        let mut w = self.file(name)?;
        serde_json::to_writer_pretty(&mut w, value)?;
        std::io::Write::write_all(&mut w, b"\n")?;
        Ok(())
    }
}

fn run(cmd: Command) -> Result<bool, Failure> {
    let (name, common) = match &cmd {
        Command::Symbol(c) => ("symbol", c),
        Command::Generator(c) => ("generator", c),
        Command::Simulate(c) => ("simulate", c),
        Command::Asymptotics(c) => ("asymptotics", c),
        Command::Verify(c) => ("verify", c),
    };
    if let Some(n) = common.workers {
        if n == 0 {
            return Err(Failure::Config("--workers must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Run(e.to_string()))?;
    }
    let path: &Path = &common.config;
    std::fs::create_dir_all(&common.out)?;
    let ctx = Ctx {
        out: common.out.clone(),
        seed: common.seed,
    };
    match name {
        "symbol" => commands::symbol(config::load(path)?, &ctx),
        "generator" => commands::generator(config::load(path)?, &ctx),
        "simulate" => commands::simulate(config::load(path)?, &ctx),
        "asymptotics" => commands::asymptotics(config::load(path)?, &ctx),
        _ => commands::verify(config::load(path)?, &ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Config(m)) => {
            eprintln!("config error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Numeric(m)) => {
            eprintln!("numerical failure: {m}");
            ExitCode::from(3)
        }
        Err(Failure::Run(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
