//! `floquet`: batch front end for the Floquet–Bloch toolkit.
//!
//! Exit status: 0 on success, 1 for configuration and domain errors, 2 for
//! numerical failures (including failed checks in `verify` and `census`).

mod commands;
mod config;
mod verify;

use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use floquet::io;

use config::{Format, RunConfig, Settings};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Core(floquet::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<floquet::Error> for CliError {
    fn from(e: floquet::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_numerical() => 2,
            _ => 1,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "floquet", version, about = "Floquet–Bloch spectra, singular quasimomenta and bracketed expansions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// TOML or JSON file with the same keys as the flags; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    run: RunConfig,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fiber spectrum at one quasimomentum.
    Spectrum(Common),
    /// Band table over a quasimomentum grid with the asymptotic residual report.
    Bands(Common),
    /// Singular quasimomenta, their classification and the growth probe at infinity.
    Singularities(Common),
    /// Eigenvalue counts in the asymptotic disks near 0 or π.
    Census(Common),
    /// Bracketed spectral expansion of a function and the partial-expansion bound.
    Expand(Common),
    /// Invariant checks on the built-in operators (or just `--fixture`).
    Verify(Common),
}

fn settings(c: &Common) -> Result<Settings, CliError> {
    let base = match &c.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    Settings::resolve(base.overlay(c.run.clone()))
}

fn verify(c: &Common) -> Result<i32, CliError> {
    let mut raw = c.run.clone();
    raw.k = raw.k.or(Some(12));
    let s = settings(&Common { config: c.config.clone(), run: raw })?;
    let checks = verify::run(s.raw.fixture.as_deref(), s.k)?;
    let ok = checks.iter().all(|c| c.pass);
    let body = match s.format {
        Format::Structured => io::envelope("floquet-verify", &serde_json::json!({"all_pass": ok, "checks": checks})),
        Format::Tabular => {
            let mut out = io::csv_header("floquet-verify");
            out.push_str("fixture,check,value,tol,pass\n");
            for c in &checks {
                let _ = writeln!(out, "{},{},{},{},{}", c.fixture, c.check, io::num(c.value), io::num(c.tol), c.pass as u8);
            }
            out
        }
    };
    let name = if s.format == Format::Structured { "verify.json" } else { "verify.csv" };
    std::fs::create_dir_all(&s.out).map_err(|e| CliError::Config(format!("cannot create {}: {e}", s.out.display())))?;
    std::fs::write(s.out.join(name), body).map_err(|e| CliError::Config(format!("cannot write {name}: {e}")))?;
    for c in &checks {
        println!("{} {:<12} {:<20} {:.3e} (tol {:.0e})", if c.pass { "PASS" } else { "FAIL" }, c.fixture, c.check, c.value, c.tol);
    }
    Ok(if ok { 0 } else { 2 })
}

fn run(cli: &Cli) -> Result<i32, CliError> {
    match &cli.command {
        Command::Spectrum(c) => commands::spectrum(&settings(c)?),
        Command::Bands(c) => commands::bands(&settings(c)?),
        Command::Singularities(c) => commands::singularities(&settings(c)?),
        Command::Census(c) => commands::census(&settings(c)?),
        Command::Expand(c) => commands::expand(&settings(c)?),
        Command::Verify(c) => verify(c),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("floquet: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
