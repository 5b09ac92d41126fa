mod commands;
mod config;
mod output;

use clap::{Parser, Subcommand, ValueEnum};
use commands::{CliError, Context, ManifestCheck, Outcome};
use config::RunConfig;
use output::{write_atomic, FileRecord};
use serde::Serialize;
use serde_json::Value;
use sharpfield::units::{PhysicalScale, UnitSystem};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

#[derive(Parser)]
#[command(name = "sharpfield", version, about = "Hydrogen, Hartree, sharp-field and photon-guiding computations")]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default: out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    units: Option<Units>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Units {
    Hartree,
    Si,
}

#[derive(Subcommand)]
enum Command {
    /// Bohr levels and transition frequencies.
    Spectrum {
        #[arg(long)]
        n_max: Option<u32>,
    },
    /// Self-consistent Hartree ground state.
    Hartree {
        #[arg(long = "Z")]
        z: Option<f64>,
    },
    /// Electrostatic field energy and probe fields of ball charges.
    Fields,
    /// Bohm trajectories and the pushforward check.
    Trajectory,
    /// Radiation potentials, Fourier samples and kernel tables.
    Radiate,
    /// First-order amplitudes under a Gaussian pulse.
    Perturb,
    /// Photon guiding trajectories.
    Photon,
    /// Energy-momentum identities, Jensen gap and commutator series.
    Audit,
    /// Full acceptance suite.
    Selftest,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Spectrum { .. } => "spectrum",
            Command::Hartree { .. } => "hartree",
            Command::Fields => "fields",
            Command::Trajectory => "trajectory",
            Command::Radiate => "radiate",
            Command::Perturb => "perturb",
            Command::Photon => "photon",
            Command::Audit => "audit",
            Command::Selftest => "selftest",
        }
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    subcommand: &'a str,
    units: UnitSystem,
    seed: u64,
    config: Value,
    started_unix: f64,
    wall_seconds: f64,
    checks: Vec<ManifestCheck>,
    outputs: Vec<FileRecord>,
}

fn load_config(path: Option<&PathBuf>) -> Result<RunConfig, CliError> {
    let Some(path) = path else { return Ok(RunConfig::default()) };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Validation(format!("reading {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let started = Instant::now();
    let started_unix = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
    let run = load_config(cli.config.as_ref())?;
    let units = match cli.units {
        Some(Units::Si) => UnitSystem::Si,
        Some(Units::Hartree) => UnitSystem::Hartree,
        None => run.units.unwrap_or_default(),
    };
    let seed = cli.seed.or(run.seed).unwrap_or(1);
    let out = cli.out.clone().or_else(|| run.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let ctx = Context { run: &run, scale: PhysicalScale { system: units, ..Default::default() }, seed };
    let Outcome { config, outputs, checks } = match &cli.command {
        Command::Spectrum { n_max } => commands::spectrum(&ctx, *n_max)?,
        Command::Hartree { z } => commands::hartree(&ctx, *z)?,
        Command::Fields => commands::fields(&ctx)?,
        Command::Trajectory => commands::trajectory(&ctx)?,
        Command::Radiate => commands::radiate(&ctx)?,
        Command::Perturb => commands::perturb(&ctx)?,
        Command::Photon => commands::photon(&ctx)?,
        Command::Audit => commands::audit(&ctx)?,
        Command::Selftest => commands::selftest(&ctx)?,
    };
    let records = outputs.commit(&out)?;
    let manifest = Manifest {
        tool: "sharpfield",
        version: env!("CARGO_PKG_VERSION"),
        subcommand: cli.command.name(),
        units,
        seed,
        config,
        started_unix,
        wall_seconds: started.elapsed().as_secs_f64(),
        checks,
        outputs: records,
    };
    let mut bytes = serde_json::to_vec_pretty(&manifest).map_err(|e| CliError::Io(e.into()))?;
    bytes.push(b'\n');
    write_atomic(&out.join("manifest.json"), &bytes)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let report = serde_json::json!({ "error": e.kind(), "message": e.message(), "exit_code": e.exit_code() });
            eprintln!("{report}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
