//! `surfcrit`: convergence studies for δ-interactions on closed surfaces.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure.

mod commands;
mod config;
mod error;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Format, RunConfig};
use error::CliError;
use output::{config_hash, Output};

#[derive(Parser)]
#[command(name = "surfcrit", version, about = "Critical couplings, capacities and bound states of surface delta interactions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Mesh levels, overriding `run.levels` (comma separated).
    #[arg(long, global = true, value_delimiter = ',')]
    levels: Option<Vec<u32>>,
    /// Output directory, overriding `run.out` (default `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Worker threads for assembly and matrix products.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Per-level and extrapolated critical strength and interaction radius.
    Critical,
    /// Capacity, equilibrium density and the Gauss-energy check.
    Capacity,
    /// Small-deformation scan of the product of critical strength and surface radius.
    DeformScan,
    /// Sup-norm certificate sweep over elongated surfaces of revolution.
    Elongated,
    /// Criticality verdict and ground-state energy for a constant strength.
    BoundState,
    /// Writes the meshes of the configured levels.
    MeshExport,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Critical => "critical",
            Command::Capacity => "capacity",
            Command::DeformScan => "deform-scan",
            Command::Elongated => "elongated",
            Command::BoundState => "bound-state",
            Command::MeshExport => "mesh-export",
        }
    }

    fn extrapolates(self) -> bool {
        !matches!(self, Command::Elongated | Command::MeshExport)
    }
}

fn load(cli: &Cli) -> Result<(RunConfig, String), CliError> {
    let path = cli.config.as_deref().ok_or_else(|| CliError::Config("--config PATH is required".into()))?;
    let bytes = std::fs::read(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let text = String::from_utf8(bytes.clone()).map_err(|e| CliError::Config(e.to_string()))?;
    let mut cfg = RunConfig::parse(&text, path.parent()).map_err(|e| e.context(&path.display().to_string()))?;
    let mut overrides = String::new();
    if let Some(levels) = &cli.levels {
        cfg.run.levels = levels.clone();
        overrides = format!("\n--levels {levels:?}");
    }
    Ok((cfg, config_hash(&bytes, &overrides)))
}

fn run(cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    let (cfg, hash) = load(cli)?;
    cfg.validate(cli.command.extrapolates())?;
    if let Some(n) = cli.threads.or(cfg.run.threads) {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let dir = cli.out.clone().or_else(|| cfg.run.out.clone()).unwrap_or_else(|| Path::new("out").to_path_buf());
    let format = cli.format.unwrap_or(cfg.run.format);
    let mut out = Output::new(&dir, format, cli.command.name(), hash)?;
    let result = match cli.command {
        Command::Critical => commands::critical(&cfg, &mut out),
        Command::Capacity => commands::capacity(&cfg, &mut out),
        Command::DeformScan => commands::deform(&cfg, &mut out),
        Command::Elongated => commands::elongated(&cfg, &mut out),
        Command::BoundState => commands::bound_state(&cfg, &mut out),
        Command::MeshExport => commands::mesh_export(&cfg, &mut out),
    };
    result.map(|()| out.written)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("surfcrit {}: {e}", cli.command.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
