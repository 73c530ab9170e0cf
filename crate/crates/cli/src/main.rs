//! `clod`: command-line front end of the solvers.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use clod_core::engines::SchemeKind;

use clod_cli::commands::{self, CliError, Overrides, EXIT_INVALID, EXIT_OK};
use clod_cli::{config, scenarios};

#[derive(Parser)]
#[command(
    name = "clod",
    version,
    about = "Conformal LOD-FDTD and reference time-domain solvers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Log verbosity (error, warn, info, debug, trace).
    #[arg(long, global = true, default_value = "info")]
    log: String,
}

#[derive(Subcommand)]
enum Command {
    /// Run a time-domain simulation.
    Run(Common),
    /// Eigenvalue stability sweep from the config's [stability] section.
    Stability(Common),
    /// Extract conformal coefficients and write them to disk.
    MeshExport(Common),
    /// List the bundled scenarios, or write them to a directory.
    Scenarios {
        #[arg(long, value_name = "DIR")]
        write: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// Config file, or the name of a bundled scenario.
    #[arg(long, value_name = "PATH")]
    config: String,
    /// Override the Courant number.
    #[arg(long)]
    cfln: Option<f64>,
    /// Override the scheme (fdtd, cfdtd, lod, clod).
    #[arg(long)]
    scheme: Option<SchemeKind>,
    /// Output directory (default: out/<name>).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads for the stability column probes.
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Reserved; every solver path is deterministic.
    #[arg(long)]
    seed: Option<u64>,
}

/// Loads a config file, falling back to a bundled scenario of that name.
/// Bundled scenarios are materialized next to their mesh files first.
fn load(spec: &str) -> Result<(config::SimulationConfig, String), CliError> {
    let path = Path::new(spec);
    if path.exists() {
        let cfg = config::parse_config(path)?;
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        return Ok((cfg, text));
    }
    match scenarios::find(spec) {
        Some(s) => {
            let dir = std::env::temp_dir().join(format!("clod-scenarios-{}", std::process::id()));
            scenarios::write_all(&dir).map_err(|source| CliError::Io {
                path: dir.clone(),
                source,
            })?;
            Ok((config::parse_config_str(s.text, &dir)?, s.text.to_string()))
        }
        None => Err(CliError::Config(config::ConfigError::Io {
            path: path.to_path_buf(),
            source: std::io::Error::new(
                std::io::ErrorKind::NotFound,
                "no such file or bundled scenario",
            ),
        })),
    }
}

fn execute(cli: Cli) -> Result<String, CliError> {
    let (common, which) = match cli.command {
        Command::Scenarios { write } => {
            if let Some(dir) = write {
                scenarios::write_all(&dir).map_err(|source| CliError::Io {
                    path: dir.clone(),
                    source,
                })?;
                return Ok(format!(
                    "wrote {} scenarios to {}\n",
                    scenarios::SCENARIOS.len(),
                    dir.display()
                ));
            }
            let mut s = String::new();
            for sc in scenarios::SCENARIOS {
                s.push_str(&format!("{:<22} {}\n", sc.name, sc.description()));
            }
            return Ok(s);
        }
        Command::Run(c) => (c, 0),
        Command::Stability(c) => (c, 1),
        Command::MeshExport(c) => (c, 2),
    };
    if common.threads == 0 {
        return Err(CliError::Invalid("--threads must be at least 1".into()));
    }
    let _ = common.seed;
    let (mut cfg, text) = load(&common.config)?;
    let ov = Overrides {
        cfln: common.cfln,
        scheme: common.scheme,
        out: common.out,
        threads: Some(common.threads),
    };
    ov.apply(&mut cfg)?;
    match which {
        0 => commands::cmd_run(&cfg, &text, &ov),
        1 => commands::cmd_stability(&cfg, &ov),
        _ => commands::cmd_mesh_export(&cfg, &ov),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(
                (if e.use_stderr() {
                    EXIT_INVALID
                } else {
                    EXIT_OK
                }) as u8,
            );
        }
    };
    env_logger::Builder::new()
        .parse_filters(&cli.log)
        .format_timestamp(None)
        .init();
    match execute(cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
