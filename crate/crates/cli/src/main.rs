//! `torusnf`: drive the normal-form, stability and frequency-analysis tools
//! from a TOML manifest.
//!
//! Exit codes: 0 on success, 1 on a numeric failure (small divisor, no
//! convergence, failed check), 2 on usage or I/O errors. Failures print a
//! JSON report on stderr.

mod commands;
mod error;
mod output;
mod svg;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use torusnf::manifest::Manifest;

use error::CliError;
use output::{sha256_hex, Format, Outputs};

#[derive(Parser)]
#[command(name = "torusnf", version, about = "Torus normal forms, stability-time estimates and frequency analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run manifest (TOML).
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Restrict the outputs to these formats (repeatable).
    #[arg(long, global = true, value_enum)]
    format: Vec<Format>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Kolmogorov normalization: normal form and generating-function norms.
    Kolmogorov,
    /// Birkhoff normalization around the torus: remainder table D_r.
    Birkhoff,
    /// Stability time T(rho0) over the manifest's grid.
    Stability,
    /// Planetary preprocessing with per-stage snapshots.
    Pipeline,
    /// Three-body integration: sampled elements and conservation drift.
    Integrate,
    /// Frequency analysis of integrated or synthetic signals.
    Frequencies,
    /// Invariant checks on every section of the manifest.
    Check,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Kolmogorov => "kolmogorov",
            Command::Birkhoff => "birkhoff",
            Command::Stability => "stability",
            Command::Pipeline => "pipeline",
            Command::Integrate => "integrate",
            Command::Frequencies => "frequencies",
            Command::Check => "check",
        }
    }
}

fn load(path: &Path) -> Result<(Manifest, String), CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| CliError::usage(format!("{} is not UTF-8", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    Ok((Manifest::from_str(&text, base)?, sha256_hex(&bytes)))
}

fn run(cli: Cli) -> Result<Vec<PathBuf>, CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::usage(e.to_string()))?;
    }
    let path = cli.manifest.ok_or_else(|| CliError::usage("--manifest is required"))?;
    let (m, sha) = load(&path)?;
    let mut out = Outputs::new(&cli.out, cli.command.name(), sha, &cli.format)?;
    match cli.command {
        Command::Kolmogorov => commands::kolmogorov(&m, &mut out),
        Command::Birkhoff => commands::birkhoff(&m, &mut out),
        Command::Stability => commands::stability(&m, &mut out),
        Command::Pipeline => commands::pipeline(&m, &mut out),
        Command::Integrate => commands::integrate_cmd(&m, &mut out),
        Command::Frequencies => commands::frequencies(&m, &mut out),
        Command::Check => commands::check(&m, &mut out),
    }
    .and(out.finish())
}

fn fail(e: &CliError) -> ExitCode {
    eprintln!("{}", e.to_json());
    ExitCode::from(e.code as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(&CliError::usage(e.to_string().trim_end())),
    };
    match run(cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}
