//! Batch front end: reads a JSON run configuration, executes one command,
//! and writes plot-ready CSV / PGM files.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ambris::cli::{parse_config, run_command, Command};
use ambris::{Error, Result};

#[derive(Parser)]
#[command(
    name = "ambris",
    version,
    about = "RIS-assisted ambient backscatter link simulator",
    after_help = "Angles on the command line are degrees. The worker count \
                  comes from --threads, then the AMBRIS_THREADS environment \
                  variable, then the library default; it never changes the \
                  numbers in the output files."
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// Path to the JSON run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory (overrides the config's `out_dir`).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Worker threads for grid and map evaluation.
    #[arg(long, global = true, value_name = "K")]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write the focusing codebook as codebook.csv
    Codebook,
    /// Evaluate all (beam, phase) pairs into evaluate.csv
    Evaluate,
    /// Run the feedback search; writes transcript and result
    Search,
    /// Write the reflected-field map for one beam and phase shift
    Map {
        /// 1-based beam index from the codebook.
        #[arg(long)]
        beam: usize,
        /// Common phase shift in degrees.
        #[arg(
            long = "delta-deg",
            default_value_t = 0.0,
            allow_negative_numbers = true
        )]
        delta_deg: f64,
        /// Add the direct source field on top of the reflected one.
        #[arg(long = "include-direct")]
        include_direct: bool,
    },
    /// Summarize the best pair against the no-RIS reference
    Report,
}

fn resolve_threads(flag: Option<usize>) -> Result<usize> {
    if let Some(k) = flag {
        return Ok(k);
    }
    match std::env::var("AMBRIS_THREADS") {
        Ok(value) => value.trim().parse::<usize>().map_err(|_| {
            Error::Config(format!(
                "AMBRIS_THREADS must be a nonnegative integer, got `{value}`"
            ))
        }),
        Err(_) => Ok(0),
    }
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    let config_path = cli
        .config
        .ok_or_else(|| Error::Config("--config <PATH> is required".to_string()))?;
    let text = std::fs::read_to_string(&config_path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", config_path.display())))?;
    let mut cfg = parse_config(&text)?;
    if let Some(out) = cli.out {
        cfg.out_dir = out;
    }
    cfg.threads = resolve_threads(cli.threads)?;

    let command = match cli.command {
        Cmd::Codebook => Command::Codebook,
        Cmd::Evaluate => Command::Evaluate,
        Cmd::Search => Command::Search,
        Cmd::Map {
            beam,
            delta_deg,
            include_direct,
        } => Command::Map {
            beam,
            delta_deg,
            include_direct,
        },
        Cmd::Report => Command::Report,
    };
    for path in run_command(&command, &cfg)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
