//! `poslo`: key generation, log signing, distillation and batch
//! verification over files.

mod commands;
mod files;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

/// Command failures. Every variant maps to exit status 2; verification
/// failures are not errors and exit with 1.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Poslo(#[from] poslo::Error),
    #[error("format: {0}")]
    Format(String),
    #[error("state: {0}")]
    State(String),
    #[error("usage: {0}")]
    Usage(String),
}

/// Outcome of a command that completed without error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Valid,
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SchemeArg {
    /// Epoch signatures with precomputed commitments.
    C,
    /// Per-entry signatures with BPV commitments.
    F,
}

#[derive(Debug, Parser)]
#[command(name = "poslo", version, about = "Aggregate signatures for secure logging")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a key pair into a directory.
    Keygen {
        #[arg(long, value_enum)]
        scheme: SchemeArg,
        /// 1 = SHA-256, 2 = MMO/MDC-2, 3 = MMO with modular addition.
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
        suite: u8,
        #[arg(long)]
        n1: u32,
        #[arg(long)]
        n2: u32,
        /// Number of umbrella aggregates kept by the distiller.
        #[arg(long, default_value_t = 1)]
        umbrella: u32,
        /// BPV table size and subset size for scheme f, as `v,k`.
        #[arg(long, conflicts_with = "no_bpv")]
        bpv: Option<String>,
        /// Compute each scheme f commitment with a full exponentiation.
        #[arg(long)]
        no_bpv: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sign a log file, appending to a signature file.
    Sign {
        #[arg(long)]
        key: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Verify a signature stream and write its cold archive.
    Distill {
        #[arg(long)]
        pk: PathBuf,
        #[arg(long)]
        logs: PathBuf,
        #[arg(long)]
        sigs: PathBuf,
        #[arg(long)]
        ccd: PathBuf,
    },
    /// Batch-verify a log against a cold archive.
    Verify {
        #[arg(long)]
        pk: PathBuf,
        #[arg(long)]
        logs: PathBuf,
        #[arg(long)]
        ccd: PathBuf,
        /// V: all valid data, U: each umbrella, I: each invalid record.
        #[arg(long, default_value = "V")]
        mode: poslo::distill::Mode,
        #[arg(long, env = "POSLO_WORKERS", default_value_t = 1)]
        workers: usize,
    },
    /// Measure signing and verification throughput on random entries.
    Bench {
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=3))]
        suite: u8,
        #[arg(long, default_value_t = 1 << 16)]
        entries: u64,
        #[arg(long, default_value_t = 32)]
        entry_size: usize,
        #[arg(long, env = "POSLO_WORKERS", default_value_t = 1)]
        workers: usize,
    },
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    match cli.command {
        Command::Keygen {
            scheme,
            suite,
            n1,
            n2,
            umbrella,
            bpv,
            no_bpv,
            out,
        } => {
            let bpv = match (scheme, no_bpv, bpv) {
                (SchemeArg::C, false, None) => None,
                (SchemeArg::C, _, _) => return Err(CliError::Usage("--bpv and --no-bpv apply to scheme f".into())),
                (SchemeArg::F, true, _) => None,
                (SchemeArg::F, false, None) => Some((poslo::fine::DEFAULT_BPV_V, poslo::fine::DEFAULT_BPV_K)),
                (SchemeArg::F, false, Some(spec)) => Some(commands::parse_bpv(&spec)?),
            };
            let args = commands::KeygenArgs {
                fine: scheme == SchemeArg::F,
                suite,
                n1,
                n2,
                umbrellas: umbrella,
                bpv,
            };
            commands::keygen(&args, &out)
        }
        Command::Sign { key, input, out } => commands::sign(&key, &input, &out),
        Command::Distill { pk, logs, sigs, ccd } => commands::distill(&pk, &logs, &sigs, &ccd),
        Command::Verify {
            pk,
            logs,
            ccd,
            mode,
            workers,
        } => commands::verify(&pk, &logs, &ccd, mode, workers),
        Command::Bench {
            suite,
            entries,
            entry_size,
            workers,
        } => commands::bench(suite, entries, entry_size, workers),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(Outcome::Valid) => ExitCode::SUCCESS,
        Ok(Outcome::Failed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("poslo: {e}");
            ExitCode::from(2)
        }
    }
}
