//! `bpat`: check machines, run reuse specifications, generate and discharge
//! proof obligations.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

mod commands;
mod resolve;
mod sweep;

pub use resolve::Workspace;

/// Exit statuses. Anything else is a bug.
pub mod exit {
    pub const OK: i32 = 0;
    pub const PARSE: i32 = 1;
    pub const TYPE: i32 = 2;
    pub const REUSE: i32 = 3;
    pub const INTERACTIVE: i32 = 4;
    pub const REFUTED: i32 = 5;
    pub const USAGE: i32 = 64;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Structured,
}

#[derive(Debug, Parser)]
#[command(name = "bpat", version, about = "Specification patterns for B-style abstract machines")]
pub struct Cli {
    /// Extra directories searched for included machines.
    #[arg(long = "library-path", global = true, value_name = "DIR")]
    pub library_path: Vec<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "text")]
    pub format: Format,
    /// Seed for randomized runs.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and typecheck machine files.
    Check {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
    /// Run a reuse specification and write the generated machines.
    Transform {
        spec: PathBuf,
        #[arg(short, long, value_name = "DIR")]
        output: PathBuf,
    },
    /// Generate, discharge and report proof obligations.
    Pogen {
        machine: PathBuf,
        /// Report file; `-` writes to standard output.
        report: PathBuf,
        /// Carrier sizes for the oracle, e.g. `1,2,3`.
        #[arg(long, value_delimiter = ',', default_values_t = [1usize, 2, 3])]
        oracle: Vec<usize>,
        #[arg(long, conflicts_with = "oracle")]
        no_oracle: bool,
    },
    /// Inspect the embedded pattern library.
    Library {
        #[command(subcommand)]
        action: LibraryAction,
    },
    /// Cross-check the prover against the oracle on random machines.
    Sweep {
        #[arg(long, default_value_t = 20)]
        machines: usize,
        #[arg(long, value_delimiter = ',', default_values_t = [1usize, 2, 3])]
        oracle: Vec<usize>,
    },
}

#[derive(Debug, Subcommand)]
pub enum LibraryAction {
    List,
    Show { name: String },
}

/// Output sinks, so tests can capture what a command prints.
pub struct Io<'a> {
    pub out: &'a mut dyn Write,
    pub err: &'a mut dyn Write,
}

/// Runs the command line `args` (program name first) and returns the exit
/// status.
pub fn run(args: Vec<String>) -> i32 {
    let (mut out, mut err) = (std::io::stdout(), std::io::stderr());
    run_with(args, &mut Io { out: &mut out, err: &mut err })
}

pub fn run_with(args: Vec<String>, io: &mut Io) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = write!(io.err, "{}", e.render());
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => exit::OK,
                _ => exit::USAGE,
            };
        }
    };
    commands::dispatch(&cli, io)
}

/// Writes `text` to `path` through a temporary file in the same directory.
pub(crate) fn write_atomic(path: &Path, text: &str) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(text.as_bytes())?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
