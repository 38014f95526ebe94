//! `censornet` command-line driver.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};

use clap::{Parser, Subcommand};

use censornet::config::{ConfigFile, ExperimentConfig};
use censornet::montecarlo::{read_records_csv, run_experiment, summarize, write_records_csv, RunOptions, StrataConfig};
use censornet::{oracle, Error};

/// Exit statuses. `MALFORMED` separates unparsable config text from
/// well-formed configs that violate a constraint.
mod exit {
    pub const CONFIG: u8 = 1;
    pub const RUNTIME: u8 = 2;
    pub const IO: u8 = 3;
    pub const MALFORMED: u8 = 4;
}

const THREADS_VAR: &str = "CENSORNET_THREADS";

#[derive(Parser)]
#[command(name = "censornet", version, about = "Monte Carlo study of OLS peer-effect estimates under censored outdegree")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write one CSV row per replication.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Records CSV; defaults to `output.records` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarise a records CSV as JSON (`--out -` writes to stdout).
    Summarize {
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the built-in self-checks.
    Oracle,
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure { code, message: message.into() }
    }

    fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        Failure::new(exit::IO, format!("{}: {e}", path.display()))
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidConfig(_) => exit::CONFIG,
            Error::Io(_) => exit::IO,
            _ => exit::RUNTIME,
        };
        Failure::new(code, e.to_string())
    }
}

fn parse_config(path: &Path) -> Result<ExperimentConfig, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
    let file: ConfigFile = toml::from_str(&text)
        .map_err(|e| Failure::new(exit::MALFORMED, format!("{}: {e}", path.display())))?;
    file.into_config().map_err(|e| Failure::new(exit::CONFIG, format!("{}: {e}", path.display())))
}

fn threads_from_env() -> Result<Option<usize>, Failure> {
    match std::env::var(THREADS_VAR) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(Failure::new(exit::CONFIG, format!("{THREADS_VAR} must be a positive integer, got {v:?}"))),
        },
    }
}

/// Writes via a `.partial` sibling renamed into place on success, so an
/// interrupted run never leaves a truncated file under the final name.
fn write_atomically(path: &Path, write: impl FnOnce(&mut fs::File) -> Result<(), Failure>) -> Result<(), Failure> {
    let mut partial = path.as_os_str().to_owned();
    partial.push(".partial");
    let partial = PathBuf::from(partial);
    let mut file = fs::File::create(&partial).map_err(|e| Failure::io(&partial, e))?;
    write(&mut file)?;
    file.sync_all().map_err(|e| Failure::io(&partial, e))?;
    fs::rename(&partial, path).map_err(|e| Failure::io(path, e))
}

fn cmd_run(config: &Path, out: Option<&Path>) -> Result<(), Failure> {
    let cfg = parse_config(config)?;
    let out = out
        .map(Path::to_path_buf)
        .or_else(|| cfg.output.records.clone())
        .ok_or_else(|| Failure::new(exit::CONFIG, "no output path: pass --out or set output.records"))?;
    let threads = threads_from_env()?;

    let reported = AtomicUsize::new(0);
    let progress = |done: usize, total: usize| {
        let step = done * 20 / total.max(1);
        if reported.fetch_max(step, Ordering::Relaxed) < step {
            eprintln!("progress: {:>3}% ({done}/{total})", step * 5);
        }
    };
    let records = run_experiment(&cfg, &RunOptions { threads, progress: Some(&progress) })?;
    write_atomically(&out, |f| {
        let mut w = io::BufWriter::new(f);
        write_records_csv(&mut w, &records).map_err(|e| Failure::io(&out, e))?;
        w.flush().map_err(|e| Failure::io(&out, e))
    })?;

    let failed = records.iter().filter(|r| !r.is_success()).count();
    eprintln!("wrote {} records ({failed} failed) to {}", records.len(), out.display());
    if let Some(summary_path) = &cfg.output.summary {
        let summary = summarize(&records, &StrataConfig::default())?;
        write_atomically(summary_path, |f| {
            f.write_all(summary.to_json().as_bytes()).map_err(|e| Failure::io(summary_path, e))
        })?;
    }
    Ok(())
}

fn cmd_summarize(records: &Path, out: &Path) -> Result<(), Failure> {
    let file = fs::File::open(records).map_err(|e| Failure::io(records, e))?;
    let recs = read_records_csv(io::BufReader::new(file)).map_err(|e| Failure::io(records, e))?;
    if recs.is_empty() {
        return Err(Failure::new(exit::IO, format!("{}: no records", records.display())));
    }
    let json = summarize(&recs, &StrataConfig::default())?.to_json();
    if out.as_os_str() == "-" {
        let mut stdout = io::stdout().lock();
        writeln!(stdout, "{json}").map_err(|e| Failure::io(out, e))
    } else {
        write_atomically(out, |f| writeln!(f, "{json}").map_err(|e| Failure::io(out, e)))
    }
}

fn cmd_oracle() -> Result<(), Failure> {
    let checks = oracle::run_all();
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    for c in &checks {
        println!("{:<width$}  {}  {}", c.name, if c.passed { "PASS" } else { "FAIL" }, c.detail);
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    if failed == 0 {
        Ok(())
    } else {
        Err(Failure::new(exit::RUNTIME, format!("{failed} oracle check(s) failed")))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { config, out } => cmd_run(config, out.as_deref()),
        Command::Summarize { records, out } => cmd_summarize(records, out),
        Command::Oracle => cmd_oracle(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("censornet: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
