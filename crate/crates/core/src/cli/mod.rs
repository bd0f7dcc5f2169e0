//! Configuration-driven campaigns: `dmverify run` and `dmverify suites`.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde::Serialize;
use thiserror::Error;

use crate::integrate::functions::{BUILTINS, SUITES};

pub mod config;
pub mod report;
pub mod runner;

pub use config::{Case, CaseConfig, CaseKind, RunConfig};
pub use report::{ReportRecord, Tally};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_ERRORS: i32 = 4;

pub const SEED_ENV: &str = "DMVERIFY_SEED";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config field {field}: {message}")]
    Invalid { field: String, message: String },
    #[error("cannot write report: {0}")]
    Output(#[from] io::Error),
}

#[derive(Debug, Parser)]
#[command(name = "dmverify", version, about = "Numerical checks of continuous Dyson-Maleev integral identities")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every case of a config file.
    Run {
        config: PathBuf,
        /// Master seed; overrides the config and DMVERIFY_SEED.
        #[arg(long)]
        seed: Option<u64>,
        /// Report path; overrides `output` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; results do not depend on this.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// List built-in functions, suites and presets.
    Suites {
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub config: &'static str,
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "aiii-scalar",
        description: "AIII(1,1) compact, mixed suite, quadrature on both sides",
        config: "configs/scalar-aiii.cfg",
    },
    Preset {
        name: "ci-n1",
        description: "CI N=1, both signs, quadrature",
        config: "configs/ci-n1.cfg",
    },
    Preset {
        name: "diii-n2",
        description: "DIII N=2, both signs, quadrature",
        config: "configs/diii-n2.cfg",
    },
    Preset {
        name: "boundary-grid",
        description: "boundary volume-form grid over all families and signs",
        config: "configs/boundary-grid.cfg",
    },
    Preset {
        name: "radius-sweep",
        description: "AIII(1,1) and AIII(2,1) compact flat side on shrinking balls",
        config: "configs/radius-sweep.cfg",
    },
    Preset {
        name: "spin-probe",
        description: "scalar spin identity at S = 1/2, 1, 3/2, 2",
        config: "configs/spin-probe.cfg",
    },
];

#[derive(Serialize)]
struct Catalogue {
    functions: Vec<FunctionEntry>,
    suites: Vec<SuiteEntry>,
    presets: Vec<Preset>,
}

#[derive(Serialize)]
struct FunctionEntry {
    name: &'static str,
    formula: &'static str,
}

#[derive(Serialize)]
struct SuiteEntry {
    name: &'static str,
    functions: Vec<&'static str>,
}

fn catalogue() -> Catalogue {
    Catalogue {
        functions: BUILTINS
            .iter()
            .map(|&(name, formula)| FunctionEntry { name, formula })
            .collect(),
        suites: SUITES
            .iter()
            .map(|&(name, fs)| SuiteEntry {
                name,
                functions: fs.to_vec(),
            })
            .collect(),
        presets: PRESETS.to_vec(),
    }
}

pub fn list_suites(out: &mut dyn Write, json: bool) -> io::Result<()> {
    let cat = catalogue();
    if json {
        serde_json::to_writer_pretty(&mut *out, &cat)?;
        return writeln!(out);
    }
    writeln!(out, "functions:")?;
    for f in &cat.functions {
        writeln!(out, "  {:<16} {}", f.name, f.formula)?;
    }
    writeln!(out, "suites:")?;
    for s in &cat.suites {
        writeln!(out, "  {:<16} {}", s.name, s.functions.join(", "))?;
    }
    writeln!(out, "presets:")?;
    for p in &cat.presets {
        writeln!(out, "  {:<16} {} ({})", p.name, p.description, p.config)?;
    }
    Ok(())
}

/// Exit code from the row verdicts.
pub fn exit_code(rows: &[ReportRecord], max_error_fraction: f64) -> i32 {
    let t = Tally::of(rows);
    if t.total() > 0 && t.error as f64 > max_error_fraction * t.total() as f64 {
        EXIT_ERRORS
    } else if t.pass == t.total() {
        EXIT_OK
    } else {
        EXIT_FAIL
    }
}

fn resolve_seed(flag: Option<u64>, config_seed: u64) -> Result<u64, CliError> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| CliError::Invalid {
            field: SEED_ENV.into(),
            message: format!("`{v}` is not a 64-bit unsigned integer"),
        }),
        Err(_) => Ok(config_seed),
    }
}

fn run(config_path: PathBuf, seed: Option<u64>, out: Option<PathBuf>, workers: Option<usize>) -> Result<i32, CliError> {
    let config = RunConfig::load(&config_path)?;
    let cases = config.validate()?;
    let master_seed = resolve_seed(seed, config.seed)?;
    if workers == Some(0) {
        return Err(CliError::Invalid {
            field: "--workers".into(),
            message: "must be positive".into(),
        });
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Invalid {
            field: "--workers".into(),
            message: e.to_string(),
        })?;
    let results = pool.install(|| runner::run_cases(&config, &cases, master_seed));
    let rows: Vec<ReportRecord> = results.iter().flat_map(|(_, r)| r.iter().cloned()).collect();
    let code = exit_code(&rows, config.tolerance.max_error_fraction);

    match out.or_else(|| config.output.clone()) {
        Some(path) => {
            let file = File::create(&path).map_err(|e| CliError::Io {
                path: path.clone(),
                message: e.to_string(),
            })?;
            report::write_rows(&mut BufWriter::new(file), &rows)?;
            report::write_summary(&mut io::stdout().lock(), &results, code)?;
        }
        None => {
            report::write_rows(&mut io::stdout().lock(), &rows)?;
            report::write_summary(&mut io::stderr().lock(), &results, code)?;
        }
    }
    Ok(code)
}

/// Entry point shared by the binary and the tests; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match cli.command {
        Command::Suites { json } => match list_suites(&mut io::stdout().lock(), json) {
            Ok(()) => EXIT_OK,
            Err(e) => {
                eprintln!("dmverify: {e}");
                EXIT_CONFIG
            }
        },
        Command::Run {
            config,
            seed,
            out,
            workers,
        } => match run(config, seed, out, workers) {
            Ok(code) => code,
            Err(e) => {
                eprintln!("dmverify: {e}");
                EXIT_CONFIG
            }
        },
    }
}
