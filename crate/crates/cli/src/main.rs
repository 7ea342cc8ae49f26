//! `dispersive` — run scenarios, probes and field diagnostics.

mod artifacts;
mod scenario;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dispersive_core::diagnostics::{diagnose_field, probe_estimate};
use dispersive_core::iteration::solve;
use dispersive_core::SolverError;

use crate::artifacts::{read_field_csv, to_canonical_json, write_solve_artifacts, FieldFileError};
use crate::scenario::{Scenario, ScenarioError};

#[derive(Parser)]
#[command(name = "dispersive", version, about = "Paradifferential solver for (∂t + ∂x³) u = F(u, u_x, u_xx)")]
struct Cli {
    /// Worker threads (default: all cores; 1 gives the reproducibility baseline)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the scenario and write solution.csv, trace.jsonl and report.json
    Solve {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the scenario seed
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a randomized probe of one estimate
    Probe {
        #[arg(long)]
        tag: String,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory for probe.json (stdout if omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mizohata integral and norms of a field given as CSV `x,re,im`
    Diagnose {
        field: PathBuf,
        #[arg(long, default_value_t = 4.0)]
        s: f64,
        /// Directory for diagnose.json (stdout if omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the version
    Version,
}

/// Failure with its exit code and the name printed on stderr.
struct Failure {
    code: u8,
    name: &'static str,
    message: String,
}

impl Failure {
    fn io(path: &Path, e: std::io::Error) -> Self {
        Failure { code: 3, name: "IO", message: format!("{}: {e}", path.display()) }
    }

    fn config(message: impl Into<String>) -> Self {
        Failure { code: 4, name: "CONFIG", message: message.into() }
    }
}

impl From<SolverError> for Failure {
    fn from(e: SolverError) -> Self {
        let code = match e {
            SolverError::KSearchExhausted { .. } => 10,
            SolverError::OuterDivergence { .. } => 11,
            SolverError::AdmissionFailed { .. } => 12,
            SolverError::NoContraction { .. } => 13,
            SolverError::UnknownTag(_) | SolverError::InvalidInput(_) => 4,
            _ => 1,
        };
        Failure { code, name: e.code(), message: e.to_string() }
    }
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::Parse(p) => Failure { code: 2, name: "PARSE", message: p.to_string() },
            ScenarioError::Config(m) => Failure::config(m),
        }
    }
}

impl From<FieldFileError> for Failure {
    fn from(e: FieldFileError) -> Self {
        match e {
            FieldFileError::Io(path, e) => Failure::io(&path, e),
            FieldFileError::Parse(m) => Failure { code: 2, name: "PARSE", message: m },
            FieldFileError::Grid(e) => Failure::config(e.to_string()),
        }
    }
}

fn write_or_print(out: Option<&Path>, file: &str, text: &str) -> Result<(), Failure> {
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| Failure::io(dir, e))?;
            let path = dir.join(file);
            std::fs::write(&path, text).map_err(|e| Failure::io(&path, e))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::config("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::config(e.to_string()))?;
    }
    match cli.command {
        Command::Solve { scenario, out, seed } => {
            let text = std::fs::read_to_string(&scenario).map_err(|e| Failure::io(&scenario, e))?;
            let mut sc = Scenario::parse(&text)?;
            if let Some(seed) = seed {
                sc.seed = seed;
            }
            let prepared = sc.prepare()?;
            let solution = solve(&prepared.data, &prepared.nonlinearity, &prepared.config)?;
            write_solve_artifacts(&out, &prepared, &solution).map_err(|(p, e)| Failure::io(&p, e))?;
            let s = &solution.summary;
            eprintln!(
                "k = {}, T = {}, iterations = {}, residual = {:e}",
                s.k, s.t_final, s.iterations, s.residual_relative
            );
            if !s.converged {
                return Err(Failure {
                    code: 14,
                    name: "NOT_CONVERGED",
                    message: format!("outer iteration stopped after {} iterations", s.iterations),
                });
            }
            Ok(())
        }
        Command::Probe { tag, trials, seed, out } => {
            let result = probe_estimate(&tag, trials, seed)?;
            write_or_print(out.as_deref(), "probe.json", &to_canonical_json(&result))
        }
        Command::Diagnose { field, s, out } => {
            let a = read_field_csv(&field)?;
            let report = diagnose_field(&a, s);
            write_or_print(out.as_deref(), "diagnose.json", &to_canonical_json(&report))
        }
        Command::Version => {
            println!("dispersive {}", env!("CARGO_PKG_VERSION"));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}: {}", f.name, f.message);
            ExitCode::from(f.code)
        }
    }
}
