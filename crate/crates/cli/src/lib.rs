//! Scenario-driven runner for the `cvclone` simulator.
//!
//! [`run`] takes parsed arguments, merges them with an optional scenario
//! file, executes the command and returns the process exit code: 0 on
//! success, 1 when a verification fails, 2 on a usage error.

pub mod args;
pub mod commands;
pub mod mc;
pub mod scenario;
pub mod table;
pub mod verify;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use args::Cli;
use commands::{Run, Sampling};
use scenario::{Command, Entries, Scenario};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Model(#[from] cvclone::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            // the model only rejects inputs the scenario layer let through
            CliError::Usage(_) | CliError::Model(_) => 2,
            CliError::Io { .. } => 1,
        }
    }
}

fn io_error(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Directory used by `verify` when `--output` is absent.
pub const DEFAULT_VERIFY_DIR: &str = "verify-artifacts";

pub fn scenario_from_cli(cli: &Cli) -> Result<Scenario, CliError> {
    let file = match &cli.scenario {
        Some(path) => scenario::parse_file(&fs::read_to_string(path).map_err(io_error(path)).map_err(|e| {
            CliError::Usage(format!("cannot read scenario file: {e}"))
        })?)?,
        None => Entries::new(),
    };
    let (command, flags) = cli.flag_entries();
    scenario::build(command, &flags, file)
}

pub fn execute(s: &Scenario) -> Result<Run, CliError> {
    let mc = Sampling {
        shots: s.samples.unwrap_or(0),
        seed: s.seed,
    };
    match &s.command {
        Command::Clone(spec) => commands::clone(spec, s.n0, mc),
        Command::Teleport(spec) => commands::teleport(spec, s.n0, mc),
        Command::Attack(spec) => commands::attack(spec, s.n0, mc),
        Command::Conditional { r, eta } => commands::conditional(*r, *eta, s.n0, mc),
        Command::Scan(spec) => commands::scan(spec, s.n0, mc),
        Command::Verify => {
            let v = verify::verify(s.seed, s.samples.unwrap_or(verify::DEFAULT_SHOTS), s.n0)?;
            Ok(Run {
                summary: v.summary(),
                passed: v.passed(),
                tables: v.artifacts,
            })
        }
    }
}

/// Writes the summary to `out` and the tables to `--output` or, failing
/// that, after the summary. `verify` always writes one file per table.
pub fn emit<W: Write>(s: &Scenario, run: &Run, mut out: W) -> Result<(), CliError> {
    let stdout = Path::new("<stdout>");
    let is_verify = matches!(s.command, Command::Verify);
    for line in &run.summary {
        writeln!(out, "{line}").map_err(io_error(stdout))?;
    }
    if is_verify {
        let dir = s.output.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_VERIFY_DIR));
        fs::create_dir_all(&dir).map_err(io_error(&dir))?;
        for (name, table) in &run.tables {
            let path = dir.join(format!("{name}.csv"));
            fs::write(&path, table.to_csv()).map_err(io_error(&path))?;
        }
        writeln!(out, "artifacts written to {}", dir.display()).map_err(io_error(stdout))?;
        return Ok(());
    }
    let (_, table) = run.tables.first().expect("every command produces a table");
    match &s.output {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent).map_err(io_error(parent))?;
            }
            fs::write(path, table.to_csv()).map_err(io_error(path))?;
        }
        None => {
            writeln!(out).map_err(io_error(stdout))?;
            table.write_to(&mut out).map_err(io_error(stdout))?;
        }
    }
    Ok(())
}

pub fn run(cli: &Cli) -> i32 {
    let result = scenario_from_cli(cli).and_then(|s| {
        for w in &s.warnings {
            eprintln!("warning: {w}");
        }
        let run = execute(&s)?;
        emit(&s, &run, io::stdout().lock())?;
        Ok(run.passed)
    });
    match result {
        Ok(true) => 0,
        Ok(false) => 1,
        // the reader went away (`| head`): nothing left to report to
        Err(CliError::Io { ref source, .. }) if source.kind() == io::ErrorKind::BrokenPipe => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
