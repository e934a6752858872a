//! Batch runner for the degenerate-operator experiments: configuration,
//! experiment dispatch and CSV emission.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod output;
pub mod runners;

use std::path::PathBuf;

use degobs_core::{Error, ErrorCategory, Result};

use config::{Experiment, ExperimentConfig};
use output::{OutputSet, Table};

/// A subcommand: one experiment or all of them.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    One(Experiment),
    All,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::One(e) => e.name(),
            Command::All => "all",
        }
    }

    fn experiments(&self) -> Vec<Experiment> {
        match self {
            Command::One(e) => vec![*e],
            Command::All => Experiment::ALL.to_vec(),
        }
    }
}

/// Process exit status for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e.category() {
        ErrorCategory::Validation => 1,
        ErrorCategory::Invariant => 2,
        ErrorCategory::Precision => 3,
    }
}

/// The single-line machine-readable form of an error.
pub fn error_line(e: &Error) -> String {
    let category = match e.category() {
        ErrorCategory::Validation => "validation",
        ErrorCategory::Invariant => "invariant",
        ErrorCategory::Precision => "precision",
    };
    let message = e.to_string().replace('\\', "\\\\").replace('"', "\\\"").replace('\n', " ");
    format!("error kind={} category={category} message=\"{message}\"", e.kind())
}

/// Compute every table of `command` without touching the filesystem.
pub fn compute(command: Command, cfg: &ExperimentConfig) -> Result<Vec<Table>> {
    let resolved = command.experiments().into_iter().map(|e| cfg.resolve(e).map(|r| (e, r))).collect::<Result<Vec<_>>>()?;
    let mut tables = Vec::new();
    for (e, r) in &resolved {
        tables.extend(runners::run(*e, r)?);
    }
    Ok(tables)
}

/// Plain-text index of the emitted files.
pub fn summary(command: Command, hash: &str, tables: &[Table]) -> String {
    let mut s = format!("{}\ncommand {}\nconfig {hash}\n\n", output::TOOL, command.name());
    for t in tables {
        s.push_str(&format!("{:<20} {:>6} rows  {}\n", t.name, t.rows.len(), t.checks));
    }
    s
}

/// Run `command` and write its outputs; on failure nothing is left behind.
pub fn run(command: Command, cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let hash = cfg.hash(command.name());
    let dir = cfg.out_dir();
    let tables = compute(command, cfg)?;
    let mut out = OutputSet::default();
    let written = (|| {
        for t in &tables {
            out.write_table(&dir, t, &hash)?;
        }
        if command == Command::All {
            out.write_text(&dir, "summary.txt", &summary(command, &hash, &tables))?;
        }
        Ok::<(), Error>(())
    })();
    if let Err(e) = written {
        out.discard();
        return Err(e);
    }
    Ok(out.paths().to_vec())
}
