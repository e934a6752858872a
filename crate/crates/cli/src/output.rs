//! CSV tables with `#` header comments, written atomically.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use degobs_core::{Error, Result};

pub const TOOL: &str = concat!("degobs ", env!("CARGO_PKG_VERSION"));

/// One CSV file: column names, rows of preformatted cells, and a line
/// describing what the file checks.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub checks: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, checks: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            checks: checks.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len(), "row width in {}", self.name);
        self.rows.push(row);
    }

    /// Index of column `name`.
    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Serialized file contents.
    pub fn to_bytes(&self, config_hash: &str) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        let _ = writeln!(out, "# {TOOL}");
        let _ = writeln!(out, "# config {config_hash}");
        let _ = writeln!(out, "# checks: {}", self.checks);
        {
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(&mut out);
            w.write_record(&self.columns).map_err(io_error)?;
            for r in &self.rows {
                w.write_record(r).map_err(io_error)?;
            }
            w.flush().map_err(|e| Error::Domain(format!("csv flush: {e}")))?;
        }
        Ok(out)
    }
}

fn io_error(e: impl std::fmt::Display) -> Error {
    Error::Domain(format!("output: {e}"))
}

/// Format a float in its shortest round-trip form.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}

/// Write `contents` to `dir/name` through a temporary file and a rename.
pub fn write_atomic(dir: &Path, name: &str, contents: &[u8]) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(io_error)?;
    let target = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp"));
    let mut f = fs::File::create(&tmp).map_err(io_error)?;
    f.write_all(contents).map_err(io_error)?;
    f.sync_all().map_err(io_error)?;
    fs::rename(&tmp, &target).map_err(io_error)?;
    Ok(target)
}

/// Tracks files written by one run so they can be removed on failure.
#[derive(Debug, Default)]
pub struct OutputSet {
    written: Vec<PathBuf>,
}

impl OutputSet {
    pub fn write_table(&mut self, dir: &Path, table: &Table, config_hash: &str) -> Result<()> {
        let bytes = table.to_bytes(config_hash)?;
        self.written.push(write_atomic(dir, &table.name, &bytes)?);
        Ok(())
    }

    pub fn write_text(&mut self, dir: &Path, name: &str, text: &str) -> Result<()> {
        self.written.push(write_atomic(dir, name, text.as_bytes())?);
        Ok(())
    }

    pub fn paths(&self) -> &[PathBuf] {
        &self.written
    }

    /// Remove everything written so far.
    pub fn discard(&mut self) {
        for p in self.written.drain(..) {
            let _ = fs::remove_file(p);
        }
    }
}
