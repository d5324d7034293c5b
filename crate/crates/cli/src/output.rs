//! CSV and report writers with a provenance comment line.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// SHA-256 of the resolved configuration, excluding the output directory.
pub fn config_hash(config: &RunConfig) -> String {
    let mut c = config.clone();
    c.output.dir = PathBuf::new();
    hex::encode(Sha256::digest(format!("{c:?}").as_bytes()))
}

pub fn provenance(hash: &str) -> String {
    format!("# pcqc {VERSION} config-sha256={hash}")
}

/// 12 significant digits.
pub fn num(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.11e}")
}

pub struct Csv {
    text: String,
    columns: usize,
}

impl Csv {
    pub fn new(hash: &str, header: &[&str]) -> Self {
        let mut text = provenance(hash);
        text.push('\n');
        text.push_str(&header.join(","));
        text.push('\n');
        Self {
            text,
            columns: header.len(),
        }
    }

    pub fn row(&mut self, cells: &[String]) {
        debug_assert_eq!(cells.len(), self.columns);
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn numbers(&mut self, values: &[f64]) {
        let cells: Vec<String> = values.iter().map(|&v| num(v)).collect();
        self.row(&cells);
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn write(&self, dir: &Path, name: &str) -> Result<PathBuf, CliError> {
        write_file(dir, name, &self.text)
    }
}

pub fn write_file(dir: &Path, name: &str, text: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let path = dir.join(name);
    fs::write(&path, text).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

/// Plain-text `key = value` report grouped under headings.
#[derive(Debug, Default, Clone)]
pub struct Report {
    text: String,
}

impl Report {
    pub fn new(hash: &str, warnings: &[String]) -> Self {
        let mut text = provenance(hash);
        text.push('\n');
        for w in warnings {
            let _ = writeln!(text, "# warning: {w}");
        }
        Self { text }
    }

    pub fn section(&mut self, title: &str) {
        let _ = writeln!(self.text, "\n[{title}]");
    }

    pub fn value(&mut self, key: &str, v: f64) {
        let _ = writeln!(self.text, "{key} = {}", num(v));
    }

    pub fn line(&mut self, key: &str, v: impl std::fmt::Display) {
        let _ = writeln!(self.text, "{key} = {v}");
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}
