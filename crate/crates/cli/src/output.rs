//! File writers. Every CSV starts with a header naming each column and its
//! unit; numbers use Rust's shortest round-trip formatting so that repeated
//! runs produce identical bytes.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{CliError, CliResult};

pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> CliResult<Self> {
        fs::create_dir_all(root).map_err(|e| CliError::Io {
            path: root.display().to_string(),
            source: e,
        })?;
        Ok(OutDir { root: root.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Writes rows of numbers under `header`.
    pub fn csv<R>(&self, name: &str, header: &[&str], rows: R) -> CliResult<PathBuf>
    where
        R: IntoIterator,
        R::Item: IntoIterator<Item = f64>,
    {
        let path = self.path(name);
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(header)?;
        for row in rows {
            let rec: Vec<String> = row.into_iter().map(fmt_num).collect();
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| CliError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Ok(path)
    }

    /// Writes rows whose cells are already text.
    pub fn csv_text(&self, name: &str, header: &[&str], rows: &[Vec<String>]) -> CliResult<PathBuf> {
        let path = self.path(name);
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush().map_err(|e| CliError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Ok(path)
    }

    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> CliResult<PathBuf> {
        let path = self.path(name);
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| CliError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Ok(path)
    }
}

/// Shortest representation that parses back to the same value; `nan` never
/// appears because callers mask undefined entries.
pub fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else {
        format!("{v:e}")
    }
}
