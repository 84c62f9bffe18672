//! Output files. Every CSV row and JSON report carries the effective
//! configuration hash and the tool version. Nothing time- or host-dependent
//! is written, so repeated runs produce identical bytes.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::{CliError, TOOL_VERSION};

/// Destination directory plus the stamp written into every file.
#[derive(Debug, Clone)]
pub struct OutputDir {
    pub dir: PathBuf,
    pub config_hash: String,
}

#[derive(Serialize)]
struct Stamp<'a> {
    config_hash: &'a str,
    tool_version: &'a str,
}

/// JSON report with the common header fields first.
#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    command: &'a str,
    config_hash: &'a str,
    tool_version: &'a str,
    #[serde(flatten)]
    body: &'a T,
}

pub fn io_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

impl OutputDir {
    pub fn create(dir: impl Into<PathBuf>, config_hash: String) -> Result<Self, CliError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| io_error(&dir, e))?;
        Ok(Self { dir, config_hash })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write_text(&self, name: &str, text: &str) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        fs::write(&path, text).map_err(|e| io_error(&path, e))?;
        Ok(path)
    }

    /// RFC 4180 CSV with a header row; columns follow the field order of `T`
    /// and end with `config_hash,tool_version`.
    pub fn write_csv<T: Serialize>(&self, name: &str, rows: &[T]) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        let mut w = csv::Writer::from_path(&path).map_err(|e| io_error(&path, e))?;
        for row in rows {
            let stamp = Stamp {
                config_hash: &self.config_hash,
                tool_version: TOOL_VERSION,
            };
            w.serialize((row, stamp))
            .map_err(|e| io_error(&path, e))?;
        }
        w.flush().map_err(|e| io_error(&path, e))?;
        Ok(path)
    }

    pub fn write_report<T: Serialize>(&self, name: &str, command: &str, body: &T) -> Result<PathBuf, CliError> {
        let text = report_json(command, &self.config_hash, body)?;
        self.write_text(name, &text)
    }
}

pub fn report_json<T: Serialize>(command: &str, config_hash: &str, body: &T) -> Result<String, CliError> {
    let env = Envelope {
        command,
        config_hash,
        tool_version: TOOL_VERSION,
        body,
    };
    let mut text = serde_json::to_string_pretty(&env).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

/// Rewrites a CSV file as whitespace-separated columns with a `#` header,
/// for gnuplot. Columns that do not parse as numbers are dropped.
pub fn csv_to_columns(input: &Path, output: &Path) -> Result<(), CliError> {
    let mut r = csv::Reader::from_path(input).map_err(|e| io_error(input, e))?;
    let headers = r.headers().map_err(|e| io_error(input, e))?.clone();
    let rows: Vec<csv::StringRecord> = r
        .records()
        .collect::<Result<_, _>>()
        .map_err(|e| io_error(input, e))?;
    let numeric: Vec<usize> = (0..headers.len())
        .filter(|&j| rows.iter().all(|row| row.get(j).is_some_and(|s| s.parse::<f64>().is_ok())))
        .collect();
    let mut out = String::new();
    out.push('#');
    for &j in &numeric {
        out.push(' ');
        out.push_str(&headers[j]);
    }
    out.push('\n');
    for row in &rows {
        let line: Vec<&str> = numeric.iter().map(|&j| &row[j]).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    let mut f = fs::File::create(output).map_err(|e| io_error(output, e))?;
    f.write_all(out.as_bytes()).map_err(|e| io_error(output, e))?;
    Ok(())
}
