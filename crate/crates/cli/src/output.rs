//! CSV and JSON manifest writers.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Fields shared by every manifest. `created_unix` is the only
/// non-deterministic entry.
#[derive(Debug, Clone, Serialize)]
pub struct Header {
    pub schema_version: u32,
    pub kind: &'static str,
    pub version: &'static str,
    pub scheme: &'static str,
    pub created_unix: u64,
}

impl Header {
    pub fn new(kind: &'static str) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            kind,
            version: VERSION,
            scheme: qtransition::solver::SCHEME_ID,
            created_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }
}

pub fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

/// Writes a CSV with `header` and one row per entry of `columns`' common
/// length, every value as `{:.16e}`.
pub fn write_csv(path: &Path, header: &[&str], columns: &[&[f64]]) -> Result<()> {
    debug_assert_eq!(header.len(), columns.len());
    let rows = columns.first().map_or(0, |c| c.len());
    debug_assert!(columns.iter().all(|c| c.len() == rows));
    let io = |e: csv::Error| CliError::io(path, e.into());
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(header).map_err(io)?;
    let mut row = Vec::with_capacity(columns.len());
    for i in 0..rows {
        row.clear();
        row.extend(columns.iter().map(|c| format!("{:.16e}", c[i])));
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Manifest {
        path: path.to_path_buf(),
        source: e,
    })?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// The `config` object of any manifest written by this tool.
pub fn read_manifest_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let bad = |source| CliError::Manifest {
        path: path.to_path_buf(),
        source,
    };
    let value: Value = serde_json::from_str(&text).map_err(bad)?;
    match value.get("schema_version").and_then(Value::as_u64) {
        Some(v) if v == u64::from(SCHEMA_VERSION) => {}
        other => {
            return Err(CliError::Config(format!(
                "{}: unsupported schema_version {other:?}",
                path.display()
            )))
        }
    }
    let config = value
        .get("config")
        .cloned()
        .ok_or_else(|| CliError::Config(format!("{}: manifest has no config", path.display())))?;
    serde_json::from_value(config).map_err(bad)
}

pub fn run_dir(root: &Path, epsilon: f64) -> PathBuf {
    root.join(format!("eps_{}", crate::config::label(epsilon)))
}

pub fn snapshot_name(t: f64) -> String {
    format!("snapshot_t{}.csv", crate::config::label(t))
}
