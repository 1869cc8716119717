//! CSV and JSON emission with deterministic formatting.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::{Error, Result};

/// Full-double-precision decimal rendering (17 significant digits).
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// RFC-4180-style CSV: header row, comma separator, '.' decimals.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w =
        csv::Writer::from_path(path).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    w.write_record(header)
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    for row in rows {
        w.write_record(row)
            .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    }
    w.flush()?;
    Ok(())
}

/// One named pass/fail check; any failure flips the exit code to 3.
#[derive(Clone, Debug, Serialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Assertion {
    pub fn check(name: &str, passed: bool, detail: String) -> Self {
        Assertion {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

/// JSON run summary. Serialized with sorted object keys, so identical
/// config and seed give byte-identical files.
#[derive(Debug, Serialize)]
pub struct Summary {
    pub experiment: String,
    pub engine: String,
    pub seed: Option<u64>,
    /// Echo of every consumed parameter, defaults resolved.
    pub config: serde_json::Value,
    /// FNV-1a 64 fingerprint of experiment, engine, seed, and config.
    pub config_fingerprint: String,
    /// Files written by this run, relative to the output directory.
    pub outputs: Vec<String>,
    pub results: serde_json::Value,
    pub assertions: Vec<Assertion>,
}

/// FNV-1a 64-bit over a canonical rendering of the run identity.
pub fn fingerprint(experiment: &str, engine: &str, seed: Option<u64>, config: &serde_json::Value) -> String {
    let canonical = format!("{experiment}\u{1f}{engine}\u{1f}{seed:?}\u{1f}{config}");
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in canonical.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{h:016x}")
}

/// Serialize a config struct into a JSON value for echoing/fingerprints.
pub fn config_value<T: Serialize>(config: &T) -> Result<serde_json::Value> {
    serde_json::to_value(config)
        .map_err(|e| Error::ConfigInvalid(format!("config not serializable: {e}")))
}

pub fn write_summary(dir: &Path, summary: &Summary) -> Result<PathBuf> {
    let path = dir.join(format!("{}_summary.json", summary.experiment));
    let body = serde_json::to_string_pretty(summary)
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    fs::write(&path, body + "\n")?;
    Ok(path)
}
