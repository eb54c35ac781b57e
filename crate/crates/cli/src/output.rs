//! CSV and key-value report emission plus the run manifest written next to
//! every output file.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::Failure;

/// 17 significant digits, enough to round-trip an f64.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self {
            text: format!("{}\n", header.join(",")),
        }
    }

    pub fn row(&mut self, fields: &[String]) {
        let _ = writeln!(self.text, "{}", fields.join(","));
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

/// Ordered `key = value` lines.
#[derive(Default)]
pub struct Report {
    text: String,
}

impl Report {
    pub fn line(&mut self, key: &str, value: impl std::fmt::Display) {
        let _ = writeln!(self.text, "{key} = {value}");
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

#[derive(Debug, Serialize)]
pub struct RunManifest<'a> {
    pub subcommand: &'a str,
    pub params: serde_json::Value,
    /// SHA-256 of the canonical domain JSON.
    pub domain_digest: String,
    pub domain: &'a str,
    pub version: &'static str,
    pub timestamp: u64,
}

impl<'a> RunManifest<'a> {
    pub fn new(subcommand: &'a str, params: serde_json::Value, domain: &'a str) -> Self {
        let digest = Sha256::digest(domain.as_bytes());
        Self {
            subcommand,
            params,
            domain_digest: digest.iter().map(|b| format!("{b:02x}")).collect(),
            domain,
            version: env!("CARGO_PKG_VERSION"),
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

/// Writes `text` to `out` with its manifest sidecar, or to stdout when no path is given.
pub fn emit(out: Option<&Path>, text: &str, manifest: &RunManifest) -> Result<(), Failure> {
    match out {
        None => {
            print!("{text}");
            Ok(())
        }
        Some(path) => {
            fs::write(path, text).map_err(|e| Failure::io(path, e))?;
            let json = serde_json::to_string_pretty(manifest).expect("manifest serializes");
            let side = manifest_path(path);
            fs::write(&side, json + "\n").map_err(|e| Failure::io(&side, e))
        }
    }
}
