//! Configuration parsing, record files and run manifests.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::experiments::{ExperimentOutput, ExperimentRecord, RunConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::Config(format!("unknown format `{s}` (expected csv or json)"))),
        }
    }
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Parses a JSON run configuration and validates it.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let config: RunConfig = serde_json::from_str(text)
        .map_err(|e| Error::Config(format!("line {}, column {}: {e}", e.line(), e.column())))?;
    config.validate()?;
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// CSV header, in column order.
pub const RECORD_COLUMNS: [&str; 9] =
    ["trial", "checkpoint_T", "sum_F", "count_N", "err_gamma", "err_gamma0", "clt_stat", "seed", "wall_ms"];

pub fn records_bytes(records: &[ExperimentRecord], format: Format) -> Result<Vec<u8>> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            if records.is_empty() {
                w.write_record(RECORD_COLUMNS)?;
            }
            for r in records {
                w.serialize(r)?;
            }
            w.into_inner().map_err(|e| Error::Io(e.into_error()))
        }
        Format::Json => Ok(serde_json::to_vec_pretty(records)?),
    }
}

/// Writes atomically and returns the SHA-256 of the contents.
pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<String> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(sha256_hex(bytes))
}

pub fn write_records(records: &[ExperimentRecord], path: &Path, format: Format) -> Result<String> {
    write_bytes(path, &records_bytes(records, format)?)
}

pub fn read_records(path: &Path) -> Result<Vec<ExperimentRecord>> {
    if path.extension().is_some_and(|e| e == "json") {
        return Ok(serde_json::from_slice(&fs::read(path)?)?);
    }
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

pub type Timestamp = DateTime<Utc>;

pub fn now() -> Timestamp {
    Utc::now()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: RunConfig,
    pub code_version: String,
    pub started: DateTime<Utc>,
    pub finished: DateTime<Utc>,
    pub seed: u64,
    pub calibration: BTreeMap<String, f64>,
    /// File name to SHA-256 digest.
    pub files: BTreeMap<String, String>,
    pub summary: serde_json::Value,
}

pub fn read_manifest(path: &Path) -> Result<RunManifest> {
    Ok(serde_json::from_slice(&fs::read(path)?)?)
}

/// Writes records, failures, pooled coefficients and the summary into `dir`,
/// then the manifest last so a present manifest means a complete run.
pub fn write_run(
    dir: &Path,
    config: &RunConfig,
    output: &ExperimentOutput,
    format: Format,
    started: DateTime<Utc>,
) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let mut files = BTreeMap::new();
    let name = format!("records.{}", format.extension());
    files.insert(name.clone(), write_records(&output.records, &dir.join(&name), format)?);
    if !output.failures.is_empty() {
        let bytes = serde_json::to_vec_pretty(&output.failures)?;
        files.insert("failures.json".into(), write_bytes(&dir.join("failures.json"), &bytes)?);
    }
    if !output.coefficients.is_empty() {
        let bytes = serde_json::to_vec(&output.coefficients)?;
        files.insert("coefficients.json".into(), write_bytes(&dir.join("coefficients.json"), &bytes)?);
    }
    let bytes = serde_json::to_vec_pretty(&output.summary)?;
    files.insert("summary.json".into(), write_bytes(&dir.join("summary.json"), &bytes)?);
    let manifest = RunManifest {
        config: config.clone(),
        code_version: env!("CARGO_PKG_VERSION").into(),
        started,
        finished: Utc::now(),
        seed: config.seed,
        calibration: output.calibration.clone(),
        files,
        summary: output.summary.clone(),
    };
    let path = dir.join("manifest.json");
    write_bytes(&path, &serde_json::to_vec_pretty(&manifest)?)?;
    Ok(path)
}

/// Reads a run directory, refusing it unless the manifest is present and
/// every listed file matches its digest.
pub fn read_run(dir: &Path) -> Result<RunManifest> {
    let manifest = read_manifest(&dir.join("manifest.json"))?;
    for (name, digest) in &manifest.files {
        let actual = sha256_hex(&fs::read(dir.join(name))?);
        if &actual != digest {
            return Err(Error::invalid(format!("{name}: digest mismatch")));
        }
    }
    Ok(manifest)
}
