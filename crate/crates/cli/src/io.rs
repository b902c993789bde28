//! CSV ingestion, run manifests and all-or-nothing output bundles.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use cigraph::spectral::TimeSeries;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Reads an `n × p` numeric CSV. Lines starting with `#` are skipped.
pub fn read_series(path: &Path, has_header: bool) -> CliResult<(TimeSeries, String)> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    let hash = sha256_hex(&bytes);
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(bytes.as_slice());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record
            .map_err(|e| CliError::format(format!("{}: malformed CSV: {e}", path.display())))?;
        let row = record
            .iter()
            .enumerate()
            .map(|(c, cell)| {
                cell.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| {
                        CliError::format(format!(
                            "{}: row {}, column {}: not a finite number: {cell:?}",
                            path.display(),
                            r + 1,
                            c + 1
                        ))
                    })
            })
            .collect::<CliResult<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::format(format!(
            "{}: no data rows",
            path.display()
        )));
    }
    let series = TimeSeries::from_rows(&rows)
        .map_err(|e| CliError::format(format!("{}: {e}", path.display())))?;
    Ok((series, hash))
}

#[derive(Debug, Clone, Serialize)]
pub struct InputRecord {
    pub path: String,
    pub sha256: String,
}

/// Everything needed to trace an output back to how it was produced.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub inputs: Vec<InputRecord>,
    pub config: serde_json::Value,
    /// SHA-256 of each artifact body, keyed by file name.
    pub artifacts: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<BTreeMap<String, f64>>,
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            inputs: Vec::new(),
            config,
            artifacts: BTreeMap::new(),
            timings: None,
        }
    }

    pub fn to_json(&self) -> Vec<u8> {
        let mut v = serde_json::to_vec_pretty(self).expect("manifest serializes");
        v.push(b'\n');
        v
    }

    pub fn hash(&self) -> String {
        sha256_hex(&self.to_json())
    }
}

/// An artifact body, stamped with the manifest hash when written.
pub enum Artifact {
    Csv(String),
    Json(serde_json::Value),
}

/// Files staged in memory and written only once everything succeeded.
pub struct Bundle {
    pub dir: PathBuf,
    pub manifest: RunManifest,
    artifacts: Vec<(String, Artifact)>,
}

impl Bundle {
    pub fn new(dir: &Path, manifest: RunManifest) -> Self {
        Self {
            dir: dir.to_path_buf(),
            manifest,
            artifacts: Vec::new(),
        }
    }

    pub fn add(&mut self, name: &str, artifact: Artifact) {
        let body = match &artifact {
            Artifact::Csv(s) => s.as_bytes().to_vec(),
            Artifact::Json(v) => serde_json::to_vec(v).expect("json serializes"),
        };
        self.manifest
            .artifacts
            .insert(name.into(), sha256_hex(&body));
        self.artifacts.push((name.into(), artifact));
    }

    /// Writes every artifact plus `manifest.json`; returns the manifest hash.
    pub fn write(self) -> CliResult<String> {
        let hash = self.manifest.hash();
        let mut files: Vec<(String, Vec<u8>)> = Vec::new();
        for (name, artifact) in self.artifacts {
            let bytes = match artifact {
                Artifact::Csv(body) => format!("# manifest_sha256={hash}\n{body}").into_bytes(),
                Artifact::Json(mut v) => {
                    if let Some(obj) = v.as_object_mut() {
                        obj.insert("manifest_sha256".into(), hash.clone().into());
                    }
                    let mut b = serde_json::to_vec_pretty(&v).expect("json serializes");
                    b.push(b'\n');
                    b
                }
            };
            files.push((name, bytes));
        }
        files.push(("manifest.json".into(), self.manifest.to_json()));
        fs::create_dir_all(&self.dir).map_err(|e| CliError::io(&self.dir, e))?;
        for (name, bytes) in files {
            let path = self.dir.join(name);
            fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        }
        Ok(hash)
    }
}

pub fn write_stdout_or_file(path: Option<&Path>, body: &str) -> CliResult<()> {
    match path {
        Some(p) => {
            if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
            }
            fs::write(p, body).map_err(|e| CliError::io(p, e))
        }
        None => {
            print!("{body}");
            Ok(())
        }
    }
}
