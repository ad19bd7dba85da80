//! Artifact writing: delimited tables, JSON documents and the manifest.
//!
//! Floats are printed with Rust's shortest round-trip formatting, so the
//! files parse back to the exact values and are byte-stable across runs.
//! Wall-clock timings are kept in `timing.json`, which is not checksummed.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::CliError;

pub const MANIFEST: &str = "manifest.json";
pub const TIMING: &str = "timing.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub config: RunConfig,
    pub files: Vec<FileEntry>,
}

/// Collects the files of one command run in an output directory.
pub struct OutputDir {
    root: PathBuf,
    files: Vec<FileEntry>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn write_raw(&self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.root.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::io(path, e))
    }

    /// Writes a checksummed artifact.
    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        self.write_raw(name, contents.as_bytes())?;
        self.files.push(FileEntry {
            name: name.to_string(),
            bytes: contents.len() as u64,
            sha256: sha256_hex(contents.as_bytes()),
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        self.write(name, &to_json(value)?)
    }

    /// Writes the timing file, which is excluded from the manifest.
    pub fn write_timing<T: Serialize>(&self, value: &T) -> Result<(), CliError> {
        self.write_raw(TIMING, to_json(value)?.as_bytes())
    }

    /// Writes `manifest.json` listing every checksummed artifact.
    pub fn finish(self, command: &str, config: &RunConfig) -> Result<RunManifest, CliError> {
        let manifest = RunManifest {
            command: command.to_string(),
            version: version_string(),
            config: config.clone(),
            files: self.files.clone(),
        };
        self.write_raw(MANIFEST, to_json(&manifest)?.as_bytes())?;
        Ok(manifest)
    }
}

pub fn version_string() -> String {
    format!("maxplus {}", env!("CARGO_PKG_VERSION"))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Config(format!("cannot serialize output: {e}")))?;
    s.push('\n');
    Ok(s)
}

/// Comma-separated table with a header row.
pub struct Table {
    text: String,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Table { text }
    }

    pub fn row(&mut self, cells: &[String]) {
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

/// Shortest round-trip decimal.
pub fn num(v: f64) -> String {
    let mut s = String::new();
    write!(s, "{v:?}").expect("writing to a String cannot fail");
    s
}

/// Checks every file listed in a manifest against its checksum.
pub fn verify_manifest(dir: &Path) -> Result<Vec<String>, CliError> {
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("bad manifest: {e}")))?;
    let mut problems = Vec::new();
    for entry in value["files"].as_array().into_iter().flatten() {
        let name = entry["name"].as_str().unwrap_or_default();
        match fs::read(dir.join(name)) {
            Ok(bytes) if entry["sha256"].as_str() == Some(sha256_hex(&bytes).as_str()) => {}
            Ok(_) => problems.push(format!("{name}: checksum mismatch")),
            Err(e) => problems.push(format!("{name}: {e}")),
        }
    }
    Ok(problems)
}
