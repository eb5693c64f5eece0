//! Artifact output: CSV data files, JSON reports, and a manifest listing
//! every artifact with its content hash. CSV floats use the shortest decimal
//! that round-trips, so identical inputs produce byte-identical data files.

use std::fs;
use std::path::PathBuf;

use serde_json::json;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub struct ArtifactWriter {
    dir: PathBuf,
    entries: Vec<(String, String, usize)>,
}

impl ArtifactWriter {
    pub fn new(dir: PathBuf) -> Result<Self, CliError> {
        fs::create_dir_all(&dir)?;
        Ok(ArtifactWriter { dir, entries: Vec::new() })
    }

    fn put(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let digest = Sha256::digest(bytes);
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        fs::write(self.dir.join(name), bytes)?;
        self.entries.push((name.to_string(), hex, bytes.len()));
        Ok(())
    }

    /// Write a CSV artifact; `rows` appends complete lines (without newlines).
    pub fn csv<I>(&mut self, name: &str, header: &str, rows: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = String>,
    {
        let mut text = String::from(header);
        text.push('\n');
        for row in rows {
            text.push_str(&row);
            text.push('\n');
        }
        self.put(name, text.as_bytes())
    }

    pub fn json(&mut self, name: &str, value: &serde_json::Value) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
        text.push('\n');
        self.put(name, text.as_bytes())
    }

    /// Write the manifest and return the artifact directory.
    pub fn finish(mut self, command: &str, model: &str, verdict: &str) -> Result<PathBuf, CliError> {
        let listed: Vec<_> = self
            .entries
            .iter()
            .map(|(name, sha256, bytes)| json!({ "name": name, "sha256": sha256, "bytes": bytes }))
            .collect();
        let manifest = json!({
            "command": command,
            "model": model,
            "verdict": verdict,
            "artifacts": listed,
        });
        self.json("manifest.json", &manifest)?;
        Ok(self.dir)
    }
}

/// Shortest round-trip decimal for a float (the `Display` form of f64).
pub fn fmt(x: f64) -> String {
    format!("{x}")
}
