use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    pub name: String,
    pub sha256: String,
}

/// What a run read, how it was configured and what it wrote.
///
/// Paths are recorded relative to the output directory and inputs by name
/// only, so two runs on the same data in different places agree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub inputs: Vec<Artifact>,
    pub parameters: Value,
    pub outputs: Vec<Artifact>,
}

impl RunManifest {
    pub fn new(command: &str, parameters: Value) -> Self {
        Self {
            tool: "odscope".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            inputs: Vec::new(),
            parameters,
            outputs: Vec::new(),
        }
    }

    pub fn input(&mut self, name: impl Into<String>, sha256: String) {
        self.inputs.push(Artifact {
            name: name.into(),
            sha256,
        });
    }

    /// Records `dir/rel` as an output, replacing any earlier entry.
    pub fn output(&mut self, dir: &Path, rel: &str) -> Result<()> {
        let sha256 = file_digest(&dir.join(rel))?;
        self.outputs.retain(|a| a.name != rel);
        self.outputs.push(Artifact {
            name: rel.to_string(),
            sha256,
        });
        Ok(())
    }

    pub fn output_digest(&self, rel: &str) -> Option<&str> {
        self.outputs.iter().find(|a| a.name == rel).map(|a| a.sha256.as_str())
    }

    pub fn write(&mut self, dir: &Path) -> Result<()> {
        self.outputs.sort_by(|a, b| a.name.cmp(&b.name));
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        write_atomic(&dir.join(MANIFEST_FILE), text.as_bytes())
    }

    pub fn read(dir: &Path) -> Result<Option<Self>> {
        let path = dir.join(MANIFEST_FILE);
        if !path.exists() {
            return Ok(None);
        }
        let text = fs::read_to_string(&path).with_context(|| format!("cannot read {}", path.display()))?;
        let m = serde_json::from_str(&text).with_context(|| format!("{} is not a run manifest", path.display()))?;
        Ok(Some(m))
    }
}

pub fn bytes_digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_digest(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    Ok(bytes_digest(&bytes))
}

/// Digest of a feed: the file itself for an archive, otherwise the sorted
/// `name digest` lines of the directory's `.txt` tables.
pub fn feed_digest(path: &Path) -> Result<String> {
    if !path.is_dir() {
        return file_digest(path);
    }
    let mut lines = String::new();
    for name in txt_tables(path)? {
        lines.push_str(&format!("{name} {}\n", file_digest(&path.join(&name))?));
    }
    Ok(bytes_digest(lines.as_bytes()))
}

/// Sorted names of the `.txt` files directly inside `dir`.
pub fn txt_tables(dir: &Path) -> Result<Vec<String>> {
    let mut names = Vec::new();
    for entry in fs::read_dir(dir).with_context(|| format!("cannot list {}", dir.display()))? {
        let entry = entry?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if entry.file_type()?.is_file() && name.ends_with(".txt") {
            names.push(name);
        }
    }
    names.sort();
    Ok(names)
}

/// Writes through a temporary sibling so an interrupted run never leaves a
/// truncated file under the final name.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).with_context(|| format!("cannot write {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("cannot write {}", path.display()))
}

/// Last path component, used to name inputs without leaking locations.
pub fn base_name(path: &Path) -> String {
    path.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}
