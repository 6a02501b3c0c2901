use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde_json::Value;

use crate::manifest::{write_atomic, RunManifest};

/// RFC 4180 CSV with LF line ends.
pub fn csv_bytes<S: AsRef<str>>(header: &[&str], rows: &[Vec<S>]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r.iter().map(AsRef::as_ref))?;
    }
    Ok(w.into_inner().map_err(|e| e.into_error())?)
}

pub fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

pub fn write_file(dir: &Path, rel: &str, bytes: &[u8], manifest: &mut RunManifest) -> Result<()> {
    write_atomic(&dir.join(rel), bytes)?;
    manifest.output(dir, rel)
}

pub fn write_csv<S: AsRef<str>>(
    dir: &Path,
    rel: &str,
    header: &[&str],
    rows: &[Vec<S>],
    manifest: &mut RunManifest,
) -> Result<()> {
    write_file(dir, rel, &csv_bytes(header, rows)?, manifest)
}

pub fn write_json(dir: &Path, rel: &str, value: &Value, manifest: &mut RunManifest) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_file(dir, rel, text.as_bytes(), manifest)
}
