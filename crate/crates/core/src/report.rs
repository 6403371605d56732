//! Run artifacts: CSV fields, JSON reports, and the run manifest.
//!
//! Every subcommand funnels its files through a [`RunWriter`] so that one
//! manifest per run can record a digest of each artifact. CSV cells carry
//! 17 significant digits, enough to round-trip an f64; JSON reports hold
//! scalars and verdicts. The manifest is the only artifact allowed to
//! mention wall-clock time, which keeps every other output byte-identical
//! across reruns.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// One recorded artifact.
#[derive(Debug, Clone, Serialize)]
pub struct OutputDigest {
    pub file: String,
    pub sha256: String,
}

/// Provenance of a run: what produced the files next to it.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub toolkit_version: String,
    pub subcommand: String,
    /// Raw text of the configuration file, when one was read.
    pub config_snapshot: Option<String>,
    pub wall_time_seconds: f64,
    pub outputs: Vec<OutputDigest>,
}

/// A float as the CSV cell format: scientific, 17 significant digits.
pub fn csv_cell(v: f64) -> String {
    format!("{v:.16e}")
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for byte in digest {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

/// Collects the files of one run under a directory and closes with the
/// manifest. Files are digested from the exact bytes written.
pub struct RunWriter {
    dir: PathBuf,
    manifest_name: String,
    subcommand: String,
    config_snapshot: Option<String>,
    outputs: Vec<OutputDigest>,
    started: Instant,
}

impl RunWriter {
    /// Writer rooted at `dir`, created if missing; the manifest lands
    /// there as `manifest.json`.
    pub fn new(dir: &Path, subcommand: &str, config_snapshot: Option<String>) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        Ok(RunWriter {
            dir: dir.to_path_buf(),
            manifest_name: "manifest.json".into(),
            subcommand: subcommand.into(),
            config_snapshot,
            outputs: Vec::new(),
            started: Instant::now(),
        })
    }

    /// Renames the manifest, for runs whose primary artifact is a single
    /// file rather than a directory.
    pub fn with_manifest_name(mut self, name: &str) -> Self {
        self.manifest_name = name.into();
        self
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn record(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
        }
        fs::write(&path, bytes).map_err(|e| io_err(&path, e))?;
        self.outputs.push(OutputDigest {
            file: name.into(),
            sha256: sha256_hex(bytes),
        });
        Ok(path)
    }

    /// Writes a CSV with a header row; every cell in the fixed cell
    /// format, rows in the given order.
    pub fn write_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<f64>]) -> Result<PathBuf> {
        let mut text = String::new();
        text.push_str(&header.join(","));
        text.push('\n');
        for row in rows {
            if row.len() != header.len() {
                return Err(Error::Io(format!(
                    "{name}: row width {} does not match header width {}",
                    row.len(),
                    header.len()
                )));
            }
            let cells: Vec<String> = row.iter().map(|&v| csv_cell(v)).collect();
            text.push_str(&cells.join(","));
            text.push('\n');
        }
        self.record(name, text.as_bytes())
    }

    /// Writes a pretty-printed JSON document with a trailing newline.
    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| Error::Io(format!("{name}: {e}")))?;
        text.push('\n');
        self.record(name, text.as_bytes())
    }

    /// Writes the manifest and returns its path. The manifest digests
    /// every file written so far and is itself not digested.
    pub fn finish(self) -> Result<PathBuf> {
        let manifest = RunManifest {
            toolkit_version: env!("CARGO_PKG_VERSION").into(),
            subcommand: self.subcommand.clone(),
            config_snapshot: self.config_snapshot.clone(),
            wall_time_seconds: self.started.elapsed().as_secs_f64(),
            outputs: self.outputs.clone(),
        };
        let mut text = serde_json::to_string_pretty(&manifest)
            .map_err(|e| Error::Io(format!("manifest: {e}")))?;
        text.push('\n');
        let path = self.dir.join(&self.manifest_name);
        fs::write(&path, text.as_bytes()).map_err(|e| io_err(&path, e))?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scratch(tag: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("degenlap-report-{tag}-{}", std::process::id()));
        let _ = fs::remove_dir_all(&dir);
        dir
    }

    #[test]
    fn csv_cells_round_trip() {
        for v in [0.0, 1.0 / 3.0, -2.5e-17, 6.02214076e23, f64::MIN_POSITIVE] {
            let cell = csv_cell(v);
            let back: f64 = cell.parse().unwrap();
            assert_eq!(back, v, "{cell}");
        }
        assert_eq!(csv_cell(0.125), "1.2500000000000000e-1");
    }

    #[test]
    fn manifest_digests_match_files() {
        let dir = scratch("digest");
        let mut w = RunWriter::new(&dir, "resolvent", Some("p = 2.0".into())).unwrap();
        w.write_csv("field.csv", &["x", "w"], &[vec![0.0, 0.0], vec![0.5, 0.125]])
            .unwrap();
        w.write_json("report.json", &serde_json::json!({ "sup": 0.125 }))
            .unwrap();
        let manifest_path = w.finish().unwrap();

        let manifest: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(&manifest_path).unwrap()).unwrap();
        assert_eq!(manifest["subcommand"], "resolvent");
        assert_eq!(manifest["config_snapshot"], "p = 2.0");
        let outputs = manifest["outputs"].as_array().unwrap();
        assert_eq!(outputs.len(), 2);
        for entry in outputs {
            let bytes = fs::read(dir.join(entry["file"].as_str().unwrap())).unwrap();
            assert_eq!(entry["sha256"].as_str().unwrap(), sha256_hex(&bytes));
        }
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn reruns_are_byte_identical_except_manifest() {
        let rows = vec![vec![1.0 / 3.0, 2.0 / 7.0]];
        let mut texts = Vec::new();
        for tag in ["a", "b"] {
            let dir = scratch(tag);
            let mut w = RunWriter::new(&dir, "psi", None).unwrap();
            let path = w.write_csv("psi.csv", &["y", "psi"], &rows).unwrap();
            w.finish().unwrap();
            texts.push(fs::read(path).unwrap());
            fs::remove_dir_all(&dir).unwrap();
        }
        assert_eq!(texts[0], texts[1]);
    }

    #[test]
    fn ragged_rows_are_refused() {
        let dir = scratch("ragged");
        let mut w = RunWriter::new(&dir, "psi", None).unwrap();
        let err = w
            .write_csv("psi.csv", &["y", "psi"], &[vec![1.0]])
            .unwrap_err();
        assert!(matches!(err, Error::Io(_)));
        let _ = fs::remove_dir_all(&dir);
    }
}
