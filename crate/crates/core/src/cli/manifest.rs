//! Output directory bookkeeping: every file written by a command is recorded
//! in `manifest.json` with its SHA-256 digest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MANIFEST: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputEntry {
    pub file: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub artifact: String,
    pub version: String,
    pub command: String,
    pub config_path: String,
    /// SHA-256 of the config file bytes.
    pub config_digest: String,
    pub config: serde_json::Value,
    pub horizon_override: Option<f64>,
    pub threads: usize,
    /// `"pass"`, `"fail"` or `"done"` (commands without a verdict).
    pub status: String,
    pub assumptions: Option<serde_json::Value>,
    pub outputs: Vec<OutputEntry>,
    /// Wall-clock seconds per stage.
    pub timings: BTreeMap<String, f64>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

/// Collects the outputs of one command run.
#[derive(Debug)]
pub struct RunDir {
    dir: PathBuf,
    outputs: Vec<OutputEntry>,
    timings: BTreeMap<String, f64>,
}

impl RunDir {
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        Ok(Self { dir: dir.to_path_buf(), outputs: Vec::new(), timings: BTreeMap::new() })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| io_err(&path, e))?;
        self.outputs.retain(|o| o.file != name);
        self.outputs.push(OutputEntry { file: name.to_string(), sha256: sha256_hex(bytes), bytes: bytes.len() as u64 });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
        text.push('\n');
        self.write_bytes(name, text.as_bytes())
    }

    pub fn write_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).map_err(|e| Error::Io(e.to_string()))?;
        for r in rows {
            w.write_record(r).map_err(|e| Error::Io(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        self.write_bytes(name, &bytes)
    }

    /// Run `f` and record its wall-clock time under `stage`.
    pub fn timed<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let t0 = Instant::now();
        let out = f();
        self.timings.insert(stage.to_string(), t0.elapsed().as_secs_f64());
        out
    }

    /// Write the manifest and check every listed checksum against the disk.
    pub fn finish(self, mut manifest: RunManifest) -> Result<RunManifest> {
        manifest.outputs = self.outputs;
        manifest.outputs.sort_by(|a, b| a.file.cmp(&b.file));
        manifest.timings = self.timings;
        let path = self.dir.join(MANIFEST);
        let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Io(e.to_string()))?;
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| io_err(&path, e))?;
        validate(&self.dir)?;
        Ok(manifest)
    }
}

/// Re-hash every output listed in `dir/manifest.json`.
pub fn validate(dir: &Path) -> Result<RunManifest> {
    let path = dir.join(MANIFEST);
    let text = std::fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
    let m: RunManifest = serde_json::from_str(&text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    for o in &m.outputs {
        let p = dir.join(&o.file);
        let bytes = std::fs::read(&p).map_err(|e| io_err(&p, e))?;
        if sha256_hex(&bytes) != o.sha256 {
            return Err(Error::Io(format!("checksum mismatch for {}", p.display())));
        }
    }
    Ok(m)
}
