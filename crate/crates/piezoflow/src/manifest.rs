//! Run manifests: every output directory gets exactly one `manifest.txt`
//! naming the tool version, a hash of the config that produced the outputs,
//! the governing seed, the solver mode, and the full file inventory. Numbers
//! live in the referenced files, never in the manifest, so reruns of the same
//! config produce byte-identical numerical outputs even though the manifest
//! timestamp differs.

use crate::error::Result;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

/// FNV-1a over the raw config text: a stable, dependency-free fingerprint.
pub fn config_hash(text: &str) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for byte in text.bytes() {
        hash ^= byte as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

#[derive(Debug, Clone)]
pub struct RunManifest {
    pub tool_version: &'static str,
    pub config_hash: u64,
    pub seed: u64,
    pub theorem_mode: bool,
    pub created_unix: u64,
    outputs: Vec<(String, PathBuf)>,
}

impl RunManifest {
    pub fn new(config_text: &str, seed: u64, theorem_mode: bool) -> Self {
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION"),
            config_hash: config_hash(config_text),
            seed,
            theorem_mode,
            created_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            outputs: Vec::new(),
        }
    }

    /// Registers an output file under a short kind label ("ledger", "snapshot").
    pub fn add_output(&mut self, kind: &str, path: &Path) {
        self.outputs.push((kind.to_string(), path.to_path_buf()));
    }

    pub fn outputs(&self) -> &[(String, PathBuf)] {
        &self.outputs
    }

    /// Writes `manifest.txt` into `dir` and returns its path.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let mut text = String::new();
        let _ = writeln!(text, "tool_version = {}", self.tool_version);
        let _ = writeln!(text, "config_hash = {:016x}", self.config_hash);
        let _ = writeln!(text, "seed = {}", self.seed);
        let _ = writeln!(
            text,
            "mode = {}",
            if self.theorem_mode { "theorem" } else { "exploratory" }
        );
        let _ = writeln!(text, "created_unix = {}", self.created_unix);
        for (kind, path) in &self.outputs {
            let name = path
                .file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| path.display().to_string());
            let _ = writeln!(text, "output.{kind} = {name}");
        }
        let path = dir.join("manifest.txt");
        std::fs::write(&path, text)?;
        Ok(path)
    }
}
