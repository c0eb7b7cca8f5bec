//! Run manifests: enough to re-run a command and check its outputs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::Result;
use serde::{Deserialize, Serialize};

use crate::io;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Arguments after the program name, as given.
    pub argv: Vec<String>,
    /// Working directory the arguments are relative to.
    pub cwd: PathBuf,
    pub config_path: PathBuf,
    pub seed: Option<u64>,
    pub tool_version: String,
    /// SHA-256 of every input file.
    pub input_digests: BTreeMap<String, String>,
    pub wall_seconds: f64,
    pub output_dir: PathBuf,
    /// SHA-256 of every output file, keyed by name inside `output_dir`.
    pub outputs: BTreeMap<String, String>,
    /// Outputs that carry timings and are not expected to reproduce.
    pub nondeterministic: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, argv: &[String], config: &Path, seed: Option<u64>, out: &Path) -> Result<Self> {
        Ok(RunManifest {
            command: command.to_string(),
            argv: argv.to_vec(),
            cwd: std::env::current_dir()?,
            config_path: config.to_path_buf(),
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            input_digests: BTreeMap::new(),
            wall_seconds: 0.0,
            output_dir: out.to_path_buf(),
            outputs: BTreeMap::new(),
            nondeterministic: Vec::new(),
        })
    }

    pub fn add_input(&mut self, path: &Path) -> Result<()> {
        self.input_digests
            .insert(path.display().to_string(), io::file_digest(path)?);
        Ok(())
    }

    /// Writes `contents` to `output_dir/name` and records its digest.
    pub fn write_output(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<()> {
        let bytes = contents.as_ref();
        io::write(&self.output_dir.join(name), bytes)?;
        self.outputs.insert(name.to_string(), io::sha256_hex(bytes));
        Ok(())
    }

    pub fn write_nondeterministic(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<()> {
        self.write_output(name, contents)?;
        self.nondeterministic.push(name.to_string());
        Ok(())
    }

    pub fn save(&self) -> Result<()> {
        let text = serde_json::to_string_pretty(self)? + "\n";
        io::write(&self.output_dir.join(MANIFEST_FILE), text)
    }
}
