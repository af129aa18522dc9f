//! Output directory handling and the JSON manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

/// Collects the files written by one run so the manifest can list them.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    files: Vec<FileEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub bytes: usize,
    pub sha256: String,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Renders the file in memory with `fill`, then writes it and records its
    /// checksum.
    pub fn write<F>(&mut self, name: &str, fill: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
    {
        let mut buf = Vec::new();
        fill(&mut buf).map_err(|e| CliError::io(&self.root.join(name), e))?;
        self.write_bytes(name, buf)
    }

    pub fn write_bytes(&mut self, name: &str, bytes: Vec<u8>) -> Result<(), CliError> {
        let path = self.root.join(name);
        fs::write(&path, &bytes).map_err(|e| CliError::io(&path, e))?;
        self.files.push(FileEntry {
            path: name.to_string(),
            bytes: bytes.len(),
            sha256: sha256_hex(&bytes),
        });
        Ok(())
    }

    /// Takes over the files recorded by another writer on the same root.
    pub fn absorb(&mut self, other: OutputDir) {
        self.files.extend(other.files);
    }

    pub fn files(&self) -> &[FileEntry] {
        &self.files
    }

    /// Writes `manifest.json` listing every file written so far.
    pub fn finish<C: Serialize>(mut self, command: &str, config: &C, wall_time: Duration) -> Result<Manifest, CliError> {
        self.files.sort_by(|a, b| a.path.cmp(&b.path));
        let manifest = Manifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: serde_json::to_value(config).map_err(|e| CliError::Config(e.to_string()))?,
            files: self.files,
            wall_time_seconds: wall_time.as_secs_f64(),
        };
        let path = self.root.join("manifest.json");
        let mut out = fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
        serde_json::to_writer_pretty(&mut out, &manifest).map_err(|e| CliError::io(&path, e.into()))?;
        writeln!(out).map_err(|e| CliError::io(&path, e))?;
        Ok(manifest)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub config: serde_json::Value,
    pub files: Vec<FileEntry>,
    pub wall_time_seconds: f64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
