//! Persistence: manifests, snapshots, traces, metrics and embeddings.
//!
//! Snapshots and embedding files are little-endian binary with
//! length-prefixed fields; manifests and traces are JSON. Every binary file
//! ends with the FNV-1a 64 checksum of the bytes before it.

pub mod checksum;
pub mod embeddings;
pub mod manifest;
pub mod metrics;
pub mod snapshot;
pub mod trace;
mod wire;

use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File { path: PathBuf, source: std::io::Error },
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: String, found: String },
    #[error("unsupported format version {found} (this build reads version {supported})")]
    Version { found: u32, supported: u32 },
    #[error("checksum mismatch: stored {stored:016x}, computed {computed:016x}")]
    Checksum { stored: u64, computed: u64 },
    #[error("file truncated at byte {0}")]
    Truncated(usize),
    #[error("malformed data at byte {at}: {what}")]
    Format { at: usize, what: String },
    #[error("duplicate evaluation key {0:016x}")]
    DuplicateKey(u64),
    #[error("snapshot is for domain {found:?}, expected {expected:?}")]
    DomainMismatch { expected: String, found: String },
    #[error("invalid manifest: {0}")]
    Manifest(String),
    #[error("invariant violations:\n  {}", .0.join("\n  "))]
    Invariants(Vec<String>),
}

pub fn read_file(path: &Path) -> Result<Vec<u8>, IoError> {
    std::fs::read(path).map_err(|source| IoError::File { path: path.to_owned(), source })
}

/// Writes through a temporary sibling and a rename so readers never see a
/// partial file.
pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    let err = |source| IoError::File { path: path.to_owned(), source };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(err)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, bytes).map_err(err)?;
    std::fs::rename(&tmp, path).map_err(err)
}
