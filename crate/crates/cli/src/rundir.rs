//! Layout of a run directory:
//!
//! ```text
//! <run_id>/manifest.json
//! <run_id>/snapshots/initial.gsnp
//! <run_id>/snapshots/gen_0001.gsnp ...
//! <run_id>/metrics.csv
//! <run_id>/COMPLETE        snapshot checksums, written last
//! ```

use std::path::{Path, PathBuf};

use game_core::behavior::{DescriptorSpec, EmbeddingTable};
use game_core::domains::Domain;
use game_core::evolve::GenerationsLog;
use game_core::io::checksum::fnv1a64;
use game_core::io::embeddings::read_external_embeddings;
use game_core::io::manifest::RunManifest;
use game_core::io::snapshot::load_log;

use crate::CliError;

pub const MANIFEST: &str = "manifest.json";
pub const SNAPSHOTS: &str = "snapshots";
pub const METRICS: &str = "metrics.csv";
pub const COMPLETE: &str = "COMPLETE";

pub struct RunDir {
    pub path: PathBuf,
    pub manifest: RunManifest,
}

impl RunDir {
    pub fn open(path: &Path) -> Result<Self, CliError> {
        let manifest = RunManifest::read(&path.join(MANIFEST))?;
        Ok(Self { path: path.to_owned(), manifest })
    }

    pub fn snapshots(&self) -> PathBuf {
        self.path.join(SNAPSHOTS)
    }

    pub fn load<D: Domain>(&self, domain: &D) -> Result<GenerationsLog<D::Solution>, CliError> {
        Ok(load_log(domain, &self.snapshots())?)
    }

    pub fn is_complete(&self) -> bool {
        self.path.join(COMPLETE).exists()
    }

    pub fn id(&self) -> &str {
        &self.manifest.run_id
    }
}

/// Name and FNV-1a checksum of every snapshot file, sorted by name.
pub fn snapshot_checksums(dir: &Path) -> Result<Vec<(String, u64)>, CliError> {
    let err = |e: std::io::Error| CliError::Runtime(format!("{}: {e}", dir.display()));
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(err)? {
        let entry = entry.map_err(err)?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if name.ends_with(".gsnp") {
            let bytes = std::fs::read(entry.path()).map_err(err)?;
            out.push((name, fnv1a64(&bytes)));
        }
    }
    out.sort();
    Ok(out)
}

pub fn checksum_report(sums: &[(String, u64)]) -> String {
    sums.iter().map(|(n, s)| format!("{n} {s:016x}\n")).collect()
}

/// External embeddings named by the manifest's descriptor, if any.
pub fn external_table(m: &RunManifest) -> Result<Option<EmbeddingTable>, CliError> {
    match &m.evolve.descriptor {
        DescriptorSpec::External { path } => Ok(Some(read_external_embeddings(Path::new(path))?)),
        _ => Ok(None),
    }
}
