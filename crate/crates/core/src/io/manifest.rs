//! Run manifests: the complete configuration of a run as JSON.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{read_file, write_file, IoError};
use crate::domains::pusher::PusherParams;
use crate::domains::skirmish::SkirmishParams;
use crate::evolve::GameConfig;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainParams {
    Skirmish(SkirmishParams),
    Pusher(PusherParams),
}

impl DomainParams {
    pub fn name(&self) -> &'static str {
        match self {
            DomainParams::Skirmish(_) => "skirmish",
            DomainParams::Pusher(_) => "pusher",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub schema_version: u32,
    pub run_id: String,
    pub evolve: GameConfig,
    pub domain: DomainParams,
    /// Creation time; informational only, never read back into a run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub created: Option<String>,
}

impl RunManifest {
    pub fn new(run_id: impl Into<String>, evolve: GameConfig, domain: DomainParams) -> Self {
        Self { schema_version: SCHEMA_VERSION, run_id: run_id.into(), evolve, domain, created: None }
    }

    pub fn validate(&self) -> Result<(), IoError> {
        self.evolve.validate().map_err(IoError::Manifest)?;
        match &self.domain {
            DomainParams::Skirmish(p) => p.validate(),
            DomainParams::Pusher(p) => p.validate(),
        }
        .map_err(|e| IoError::Manifest(e.to_string()))?;
        if self.run_id.is_empty() || self.run_id.contains(['/', '\\']) {
            return Err(IoError::Manifest(format!("run_id {:?} is not a plain directory name", self.run_id)));
        }
        Ok(())
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, IoError> {
        let v: Value = serde_json::from_str(text).map_err(|e| IoError::Manifest(e.to_string()))?;
        Self::from_value(v)
    }

    fn from_value(v: Value) -> Result<Self, IoError> {
        match v.get("schema_version").and_then(Value::as_u64) {
            Some(n) if n == SCHEMA_VERSION as u64 => {}
            Some(n) => {
                return Err(IoError::Manifest(format!(
                    "schema_version {n} is not supported; this build reads version {SCHEMA_VERSION}"
                )))
            }
            None => return Err(IoError::Manifest("missing schema_version".into())),
        }
        serde_json::from_value(v).map_err(|e| {
            IoError::Manifest(format!("{e} (manifest schema version {SCHEMA_VERSION}; see README for the accepted keys)"))
        })
    }

    /// Applies `key.path=value` overrides. Keys must already exist in the
    /// fully expanded manifest; values are parsed as JSON, falling back to a
    /// plain string.
    pub fn with_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<Self, IoError> {
        let mut v = serde_json::to_value(self).expect("manifest serializes");
        for o in overrides {
            let o = o.as_ref();
            let (key, raw) = o.split_once('=').ok_or_else(|| IoError::Manifest(format!("override {o:?} lacks '='")))?;
            let mut slot = &mut v;
            for part in key.split('.') {
                slot = slot
                    .as_object_mut()
                    .and_then(|m| m.get_mut(part))
                    .ok_or_else(|| IoError::Manifest(format!("unknown manifest key {key:?}")))?;
            }
            *slot = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_owned()));
        }
        Self::from_value(v)
    }

    pub fn read(path: &Path) -> Result<Self, IoError> {
        let bytes = read_file(path)?;
        let text = String::from_utf8(bytes).map_err(|_| IoError::Manifest("manifest is not UTF-8".into()))?;
        Self::from_json(&text)
    }

    pub fn write(&self, path: &Path) -> Result<(), IoError> {
        write_file(path, self.to_json().as_bytes())
    }
}
