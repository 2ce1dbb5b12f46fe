//! Hash-chained JSON artifacts.
//!
//! Every file carries the config hash and seed that produced it, the content
//! hash of the artifact it was derived from, and its own content hash.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{io, Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
    /// Content hash of the parent artifact; empty for roots.
    pub parent: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Artifact<T> {
    pub kind: String,
    pub provenance: Provenance,
    pub body: T,
    pub hash: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io(dir))?;
    }
    fs::write(path, text).map_err(io(path))
}

fn content_hash<T: Serialize>(kind: &str, provenance: &Provenance, body: &T) -> String {
    let text = serde_json::to_string(&(kind, provenance, body)).expect("artifact bodies serialise");
    sha256_hex(text.as_bytes())
}

impl<T: Serialize + DeserializeOwned> Artifact<T> {
    pub fn new(kind: &str, provenance: Provenance, body: T) -> Self {
        let hash = content_hash(kind, &provenance, &body);
        Self { kind: kind.into(), provenance, body, hash }
    }

    /// First 12 hex digits of the content hash.
    pub fn short_hash(&self) -> &str {
        &self.hash[..12]
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("artifact bodies serialise");
        s.push('\n');
        s
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_file(path, &self.to_json())
    }

    /// Single-line form for bulky bodies such as traces.
    pub fn save_compact(&self, path: &Path) -> Result<()> {
        let mut s = serde_json::to_string(self).expect("artifact bodies serialise");
        s.push('\n');
        write_file(path, &s)
    }

    /// Loads and verifies kind and content hash.
    pub fn load(path: &Path, kind: &str) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(io(path))?;
        let a: Self = serde_json::from_str(&text).map_err(|source| Error::Json { path: path.into(), source })?;
        if a.kind != kind {
            return Err(Error::WrongKind { path: path.into(), expected: kind.into(), found: a.kind });
        }
        if content_hash(&a.kind, &a.provenance, &a.body) != a.hash {
            return Err(Error::Corrupt { path: path.into() });
        }
        Ok(a)
    }

    /// Fails unless this artifact was derived from `parent`.
    pub fn require_parent(&self, what: &str, parent: &str) -> Result<()> {
        if self.provenance.parent != parent {
            return Err(Error::Stale {
                what: what.into(),
                expected: parent.into(),
                found: self.provenance.parent.clone(),
            });
        }
        Ok(())
    }
}
