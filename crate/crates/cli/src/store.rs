//! On-disk artifact store. Every file lives under one output root, is
//! addressed by a forward-slash relative path, and is hashed on write so
//! the run manifest can vouch for it later.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use loi_core::pool::CheckpointPool;

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    /// Path relative to the output root, always forward-slash separated.
    pub path: String,
    pub sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hex::encode(hasher.finalize())
}

pub struct Store {
    root: PathBuf,
}

impl Store {
    pub fn new(root: impl Into<PathBuf>) -> Store {
        Store { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn abs(&self, rel: &str) -> PathBuf {
        let mut p = self.root.clone();
        for part in rel.split('/') {
            p.push(part);
        }
        p
    }

    pub fn exists(&self, rel: &str) -> bool {
        self.abs(rel).is_file()
    }

    pub fn write_bytes(&self, rel: &str, bytes: &[u8]) -> Result<Artifact, CliError> {
        let path = self.abs(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| {
                CliError::Data(format!("cannot create {}: {e}", parent.display()))
            })?;
        }
        fs::write(&path, bytes)
            .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))?;
        Ok(Artifact {
            path: rel.to_string(),
            sha256: sha256_hex(bytes),
        })
    }

    pub fn write_text(&self, rel: &str, text: &str) -> Result<Artifact, CliError> {
        self.write_bytes(rel, text.as_bytes())
    }

    pub fn write_json<T: Serialize>(&self, rel: &str, value: &T) -> Result<Artifact, CliError> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| CliError::Data(format!("cannot serialize {rel}: {e}")))?;
        text.push('\n');
        self.write_text(rel, &text)
    }

    pub fn read_bytes(&self, rel: &str) -> Result<Vec<u8>, CliError> {
        let path = self.abs(rel);
        fs::read(&path)
            .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))
    }

    pub fn read_text(&self, rel: &str) -> Result<String, CliError> {
        let bytes = self.read_bytes(rel)?;
        String::from_utf8(bytes)
            .map_err(|e| CliError::Data(format!("{rel} is not valid utf-8: {e}")))
    }

    pub fn read_json<T: DeserializeOwned>(&self, rel: &str) -> Result<T, CliError> {
        let text = self.read_text(rel)?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Data(format!("cannot parse {rel}: {e}")))
    }

    pub fn hash_of(&self, rel: &str) -> Result<String, CliError> {
        Ok(sha256_hex(&self.read_bytes(rel)?))
    }

    /// Writes one CSV table. Every row must match the header width.
    pub fn write_csv(
        &self,
        rel: &str,
        header: &[&str],
        rows: &[Vec<String>],
    ) -> Result<Artifact, CliError> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer
            .write_record(header)
            .map_err(|e| CliError::Data(format!("cannot build {rel}: {e}")))?;
        for row in rows {
            if row.len() != header.len() {
                return Err(CliError::Data(format!(
                    "{rel}: row width {} does not match header width {}",
                    row.len(),
                    header.len()
                )));
            }
            writer
                .write_record(row)
                .map_err(|e| CliError::Data(format!("cannot build {rel}: {e}")))?;
        }
        let bytes = writer
            .into_inner()
            .map_err(|e| CliError::Data(format!("cannot build {rel}: {e}")))?;
        self.write_bytes(rel, &bytes)
    }
}

/// Directory holding one training run. Each population member gets its
/// own pool directory inside it: `member-{i}/pool.json`.
pub fn run_dir(environment: &str, scenario: &str, role: &str) -> String {
    format!("pools/{environment}/{scenario}/{role}")
}

pub fn member_pool_file(dir: &str, member: usize) -> String {
    format!("{dir}/member-{member}/pool.json")
}

pub fn save_pools(
    store: &Store,
    dir: &str,
    pools: &[CheckpointPool],
) -> Result<Vec<Artifact>, CliError> {
    let mut artifacts = Vec::with_capacity(pools.len());
    for (i, pool) in pools.iter().enumerate() {
        artifacts.push(store.write_json(&member_pool_file(dir, i), pool)?);
    }
    Ok(artifacts)
}

fn read_pool_file(path: &Path) -> Result<CheckpointPool, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    let pool: CheckpointPool = serde_json::from_str(&text)
        .map_err(|e| CliError::Data(format!("cannot parse {}: {e}", path.display())))?;
    pool.verify_fingerprints()?;
    Ok(pool)
}

/// Loads checkpoint pools from a path, accepting a pool JSON file, one
/// member directory holding `pool.json`, or a run directory of
/// `member-{i}` subdirectories (returned in member order). Checkpoint
/// fingerprints are verified before the pools are handed out.
pub fn read_pools_path(path: &Path) -> Result<Vec<CheckpointPool>, CliError> {
    if path.is_file() {
        return Ok(vec![read_pool_file(path)?]);
    }
    if !path.is_dir() {
        return Err(CliError::Data(format!(
            "pool path {} does not exist",
            path.display()
        )));
    }
    let single = path.join("pool.json");
    if single.is_file() {
        return Ok(vec![read_pool_file(&single)?]);
    }
    let entries = fs::read_dir(path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    let mut members: Vec<usize> = Vec::new();
    for entry in entries {
        let entry =
            entry.map_err(|e| CliError::Data(format!("cannot list {}: {e}", path.display())))?;
        let name = entry.file_name();
        if let Some(idx) = name
            .to_string_lossy()
            .strip_prefix("member-")
            .and_then(|s| s.parse::<usize>().ok())
        {
            members.push(idx);
        }
    }
    if members.is_empty() {
        return Err(CliError::Data(format!(
            "{} holds neither pool.json nor member-* directories",
            path.display()
        )));
    }
    members.sort_unstable();
    let mut pools = Vec::with_capacity(members.len());
    for (expect, idx) in members.iter().enumerate() {
        if *idx != expect {
            return Err(CliError::Data(format!(
                "{} is missing member-{expect}",
                path.display()
            )));
        }
        pools.push(read_pool_file(
            &path.join(format!("member-{idx}")).join("pool.json"),
        )?);
    }
    Ok(pools)
}

/// Store-relative variant of `read_pools_path`.
pub fn load_pools(store: &Store, dir: &str) -> Result<Vec<CheckpointPool>, CliError> {
    read_pools_path(&store.abs(dir))
}
