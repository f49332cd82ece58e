//! Run manifest: the ledger of everything a pipeline run wrote. Each stage
//! lists its artifacts with content hashes so later stages (and the report
//! command) can verify their inputs byte for byte.
//!
//! The creation timestamp comes from SOURCE_DATE_EPOCH when set and is
//! omitted otherwise; the wall clock is never consulted, so identical runs
//! serialize to identical bytes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::config::{Experiment, RawConfig};
use crate::store::{Artifact, Store};
use crate::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub seed: u64,
    pub scale: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub created_unix: Option<u64>,
    pub config: RawConfig,
    /// Stage key -> artifacts written by that stage, in write order.
    pub stages: BTreeMap<String, Vec<Artifact>>,
}

fn epoch_from_env() -> Option<u64> {
    std::env::var("SOURCE_DATE_EPOCH").ok()?.parse().ok()
}

impl RunManifest {
    pub fn new(exp: &Experiment) -> RunManifest {
        RunManifest {
            seed: exp.seed,
            scale: exp.scale,
            created_unix: epoch_from_env(),
            config: exp.raw.clone(),
            stages: BTreeMap::new(),
        }
    }

    /// Loads the output directory's manifest, or starts a fresh one when
    /// none exists yet.
    pub fn load_or_new(store: &Store, exp: &Experiment) -> RunManifest {
        match Self::load(store) {
            Ok(mut m) => {
                m.seed = exp.seed;
                m.scale = exp.scale;
                m.config = exp.raw.clone();
                m
            }
            Err(_) => RunManifest::new(exp),
        }
    }

    pub fn load(store: &Store) -> Result<RunManifest, CliError> {
        store.read_json(MANIFEST_FILE)
    }

    pub fn save(&self, store: &Store) -> Result<(), CliError> {
        store.write_json(MANIFEST_FILE, self)?;
        Ok(())
    }

    /// Replaces the stage's artifact list; re-running a stage supersedes
    /// its previous outputs.
    pub fn record(&mut self, stage: &str, artifacts: Vec<Artifact>) {
        self.stages.insert(stage.to_string(), artifacts);
    }

    pub fn stage(&self, name: &str) -> Result<&[Artifact], CliError> {
        match self.stages.get(name) {
            Some(a) => Ok(a),
            None => Err(CliError::Data(format!(
                "manifest has no entry for stage {name:?}; run `loi-lab run-all` \
                 or the matching pipeline command first"
            ))),
        }
    }

    pub fn stage_names(&self) -> impl Iterator<Item = &str> {
        self.stages.keys().map(String::as_str)
    }

    /// Re-hashes every listed artifact against its recorded digest.
    pub fn verify(&self, store: &Store) -> Result<(), CliError> {
        for (stage, artifacts) in &self.stages {
            for artifact in artifacts {
                let actual = store.hash_of(&artifact.path).map_err(|_| {
                    CliError::Data(format!(
                        "stage {stage:?}: artifact {} is missing from the output directory",
                        artifact.path
                    ))
                })?;
                if actual != artifact.sha256 {
                    return Err(CliError::Data(format!(
                        "stage {stage:?}: artifact {} does not match its recorded hash",
                        artifact.path
                    )));
                }
            }
        }
        Ok(())
    }
}
