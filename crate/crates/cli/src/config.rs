//! Experiment configuration: a TOML document whose step counts are written
//! at full scale and shrunk by one `scale` factor at load time.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use loi_core::game::map::ScenarioMap;
use loi_core::game::payoff::PayoffMatrix;
use loi_core::trainer::HillClimbKnobs;

use crate::CliError;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentDef {
    pub name: String,
    /// Row-player payoff matrix; the column payoff is its transpose.
    pub payoff: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDef {
    pub name: String,
    /// Map file path, relative to the config file's directory.
    pub map: PathBuf,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingSection {
    /// Per-member training budget at full scale.
    pub total_steps: u64,
    /// Checkpoints saved per run; the save interval is total/checkpoints.
    pub checkpoints_per_run: u64,
    pub discount_factor: f64,
    pub mutation_scale: f64,
    pub episodes_per_eval: u32,
}

impl Default for TrainingSection {
    fn default() -> Self {
        TrainingSection {
            total_steps: 10_000_000,
            checkpoints_per_run: 25,
            discount_factor: 1.0,
            mutation_scale: 0.35,
            episodes_per_eval: 2,
        }
    }
}

impl TrainingSection {
    pub fn knobs(&self) -> HillClimbKnobs {
        HillClimbKnobs {
            mutation_scale: self.mutation_scale,
            episodes_per_eval: self.episodes_per_eval,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LoISection {
    pub alice_policies: usize,
    pub bob_policies: usize,
    pub checkpoints_per_alice: usize,
    pub bob_checkpoints: usize,
    pub games_per_pair: usize,
    pub bin_width: f64,
    pub pool_bobs_across_policies: bool,
    /// Training budget of each ego/co-player pool at full scale.
    pub pool_steps: u64,
}

impl Default for LoISection {
    fn default() -> Self {
        LoISection {
            alice_policies: 1,
            bob_policies: 5,
            checkpoints_per_alice: 4,
            bob_checkpoints: 9,
            games_per_pair: 6,
            bin_width: 1.0,
            pool_bobs_across_policies: false,
            pool_steps: 5_000_000,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluationSection {
    /// Training-depth fractions defining the fixed co-player ladder.
    pub fractions: Vec<f64>,
    pub games_per_pair: usize,
    /// Budget of the run the fixed co-players are drawn from, full scale.
    pub source_steps: u64,
}

impl Default for EvaluationSection {
    fn default() -> Self {
        EvaluationSection {
            fractions: loi_core::eval::DEFAULT_FIXED_BOB_FRACTIONS.to_vec(),
            games_per_pair: 20,
            source_steps: 5_000_000,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AllocationSection {
    /// Steps behind one budget unit at full scale; SP costs 1 unit, PP3
    /// costs 3, PP5 costs 5.
    pub base_unit: u64,
}

impl Default for AllocationSection {
    fn default() -> Self {
        AllocationSection {
            base_unit: 10_000_000,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StudySection {
    /// Environment/scenario the variance study runs on; empty means the
    /// first declared one.
    pub environment: String,
    pub scenario: String,
    pub bob_counts: Vec<usize>,
    pub repeats: usize,
    pub pool_steps: u64,
}

impl Default for StudySection {
    fn default() -> Self {
        StudySection {
            environment: String::new(),
            scenario: String::new(),
            bob_counts: vec![1, 2, 3, 4],
            repeats: 5,
            pool_steps: 1_000_000,
        }
    }
}

fn default_scale() -> f64 {
    0.01
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("runs/out")
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(default = "default_scale")]
    pub scale: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub environments: Vec<EnvironmentDef>,
    pub scenarios: Vec<ScenarioDef>,
    #[serde(default)]
    pub training: TrainingSection,
    #[serde(default)]
    pub loi: LoISection,
    #[serde(default)]
    pub evaluation: EvaluationSection,
    #[serde(default)]
    pub allocation: AllocationSection,
    #[serde(default)]
    pub study: StudySection,
}

/// Command-line overrides applied on top of the config file.
#[derive(Clone, Copy, Debug, Default)]
pub struct Overrides<'a> {
    pub seed: Option<u64>,
    pub out: Option<&'a Path>,
    pub scale: Option<f64>,
}

/// A loaded configuration with every referenced asset parsed and checked.
/// Environment and scenario order follow the config document; the order is
/// load-bearing for allocation tie-breaking and report layout.
#[derive(Debug)]
pub struct Experiment {
    pub raw: RawConfig,
    pub scale: f64,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub environments: Vec<(String, PayoffMatrix)>,
    pub scenarios: Vec<(String, ScenarioMap)>,
}

fn valid_name(name: &str) -> bool {
    !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_' || c == '-')
}

impl Experiment {
    pub fn load(config_path: &Path, overrides: Overrides) -> Result<Experiment, CliError> {
        let text = std::fs::read_to_string(config_path).map_err(|e| {
            CliError::Config(format!("cannot read config {}: {e}", config_path.display()))
        })?;
        let raw: RawConfig = toml::from_str(&text).map_err(|e| {
            CliError::Config(format!("cannot parse config {}: {e}", config_path.display()))
        })?;
        let base = config_path.parent().unwrap_or(Path::new("."));
        Experiment::from_raw(raw, base, overrides)
    }

    pub fn from_raw(
        mut raw: RawConfig,
        base: &Path,
        overrides: Overrides,
    ) -> Result<Experiment, CliError> {
        if let Some(seed) = overrides.seed {
            raw.seed = seed;
        }
        if let Some(scale) = overrides.scale {
            raw.scale = scale;
        }
        if let Some(out) = overrides.out {
            raw.output_dir = out.to_path_buf();
        }
        if !(raw.scale.is_finite() && raw.scale > 0.0) {
            return Err(CliError::Config(format!(
                "scale must be a positive number, got {}",
                raw.scale
            )));
        }
        if raw.environments.is_empty() {
            return Err(CliError::Config(String::from(
                "config declares no environments",
            )));
        }
        if raw.scenarios.is_empty() {
            return Err(CliError::Config(String::from("config declares no scenarios")));
        }

        let mut environments = Vec::with_capacity(raw.environments.len());
        for def in &raw.environments {
            if !valid_name(&def.name) {
                return Err(CliError::Config(format!(
                    "environment name {:?} must be lowercase [a-z0-9_-]",
                    def.name
                )));
            }
            if environments.iter().any(|(n, _)| n == &def.name) {
                return Err(CliError::Config(format!(
                    "environment {:?} declared twice",
                    def.name
                )));
            }
            let payoff = PayoffMatrix::new(&def.name, def.payoff.clone())?;
            environments.push((def.name.clone(), payoff));
        }

        let mut scenarios: Vec<(String, ScenarioMap)> = Vec::with_capacity(raw.scenarios.len());
        for def in &raw.scenarios {
            if !valid_name(&def.name) {
                return Err(CliError::Config(format!(
                    "scenario name {:?} must be lowercase [a-z0-9_-]",
                    def.name
                )));
            }
            if scenarios.iter().any(|(n, _)| n == &def.name) {
                return Err(CliError::Config(format!(
                    "scenario {:?} declared twice",
                    def.name
                )));
            }
            let map_path = base.join(&def.map);
            let map_text = std::fs::read_to_string(&map_path).map_err(|e| {
                CliError::Config(format!(
                    "scenario {:?}: cannot read map {}: {e}",
                    def.name,
                    map_path.display()
                ))
            })?;
            // Every environment must accept the map's resource codes.
            let mut parsed = None;
            for (env_name, payoff) in &environments {
                let map = ScenarioMap::load(&map_text, payoff).map_err(|e| {
                    CliError::Config(format!(
                        "scenario {:?} against environment {:?}: {e}",
                        def.name, env_name
                    ))
                })?;
                parsed = Some(map);
            }
            scenarios.push((def.name.clone(), parsed.expect("environments checked non-empty")));
        }

        if !raw.study.environment.is_empty()
            && !environments.iter().any(|(n, _)| n == &raw.study.environment)
        {
            return Err(CliError::Config(format!(
                "study environment {:?} is not declared",
                raw.study.environment
            )));
        }
        if !raw.study.scenario.is_empty()
            && !scenarios.iter().any(|(n, _)| n == &raw.study.scenario)
        {
            return Err(CliError::Config(format!(
                "study scenario {:?} is not declared",
                raw.study.scenario
            )));
        }

        let scale = raw.scale;
        let seed = raw.seed;
        let output_dir = base.join(&raw.output_dir);
        Ok(Experiment {
            raw,
            scale,
            seed,
            output_dir,
            environments,
            scenarios,
        })
    }

    /// Shrinks a full-scale step count by the scale factor, never below 1.
    pub fn scaled(&self, steps: u64) -> u64 {
        ((steps as f64 * self.scale).round() as u64).max(1)
    }

    pub fn save_interval(&self, total_steps: u64) -> u64 {
        (total_steps / self.raw.training.checkpoints_per_run).max(1)
    }

    pub fn environment(&self, name: &str) -> Result<&PayoffMatrix, CliError> {
        self.environments
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, p)| p)
            .ok_or_else(|| {
                let known: Vec<&str> =
                    self.environments.iter().map(|(n, _)| n.as_str()).collect();
                CliError::Config(format!(
                    "unknown environment {name:?}; known environments: {}",
                    known.join(", ")
                ))
            })
    }

    pub fn scenario(&self, name: &str) -> Result<&ScenarioMap, CliError> {
        self.scenarios
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, m)| m)
            .ok_or_else(|| {
                let known: Vec<&str> = self.scenarios.iter().map(|(n, _)| n.as_str()).collect();
                CliError::Config(format!(
                    "unknown scenario {name:?}; known scenarios: {}",
                    known.join(", ")
                ))
            })
    }

    pub fn study_environment(&self) -> &str {
        if self.raw.study.environment.is_empty() {
            &self.environments[0].0
        } else {
            &self.raw.study.environment
        }
    }

    pub fn study_scenario(&self) -> &str {
        if self.raw.study.scenario.is_empty() {
            &self.scenarios[0].0
        } else {
            &self.raw.study.scenario
        }
    }
}
