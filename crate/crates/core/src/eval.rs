//! Evaluation against a frozen ladder of co-players.
//!
//! A trained pool is distilled into a small set of fixed co-players taken
//! at increasing depths of training, every candidate policy plays seeded
//! episodes against each of them, and method scores are reported both raw
//! and normalized by the self-play baseline.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::game::map::ScenarioMap;
use crate::game::payoff::{PayoffMatrix, PayoffMode};
use crate::pool::{Checkpoint, CheckpointPool};
use crate::rng;
use crate::rollout::play_episode;

#[allow(unused_imports)]
use num_traits::Float;

/// Training-depth fractions of the default co-player ladder.
pub const DEFAULT_FIXED_BOB_FRACTIONS: [f64; 4] = [0.28, 0.52, 0.76, 1.0];

/// Method key of the self-play baseline that normalization divides by.
pub const BASELINE_METHOD: &str = "sp";

#[derive(Clone, Debug, PartialEq)]
pub enum EvalError {
    EmptyPool,
    BadFraction(f64),
    /// Two depth fractions resolved to the same checkpoint.
    DuplicateSelection { step: u64 },
    NoCandidates,
    EmptyMethod(String),
    NoBobs,
    BadConfig(String),
    /// Normalization was requested but no baseline method was evaluated.
    MissingBaseline,
    /// The baseline mean is zero, nothing can be divided by it.
    ZeroBaseline,
    LengthMismatch { x: usize, y: usize },
    TooFewPoints(usize),
    NonFinite,
    /// Zero variance on one side, the correlation is undefined.
    ConstantInput,
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::EmptyPool => write!(f, "checkpoint pool is empty"),
            EvalError::BadFraction(x) => write!(f, "depth fraction {x} outside (0, 1]"),
            EvalError::DuplicateSelection { step } => {
                write!(f, "two depth fractions picked the checkpoint at step {step}")
            }
            EvalError::NoCandidates => write!(f, "no candidate methods given"),
            EvalError::EmptyMethod(m) => write!(f, "method {m} has no candidates"),
            EvalError::NoBobs => write!(f, "no fixed co-players given"),
            EvalError::BadConfig(msg) => write!(f, "bad evaluation config: {msg}"),
            EvalError::MissingBaseline => {
                write!(f, "no {BASELINE_METHOD} method to normalize against")
            }
            EvalError::ZeroBaseline => write!(f, "baseline mean is zero"),
            EvalError::LengthMismatch { x, y } => {
                write!(f, "series lengths differ: {x} vs {y}")
            }
            EvalError::TooFewPoints(n) => write!(f, "need at least 2 points, got {n}"),
            EvalError::NonFinite => write!(f, "inputs must be finite"),
            EvalError::ConstantInput => write!(f, "constant series has no correlation"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for EvalError {}

/// A frozen ladder of evaluation co-players, drawn once from a single
/// training run and reused across every method under comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedBobs {
    pub checkpoints: Vec<Checkpoint>,
    pub source_run: String,
}

/// Picks one checkpoint per depth fraction, nearest by step index to
/// `fraction * total_steps`, preferring the earlier checkpoint on ties.
pub fn build_fixed_bobs(
    pool: &CheckpointPool,
    fractions: &[f64],
) -> Result<FixedBobs, EvalError> {
    if pool.checkpoints.is_empty() {
        return Err(EvalError::EmptyPool);
    }
    let mut picked: Vec<Checkpoint> = Vec::with_capacity(fractions.len());
    for &fraction in fractions {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(EvalError::BadFraction(fraction));
        }
        let target = fraction * pool.total_steps as f64;
        let best = pool
            .checkpoints
            .iter()
            .min_by(|a, b| {
                let da = (a.step_index as f64 - target).abs();
                let db = (b.step_index as f64 - target).abs();
                da.partial_cmp(&db)
                    .expect("distances are finite")
                    .then(a.step_index.cmp(&b.step_index))
            })
            .expect("pool checked non-empty");
        if picked.iter().any(|c| c.step_index == best.step_index) {
            return Err(EvalError::DuplicateSelection {
                step: best.step_index,
            });
        }
        picked.push(best.clone());
    }
    Ok(FixedBobs {
        checkpoints: picked,
        source_run: pool.run_id.clone(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub games_per_pair: usize,
    pub discount_factor: f64,
    /// Also report per-method means divided by the self-play mean.
    pub normalize: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            games_per_pair: 6,
            discount_factor: 1.0,
            normalize: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalSample {
    pub method: String,
    pub candidate: usize,
    pub bob: usize,
    pub game: usize,
    pub reward: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub samples: Vec<EvalSample>,
    pub method_means: BTreeMap<String, f64>,
    /// Means divided by the baseline mean; the baseline maps to exactly 1.
    /// Empty when normalization was not requested.
    pub normalized: BTreeMap<String, f64>,
    pub game_count: usize,
}

/// Divides every mean by the baseline mean. The baseline entry comes out
/// as exactly 1, so normalizing twice is the identity.
pub fn normalize_means(
    means: &BTreeMap<String, f64>,
) -> Result<BTreeMap<String, f64>, EvalError> {
    let baseline = *means
        .get(BASELINE_METHOD)
        .ok_or(EvalError::MissingBaseline)?;
    if baseline == 0.0 {
        return Err(EvalError::ZeroBaseline);
    }
    Ok(means.iter().map(|(k, v)| (k.clone(), v / baseline)).collect())
}

/// Plays every candidate of every method against every fixed co-player for
/// `games_per_pair` seeded episodes and records the candidate's returns.
pub fn fixed_bobs_eval(
    candidates: &BTreeMap<String, Vec<Checkpoint>>,
    bobs: &FixedBobs,
    scenario: &ScenarioMap,
    payoff: &PayoffMatrix,
    mode: PayoffMode,
    config: &EvalConfig,
    seed: u64,
) -> Result<EvaluationReport, EvalError> {
    if candidates.is_empty() {
        return Err(EvalError::NoCandidates);
    }
    if bobs.checkpoints.is_empty() {
        return Err(EvalError::NoBobs);
    }
    if config.games_per_pair < 1 {
        return Err(EvalError::BadConfig(String::from(
            "need at least one game per pairing",
        )));
    }
    if !(config.discount_factor > 0.0 && config.discount_factor <= 1.0) {
        return Err(EvalError::BadConfig(alloc::format!(
            "discount factor must lie in (0,1], got {}",
            config.discount_factor
        )));
    }
    let mut samples = Vec::new();
    let mut method_means = BTreeMap::new();
    for (method, ckpts) in candidates {
        if ckpts.is_empty() {
            return Err(EvalError::EmptyMethod(method.clone()));
        }
        let method_seed = rng::derive(seed, method, &[]);
        let mut sum = 0.0;
        let mut count = 0usize;
        for (cand, ego) in ckpts.iter().enumerate() {
            for (bob, co) in bobs.checkpoints.iter().enumerate() {
                for game in 0..config.games_per_pair {
                    let episode_seed = rng::derive(
                        method_seed,
                        "pairing",
                        &[cand as u64, bob as u64, game as u64],
                    );
                    let out = play_episode(
                        &ego.params,
                        &co.params,
                        scenario,
                        payoff,
                        mode,
                        config.discount_factor,
                        episode_seed,
                    );
                    sum += out.ego_return;
                    count += 1;
                    samples.push(EvalSample {
                        method: method.clone(),
                        candidate: cand,
                        bob,
                        game,
                        reward: out.ego_return,
                    });
                }
            }
        }
        method_means.insert(method.clone(), sum / count as f64);
    }
    let normalized = if config.normalize {
        normalize_means(&method_means)?
    } else {
        BTreeMap::new()
    };
    Ok(EvaluationReport {
        game_count: samples.len(),
        samples,
        method_means,
        normalized,
    })
}

/// Mean reward gain per population increment between the baseline `r1`
/// (self-play) and the largest population `r3`: (r3 - r1) / 2.
pub fn average_improvement(r1: f64, r3: f64) -> f64 {
    (r3 - r1) / 2.0
}

/// Sample Pearson correlation coefficient of two equal-length series.
pub fn pearson_correlation(xs: &[f64], ys: &[f64]) -> Result<f64, EvalError> {
    if xs.len() != ys.len() {
        return Err(EvalError::LengthMismatch {
            x: xs.len(),
            y: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(EvalError::TooFewPoints(xs.len()));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(EvalError::NonFinite);
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let dx = x - mx;
        let dy = y - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(EvalError::ConstantInput);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}
