//! Level-of-influence estimation.
//!
//! The level of influence is the conditional mutual information between the
//! ego player's episode reward and the co-player's identity: high values
//! mean swapping the co-player moves the reward distribution. Rewards are
//! discretized into fixed-width bins, the co-player identity ranges over
//! sampled checkpoints, and the expectation runs over ego policies and
//! their late-stage checkpoints.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::game::map::ScenarioMap;
use crate::game::payoff::{PayoffMatrix, PayoffMode};
use crate::pool::{sample_checkpoints, Checkpoint, CheckpointPool, PoolError, SamplingSpec, Stage, Weighting};
use crate::rng;
use crate::rollout::play_episode;
use crate::trainer::{train, TrainError, TrainingConfig};

#[allow(unused_imports)]
use num_traits::Float;

#[derive(Clone, Debug, PartialEq)]
pub enum LoIError {
    EmptySamples,
    NonFiniteSample(f64),
    BadBinWidth(f64),
    NoConditionals,
    /// Conditionals disagree on bin width or origin, so bins don't line up.
    MixedBinning,
    WeightCount { expected: usize, got: usize },
    BadWeights(String),
    Params(String),
    Pool(PoolError),
    Train(TrainError),
}

impl fmt::Display for LoIError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LoIError::EmptySamples => write!(f, "reward sample set is empty"),
            LoIError::NonFiniteSample(v) => write!(f, "non-finite reward sample {v}"),
            LoIError::BadBinWidth(w) => write!(f, "bin width must be positive and finite, got {w}"),
            LoIError::NoConditionals => write!(f, "need at least one conditional distribution"),
            LoIError::MixedBinning => write!(f, "conditional distributions use different binnings"),
            LoIError::WeightCount { expected, got } => {
                write!(f, "expected {expected} weights, got {got}")
            }
            LoIError::BadWeights(msg) => write!(f, "bad weights: {msg}"),
            LoIError::Params(msg) => write!(f, "bad estimation parameters: {msg}"),
            LoIError::Pool(e) => write!(f, "checkpoint pool: {e}"),
            LoIError::Train(e) => write!(f, "training: {e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for LoIError {}

impl From<PoolError> for LoIError {
    fn from(e: PoolError) -> Self {
        LoIError::Pool(e)
    }
}

impl From<TrainError> for LoIError {
    fn from(e: TrainError) -> Self {
        LoIError::Train(e)
    }
}

/// Discrete reward distribution over fixed-width bins. Bin `i` covers
/// `[origin + i*bin_width, origin + (i+1)*bin_width)`; only bins with
/// positive mass are stored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardHistogram {
    pub bin_width: f64,
    pub origin: f64,
    pub probabilities: BTreeMap<i64, f64>,
    pub sample_count: usize,
}

impl RewardHistogram {
    pub fn probability(&self, bin: i64) -> f64 {
        self.probabilities.get(&bin).copied().unwrap_or(0.0)
    }

    fn same_binning(&self, other: &RewardHistogram) -> bool {
        self.bin_width == other.bin_width && self.origin == other.origin
    }
}

/// Bins reward samples into a normalized histogram.
pub fn reward_distribution(
    samples: &[f64],
    bin_width: f64,
    origin: f64,
) -> Result<RewardHistogram, LoIError> {
    if samples.is_empty() {
        return Err(LoIError::EmptySamples);
    }
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(LoIError::BadBinWidth(bin_width));
    }
    if !origin.is_finite() {
        return Err(LoIError::Params(String::from("origin must be finite")));
    }
    let mut counts: BTreeMap<i64, u64> = BTreeMap::new();
    for &r in samples {
        if !r.is_finite() {
            return Err(LoIError::NonFiniteSample(r));
        }
        let bin = ((r - origin) / bin_width).floor() as i64;
        *counts.entry(bin).or_insert(0) += 1;
    }
    let n = samples.len() as f64;
    let probabilities = counts
        .into_iter()
        .map(|(bin, c)| (bin, c as f64 / n))
        .collect();
    Ok(RewardHistogram {
        bin_width,
        origin,
        probabilities,
        sample_count: samples.len(),
    })
}

fn check_weights(weights: Option<&[f64]>, n: usize) -> Result<Vec<f64>, LoIError> {
    match weights {
        None => Ok(alloc::vec![1.0 / n as f64; n]),
        Some(w) => {
            if w.len() != n {
                return Err(LoIError::WeightCount {
                    expected: n,
                    got: w.len(),
                });
            }
            let mut sum = 0.0;
            for &x in w {
                if !(x.is_finite() && x >= 0.0) {
                    return Err(LoIError::BadWeights(alloc::format!(
                        "weight {x} is negative or non-finite"
                    )));
                }
                sum += x;
            }
            if (sum - 1.0).abs() > 1e-12 {
                return Err(LoIError::BadWeights(alloc::format!("weights sum to {sum}")));
            }
            Ok(w.to_vec())
        }
    }
}

/// Mixture of the conditionals. `None` weights mean uniform.
pub fn marginal_distribution(
    conditionals: &[RewardHistogram],
    weights: Option<&[f64]>,
) -> Result<RewardHistogram, LoIError> {
    if conditionals.is_empty() {
        return Err(LoIError::NoConditionals);
    }
    let w = check_weights(weights, conditionals.len())?;
    let first = &conditionals[0];
    let mut probabilities: BTreeMap<i64, f64> = BTreeMap::new();
    let mut sample_count = 0;
    for (cond, &wj) in conditionals.iter().zip(&w) {
        if !cond.same_binning(first) {
            return Err(LoIError::MixedBinning);
        }
        sample_count += cond.sample_count;
        if wj == 0.0 {
            continue;
        }
        for (&bin, &p) in &cond.probabilities {
            *probabilities.entry(bin).or_insert(0.0) += wj * p;
        }
    }
    Ok(RewardHistogram {
        bin_width: first.bin_width,
        origin: first.origin,
        probabilities,
        sample_count,
    })
}

/// Mutual information in nats between the reward and the conditional index,
/// with the index distributed by `weights` (uniform if `None`).
pub fn mutual_information(
    conditionals: &[RewardHistogram],
    weights: Option<&[f64]>,
) -> Result<f64, LoIError> {
    let w = check_weights(weights, conditionals.len())?;
    let marginal = marginal_distribution(conditionals, weights)?;
    let mut info = 0.0;
    for (cond, &wj) in conditionals.iter().zip(&w) {
        if wj == 0.0 {
            continue;
        }
        for (&bin, &p) in &cond.probabilities {
            if p == 0.0 {
                continue;
            }
            let q = marginal.probability(bin);
            info += wj * p * (p / q).ln();
        }
    }
    // Rounding can leave a hair below zero; true MI never is.
    debug_assert!(info > -1e-9, "mutual information fell to {info}");
    Ok(info.max(0.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoIParams {
    /// Late-stage checkpoints sampled per ego policy.
    pub checkpoints_per_alice: usize,
    /// Checkpoints sampled per co-player policy, across all stages.
    pub bob_checkpoints: usize,
    /// Episodes played per checkpoint pairing.
    pub games_per_pair: usize,
    pub bin_width: f64,
    pub discount_factor: f64,
    /// When set, all co-player checkpoints form one conditioning set and
    /// the estimate yields one sample per ego checkpoint instead of one
    /// per co-player policy.
    pub pool_bobs_across_policies: bool,
}

impl Default for LoIParams {
    fn default() -> Self {
        LoIParams {
            checkpoints_per_alice: 4,
            bob_checkpoints: 9,
            games_per_pair: 6,
            bin_width: 1.0,
            discount_factor: 1.0,
            pool_bobs_across_policies: false,
        }
    }
}

fn validate_params(params: &LoIParams) -> Result<(), LoIError> {
    if params.checkpoints_per_alice < 1 {
        return Err(LoIError::Params(String::from(
            "need at least one ego checkpoint",
        )));
    }
    if params.bob_checkpoints < 1 {
        return Err(LoIError::Params(String::from(
            "need at least one co-player checkpoint",
        )));
    }
    if params.games_per_pair < 1 {
        return Err(LoIError::Params(String::from("need at least one game per pair")));
    }
    if !(params.bin_width > 0.0 && params.bin_width.is_finite()) {
        return Err(LoIError::BadBinWidth(params.bin_width));
    }
    if !(params.discount_factor > 0.0 && params.discount_factor <= 1.0) {
        return Err(LoIError::Params(alloc::format!(
            "discount factor must lie in (0,1], got {}",
            params.discount_factor
        )));
    }
    Ok(())
}

/// One mutual-information sample. `bob_policy` is `None` when co-player
/// policies were pooled into a single conditioning set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoISample {
    pub alice_policy: usize,
    pub alice_checkpoint: u64,
    pub bob_policy: Option<usize>,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoIEstimate {
    pub mean: f64,
    /// Population standard deviation across the samples.
    pub std_dev: f64,
    pub samples: Vec<LoISample>,
}

fn population_stats(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Estimation skeleton with the reward distribution supplied by a closure.
/// `dist(ego, co, seed)` must return the ego reward distribution for that
/// pairing; the production path plays seeded episodes, tests may inject
/// synthetic distributions.
pub fn estimate_loi_with<F>(
    alice_pools: &[CheckpointPool],
    bob_pools: &[CheckpointPool],
    params: &LoIParams,
    seed: u64,
    mut dist: F,
) -> Result<LoIEstimate, LoIError>
where
    F: FnMut(&Checkpoint, &Checkpoint, u64) -> Result<RewardHistogram, LoIError>,
{
    validate_params(params)?;
    if alice_pools.is_empty() {
        return Err(LoIError::Params(String::from("need at least one ego pool")));
    }
    if bob_pools.is_empty() {
        return Err(LoIError::Params(String::from(
            "need at least one co-player pool",
        )));
    }
    let alice_spec = SamplingSpec {
        count: params.checkpoints_per_alice,
        stage: Stage::Late,
        weighting: Weighting::Uniform,
    };
    let bob_spec = SamplingSpec {
        count: params.bob_checkpoints,
        stage: Stage::All,
        weighting: Weighting::Uniform,
    };

    let mut samples = Vec::new();
    for (i, alice_pool) in alice_pools.iter().enumerate() {
        let mut alice_stream = rng::stream(rng::derive(seed, "alice", &[i as u64]));
        let alice_ckpts = sample_checkpoints(alice_pool, &alice_spec, &mut alice_stream)?;
        for (k, ego) in alice_ckpts.iter().enumerate() {
            let mut pooled: Vec<RewardHistogram> = Vec::new();
            for (j, bob_pool) in bob_pools.iter().enumerate() {
                let mut bob_stream =
                    rng::stream(rng::derive(seed, "bob", &[i as u64, k as u64, j as u64]));
                let bob_ckpts = sample_checkpoints(bob_pool, &bob_spec, &mut bob_stream)?;
                let mut conditionals = Vec::with_capacity(bob_ckpts.len());
                for (l, co) in bob_ckpts.iter().enumerate() {
                    let dist_seed =
                        rng::derive(seed, "dist", &[i as u64, k as u64, j as u64, l as u64]);
                    conditionals.push(dist(ego, co, dist_seed)?);
                }
                if params.pool_bobs_across_policies {
                    pooled.extend(conditionals);
                } else {
                    let value = mutual_information(&conditionals, None)?;
                    samples.push(LoISample {
                        alice_policy: i,
                        alice_checkpoint: ego.step_index,
                        bob_policy: Some(j),
                        value,
                    });
                }
            }
            if params.pool_bobs_across_policies {
                let value = mutual_information(&pooled, None)?;
                samples.push(LoISample {
                    alice_policy: i,
                    alice_checkpoint: ego.step_index,
                    bob_policy: None,
                    value,
                });
            }
        }
    }
    let (mean, std_dev) = population_stats(samples.iter().map(|s| s.value));
    Ok(LoIEstimate {
        mean,
        std_dev,
        samples,
    })
}

/// Level of influence of the co-player population on the ego policies,
/// estimated from seeded episodes on the given scenario.
pub fn estimate_loi(
    alice_pools: &[CheckpointPool],
    bob_pools: &[CheckpointPool],
    scenario: &ScenarioMap,
    payoff: &PayoffMatrix,
    mode: PayoffMode,
    params: &LoIParams,
    seed: u64,
) -> Result<LoIEstimate, LoIError> {
    let games = params.games_per_pair;
    let bin_width = params.bin_width;
    let discount = params.discount_factor;
    estimate_loi_with(alice_pools, bob_pools, params, seed, |ego, co, dist_seed| {
        let mut rewards = Vec::with_capacity(games);
        for game in 0..games {
            let episode_seed = rng::derive(dist_seed, "game", &[game as u64]);
            let out = play_episode(
                &ego.params,
                &co.params,
                scenario,
                payoff,
                mode,
                discount,
                episode_seed,
            );
            rewards.push(out.ego_return);
        }
        reward_distribution(&rewards, bin_width, 0.0)
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarianceStudyRow {
    pub bob_count: usize,
    /// One level-of-influence estimate per repeat.
    pub estimates: Vec<f64>,
    /// Population variance of the estimates.
    pub variance: f64,
}

/// Variance-study skeleton: `estimate(bob_count, repeat)` yields one
/// level-of-influence mean, and each row reports the spread across repeats.
pub fn variance_study_with<F>(
    bob_counts: &[usize],
    repeats: usize,
    mut estimate: F,
) -> Result<Vec<VarianceStudyRow>, LoIError>
where
    F: FnMut(usize, usize) -> Result<f64, LoIError>,
{
    if bob_counts.is_empty() {
        return Err(LoIError::Params(String::from("need at least one co-player count")));
    }
    if repeats < 2 {
        return Err(LoIError::Params(String::from(
            "variance needs at least two repeats",
        )));
    }
    let mut rows = Vec::with_capacity(bob_counts.len());
    for &b in bob_counts {
        if b < 1 {
            return Err(LoIError::Params(String::from("co-player counts must be positive")));
        }
        let mut estimates = Vec::with_capacity(repeats);
        for r in 0..repeats {
            estimates.push(estimate(b, r)?);
        }
        let (mean, std) = population_stats(estimates.iter().copied());
        let _ = mean;
        rows.push(VarianceStudyRow {
            bob_count: b,
            estimates,
            variance: std * std,
        });
    }
    Ok(rows)
}

/// How the estimate's spread responds to the number of co-player policies.
/// Each repeat trains one ego pool and `max(bob_counts)` co-player pools
/// from fresh seeds; smaller counts reuse a prefix of the same pools, so
/// rows differ only in how many co-players enter the estimate.
pub fn loi_variance_study(
    train_template: &TrainingConfig,
    loi_params: &LoIParams,
    bob_counts: &[usize],
    repeats: usize,
    scenario: &ScenarioMap,
    payoff: &PayoffMatrix,
    mode: PayoffMode,
    seed: u64,
) -> Result<Vec<VarianceStudyRow>, LoIError> {
    if bob_counts.is_empty() {
        return Err(LoIError::Params(String::from("need at least one co-player count")));
    }
    if repeats < 2 {
        return Err(LoIError::Params(String::from(
            "variance needs at least two repeats",
        )));
    }
    let max_bobs = *bob_counts.iter().max().expect("non-empty");

    // Train all pools up front; the per-count rows only slice into them.
    let mut alice_by_repeat = Vec::with_capacity(repeats);
    let mut bobs_by_repeat = Vec::with_capacity(repeats);
    for r in 0..repeats {
        let mut cfg = train_template.clone();
        cfg.population_size = 1;
        cfg.seed = rng::derive(seed, "study-alice", &[r as u64]);
        let alice = train(&cfg, scenario, payoff, mode)?.pools.remove(0);
        let mut bobs = Vec::with_capacity(max_bobs);
        for j in 0..max_bobs {
            let mut cfg = train_template.clone();
            cfg.population_size = 1;
            cfg.seed = rng::derive(seed, "study-bob", &[r as u64, j as u64]);
            bobs.push(train(&cfg, scenario, payoff, mode)?.pools.remove(0));
        }
        alice_by_repeat.push(alice);
        bobs_by_repeat.push(bobs);
    }

    variance_study_with(bob_counts, repeats, |b, r| {
        let alice = core::slice::from_ref(&alice_by_repeat[r]);
        let bobs = &bobs_by_repeat[r][..b];
        let est = estimate_loi(
            alice,
            bobs,
            scenario,
            payoff,
            mode,
            loi_params,
            rng::derive(seed, "study-loi", &[r as u64]),
        )?;
        Ok(est.mean)
    })
}
