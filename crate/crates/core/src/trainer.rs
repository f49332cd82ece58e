//! Self-play and population-play training.
//!
//! Self-play is population play with one member, literally: both run the
//! same loop, so the p=1 equivalence is structural. Members advance from
//! save barrier to save barrier; at each barrier every member saves a
//! checkpoint and then adopts a uniformly sampled member's newest save as
//! its co-player until the next barrier.
//!
//! The learner is a (1+1) hill climb over the policy knobs: perturb,
//! evaluate both candidates on the same seeded episodes against the frozen
//! co-player, keep the better mean discounted return, break ties toward the
//! incumbent.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::game::map::ScenarioMap;
use crate::game::payoff::{PayoffMatrix, PayoffMode};
use crate::policy::PolicyParams;
use crate::pool::CheckpointPool;
use crate::rng;
use crate::rollout::{play_episode, play_steps};

#[allow(unused_imports)]
use num_traits::Float;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HillClimbKnobs {
    /// Standard deviation of the gaussian parameter perturbation.
    pub mutation_scale: f64,
    /// Episodes per candidate when comparing incumbent and challenger.
    pub episodes_per_eval: u32,
}

impl Default for HillClimbKnobs {
    fn default() -> Self {
        HillClimbKnobs {
            mutation_scale: 0.15,
            episodes_per_eval: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub scenario_id: String,
    pub environment_id: String,
    pub total_steps: u64,
    pub save_interval: u64,
    pub population_size: usize,
    pub seed: u64,
    pub discount_factor: f64,
    pub learner: HillClimbKnobs,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExchangeEvent {
    pub member: usize,
    pub save_index: u64,
    pub adopted_from: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    pub pools: Vec<CheckpointPool>,
    /// Per-save mean episode return, averaged across members.
    pub reward_curve: Vec<f64>,
    /// Environment steps actually simulated, audited from episode outcomes.
    pub wall_steps: u64,
    pub exchange_log: Vec<ExchangeEvent>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum TrainError {
    Config(String),
}

impl fmt::Display for TrainError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrainError::Config(msg) => write!(f, "bad training config: {msg}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for TrainError {}

fn validate(config: &TrainingConfig) -> Result<(), TrainError> {
    if config.population_size < 1 {
        return Err(TrainError::Config(String::from(
            "population size must be at least 1",
        )));
    }
    if config.save_interval == 0 {
        return Err(TrainError::Config(String::from(
            "save interval must be positive",
        )));
    }
    if config.total_steps < config.save_interval {
        return Err(TrainError::Config(alloc::format!(
            "total steps {} below the save interval {}",
            config.total_steps,
            config.save_interval
        )));
    }
    if !(config.discount_factor > 0.0 && config.discount_factor <= 1.0) {
        return Err(TrainError::Config(alloc::format!(
            "discount factor must lie in (0,1], got {}",
            config.discount_factor
        )));
    }
    if config.learner.episodes_per_eval < 1 {
        return Err(TrainError::Config(String::from(
            "episodes per eval must be at least 1",
        )));
    }
    if !(config.learner.mutation_scale >= 0.0 && config.learner.mutation_scale.is_finite()) {
        return Err(TrainError::Config(String::from(
            "mutation scale must be finite and non-negative",
        )));
    }
    Ok(())
}

/// Draws a fresh parameter vector. Ranges keep initial populations varied
/// but playable: some zapping, mild exploration, usually approach-positive.
fn init_params(k: usize, seed: u64) -> PolicyParams {
    let mut stream = rng::stream(seed);
    let mut resource_weights = Vec::with_capacity(k);
    for _ in 0..k {
        resource_weights.push(2.0 * rng::uniform_f64(&mut stream));
    }
    PolicyParams {
        resource_weights,
        zap_propensity: 0.1 + 0.9 * rng::uniform_f64(&mut stream),
        exploration_temperature: 0.2 + 1.3 * rng::uniform_f64(&mut stream),
        approach_weight: -0.5 + 2.5 * rng::uniform_f64(&mut stream),
    }
}

fn clamp(x: f64, lo: f64, hi: f64) -> f64 {
    if x < lo {
        lo
    } else if x > hi {
        hi
    } else {
        x
    }
}

fn mutate(params: &PolicyParams, scale: f64, stream: &mut rand_chacha::ChaCha8Rng) -> PolicyParams {
    let mut out = params.clone();
    for w in &mut out.resource_weights {
        *w = clamp(*w + scale * rng::standard_normal(stream), -8.0, 8.0);
    }
    out.zap_propensity = clamp(out.zap_propensity + scale * rng::standard_normal(stream), 0.0, 1.0);
    out.exploration_temperature = clamp(
        out.exploration_temperature + scale * rng::standard_normal(stream),
        1e-3,
        8.0,
    );
    out.approach_weight = clamp(out.approach_weight + scale * rng::standard_normal(stream), -8.0, 8.0);
    out
}

fn mean_return(
    params: &PolicyParams,
    co: &PolicyParams,
    scenario: &ScenarioMap,
    payoff: &PayoffMatrix,
    mode: PayoffMode,
    discount: f64,
    episode_seeds: &[u64],
    steps_audit: &mut u64,
) -> f64 {
    let mut sum = 0.0;
    for seed in episode_seeds {
        let out = play_episode(params, co, scenario, payoff, mode, discount, *seed);
        sum += out.ego_return;
        *steps_audit += u64::from(out.steps);
    }
    sum / episode_seeds.len() as f64
}

fn learner_update_inner(
    current: &PolicyParams,
    co: &PolicyParams,
    scenario: &ScenarioMap,
    payoff: &PayoffMatrix,
    mode: PayoffMode,
    mutate_seed: u64,
    eval_seed: u64,
    knobs: &HillClimbKnobs,
    discount: f64,
    steps_audit: &mut u64,
) -> (PolicyParams, f64) {
    let mut mutation_stream = rng::stream(mutate_seed);
    let challenger = mutate(current, knobs.mutation_scale, &mut mutation_stream);
    let episode_seeds: Vec<u64> = (0..knobs.episodes_per_eval)
        .map(|e| rng::derive(eval_seed, "episode", &[u64::from(e)]))
        .collect();
    let incumbent_mean = mean_return(
        current, co, scenario, payoff, mode, discount, &episode_seeds, steps_audit,
    );
    let challenger_mean = mean_return(
        &challenger, co, scenario, payoff, mode, discount, &episode_seeds, steps_audit,
    );
    if challenger_mean > incumbent_mean {
        (challenger, challenger_mean)
    } else {
        (current.clone(), incumbent_mean)
    }
}

/// One (1+1) hill-climb step against a frozen co-player. Both candidates
/// play the same seeded episodes; ties keep the incumbent. Returns the
/// surviving parameters and their mean discounted return.
pub fn learner_update(
    current: &PolicyParams,
    co: &PolicyParams,
    scenario: &ScenarioMap,
    payoff: &PayoffMatrix,
    mode: PayoffMode,
    mutate_seed: u64,
    eval_seed: u64,
    knobs: &HillClimbKnobs,
    discount: f64,
) -> (PolicyParams, f64) {
    let mut audit = 0;
    learner_update_inner(
        current, co, scenario, payoff, mode, mutate_seed, eval_seed, knobs, discount, &mut audit,
    )
}

struct Member {
    params: PolicyParams,
    co_params: PolicyParams,
    consumed: u64,
    updates: u64,
    fillers: u64,
    returns_since_save: Vec<f64>,
    last_save_mean: f64,
    pool: CheckpointPool,
}

/// Trains `population_size` members and returns one checkpoint pool per
/// member. Self-play is the population_size = 1 case.
pub fn train(
    config: &TrainingConfig,
    scenario: &ScenarioMap,
    payoff: &PayoffMatrix,
    mode: PayoffMode,
) -> Result<TrainingReport, TrainError> {
    validate(config)?;
    let p = config.population_size;
    let episode_length = u64::from(scenario.episode_length);
    let update_cost = 2 * u64::from(config.learner.episodes_per_eval) * episode_length;
    let num_saves = config.total_steps / config.save_interval;

    let mut audit: u64 = 0;
    let mut members: Vec<Member> = (0..p)
        .map(|i| {
            let params = init_params(payoff.k, rng::derive(config.seed, "init", &[i as u64]));
            Member {
                co_params: params.clone(),
                params,
                consumed: 0,
                updates: 0,
                fillers: 0,
                returns_since_save: Vec::new(),
                last_save_mean: 0.0,
                pool: CheckpointPool::new(
                    &alloc::format!(
                        "{}-{}-p{}-s{}-m{}",
                        config.environment_id,
                        config.scenario_id,
                        p,
                        config.seed,
                        i
                    ),
                    &config.scenario_id,
                    &config.environment_id,
                    config.total_steps,
                ),
            }
        })
        .collect();

    let mut reward_curve = Vec::with_capacity(num_saves as usize);
    let mut exchange_log = Vec::new();

    let advance = |member_idx: usize, m: &mut Member, target: u64, audit: &mut u64| {
        while m.consumed < target {
            if m.consumed + update_cost <= config.total_steps {
                let mutate_seed =
                    rng::derive(config.seed, "mutate", &[member_idx as u64, m.updates]);
                let eval_seed = rng::derive(config.seed, "eval", &[member_idx as u64, m.updates]);
                let (kept, mean) = learner_update_inner(
                    &m.params,
                    &m.co_params,
                    scenario,
                    payoff,
                    mode,
                    mutate_seed,
                    eval_seed,
                    &config.learner,
                    config.discount_factor,
                    audit,
                );
                m.params = kept;
                m.returns_since_save.push(mean);
                m.consumed += update_cost;
                m.updates += 1;
            } else {
                // Budget too small for another update: burn the gap with
                // (possibly partial) filler episodes. They count toward
                // wall steps but never touch the parameters or the curve.
                let gap = target - m.consumed;
                let chunk = gap.min(episode_length) as u32;
                let seed = rng::derive(config.seed, "filler", &[member_idx as u64, m.fillers]);
                let out = play_steps(
                    &m.params,
                    &m.co_params,
                    scenario,
                    payoff,
                    mode,
                    config.discount_factor,
                    seed,
                    chunk,
                );
                *audit += u64::from(out.steps);
                m.consumed += u64::from(out.steps);
                m.fillers += 1;
            }
        }
    };

    for save in 1..=num_saves {
        let barrier = save * config.save_interval;
        for (i, m) in members.iter_mut().enumerate() {
            advance(i, m, barrier, &mut audit);
        }
        // Barrier: everyone saves, then everyone samples a co-player from
        // the population's newest checkpoints.
        let mut curve_sum = 0.0;
        for m in &mut members {
            m.pool
                .save_checkpoint(m.params.clone(), barrier)
                .expect("barrier steps strictly increase");
            if !m.returns_since_save.is_empty() {
                m.last_save_mean = m.returns_since_save.iter().sum::<f64>()
                    / m.returns_since_save.len() as f64;
                m.returns_since_save.clear();
            }
            curve_sum += m.last_save_mean;
        }
        reward_curve.push(curve_sum / p as f64);
        let newest: Vec<PolicyParams> = members
            .iter()
            .map(|m| m.pool.checkpoints.last().expect("just saved").params.clone())
            .collect();
        for (i, m) in members.iter_mut().enumerate() {
            let mut stream = rng::stream(rng::derive(
                config.seed,
                "pp-exchange",
                &[save, i as u64],
            ));
            let pick = rng::uniform_index(&mut stream, p);
            m.co_params = newest[pick].clone();
            exchange_log.push(ExchangeEvent {
                member: i,
                save_index: save,
                adopted_from: pick,
            });
        }
    }
    // Budget tail past the last barrier.
    for (i, m) in members.iter_mut().enumerate() {
        advance(i, m, config.total_steps, &mut audit);
    }

    let consumed_total: u64 = members.iter().map(|m| m.consumed).sum();
    debug_assert_eq!(consumed_total, audit, "step audit mismatch");
    debug_assert_eq!(consumed_total, config.total_steps * p as u64);

    Ok(TrainingReport {
        pools: members.into_iter().map(|m| m.pool).collect(),
        reward_curve,
        wall_steps: audit,
        exchange_log,
    })
}

/// Training against checkpointed copies of oneself.
pub fn train_self_play(
    config: &TrainingConfig,
    scenario: &ScenarioMap,
    payoff: &PayoffMatrix,
    mode: PayoffMode,
) -> Result<TrainingReport, TrainError> {
    if config.population_size != 1 {
        return Err(TrainError::Config(alloc::format!(
            "self-play needs population size 1, got {}",
            config.population_size
        )));
    }
    train(config, scenario, payoff, mode)
}

/// Parallel populations whose co-players resample across the population at
/// every save barrier.
pub fn train_population_play(
    config: &TrainingConfig,
    scenario: &ScenarioMap,
    payoff: &PayoffMatrix,
    mode: PayoffMode,
) -> Result<TrainingReport, TrainError> {
    if config.population_size < 2 {
        return Err(TrainError::Config(alloc::format!(
            "population play needs at least 2 members, got {}",
            config.population_size
        )));
    }
    train(config, scenario, payoff, mode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    const ARENA: &str = "\
name = arena
episode_length = 30
######
#*01*#
#.10.#
#.01.#
#*10*#
######
";

    fn setup() -> (ScenarioMap, PayoffMatrix) {
        let payoff = PayoffMatrix::new("chicken", vec![vec![3.0, 2.0], vec![5.0, 0.0]]).unwrap();
        let map = ScenarioMap::load(ARENA, &payoff).unwrap();
        (map, payoff)
    }

    fn config(total: u64, interval: u64, p: usize, seed: u64) -> TrainingConfig {
        TrainingConfig {
            scenario_id: String::from("arena"),
            environment_id: String::from("chicken"),
            total_steps: total,
            save_interval: interval,
            population_size: p,
            seed,
            discount_factor: 1.0,
            learner: HillClimbKnobs {
                mutation_scale: 0.2,
                episodes_per_eval: 1,
            },
        }
    }

    #[test]
    fn cadence_fixes_the_pool_size() {
        let (map, payoff) = setup();
        // 50K/2K scaled down: 5000/200 gives 25 checkpoints.
        let report = train(&config(5000, 200, 1, 1), &map, &payoff, PayoffMode::Mixed).unwrap();
        assert_eq!(report.pools.len(), 1);
        assert_eq!(report.pools[0].checkpoints.len(), 25);
        assert_eq!(report.reward_curve.len(), 25);
        assert_eq!(report.wall_steps, 5000);
        let steps: Vec<u64> = report.pools[0]
            .checkpoints
            .iter()
            .map(|c| c.step_index)
            .collect();
        assert_eq!(steps, (1..=25).map(|k| k * 200).collect::<Vec<_>>());
    }

    #[test]
    fn training_is_seed_deterministic() {
        let (map, payoff) = setup();
        let a = train(&config(1200, 300, 2, 9), &map, &payoff, PayoffMode::Mixed).unwrap();
        let b = train(&config(1200, 300, 2, 9), &map, &payoff, PayoffMode::Mixed).unwrap();
        assert_eq!(a, b);
        let c = train(&config(1200, 300, 2, 10), &map, &payoff, PayoffMode::Mixed).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn population_wall_steps_scale_with_members() {
        let (map, payoff) = setup();
        let report = train(&config(900, 300, 3, 4), &map, &payoff, PayoffMode::Mixed).unwrap();
        assert_eq!(report.wall_steps, 3 * 900);
        assert_eq!(report.pools.len(), 3);
        for pool in &report.pools {
            assert_eq!(pool.checkpoints.len(), 3);
        }
    }

    #[test]
    fn self_play_equals_single_member_population() {
        let (map, payoff) = setup();
        let cfg = config(1000, 250, 1, 77);
        let sp = train_self_play(&cfg, &map, &payoff, PayoffMode::Mixed).unwrap();
        let pp = train(&cfg, &map, &payoff, PayoffMode::Mixed).unwrap();
        assert_eq!(sp, pp);
    }

    #[test]
    fn guards_reject_wrong_population_sizes() {
        let (map, payoff) = setup();
        assert!(train_self_play(&config(600, 300, 2, 1), &map, &payoff, PayoffMode::Mixed).is_err());
        assert!(
            train_population_play(&config(600, 300, 1, 1), &map, &payoff, PayoffMode::Mixed)
                .is_err()
        );
    }

    #[test]
    fn config_validation_catches_basics() {
        let (map, payoff) = setup();
        assert!(train(&config(100, 300, 1, 1), &map, &payoff, PayoffMode::Mixed).is_err());
        let mut c = config(600, 300, 1, 1);
        c.discount_factor = 0.0;
        assert!(train(&c, &map, &payoff, PayoffMode::Mixed).is_err());
        let mut c = config(600, 300, 1, 1);
        c.learner.episodes_per_eval = 0;
        assert!(train(&c, &map, &payoff, PayoffMode::Mixed).is_err());
    }

    #[test]
    fn null_mutation_keeps_parameters() {
        let (map, payoff) = setup();
        let knobs = HillClimbKnobs {
            mutation_scale: 0.0,
            episodes_per_eval: 2,
        };
        let p = init_params(2, 5);
        let co = init_params(2, 6);
        let (kept, mean) =
            learner_update(&p, &co, &map, &payoff, PayoffMode::Mixed, 1, 2, &knobs, 1.0);
        assert_eq!(kept, p);
        assert!(mean.is_finite());
    }

    #[test]
    fn hill_climb_is_monotone_under_fixed_eval_seeds() {
        let (map, payoff) = setup();
        let knobs = HillClimbKnobs {
            mutation_scale: 0.3,
            episodes_per_eval: 1,
        };
        let co = init_params(2, 100);
        let mut params = init_params(2, 101);
        let mut last = f64::NEG_INFINITY;
        for step in 0..30 {
            // Fresh mutations, frozen evaluation episodes.
            let (kept, mean) = learner_update(
                &params,
                &co,
                &map,
                &payoff,
                PayoffMode::Mixed,
                step,
                777,
                &knobs,
                1.0,
            );
            assert!(
                mean >= last,
                "kept mean decreased from {last} to {mean} at step {step}"
            );
            params = kept;
            last = mean;
        }
    }

    #[test]
    fn partial_budgets_fill_with_filler_episodes() {
        let (map, payoff) = setup();
        // Update cost 60; interval 100 forces 40 filler steps per segment.
        let report = train(&config(200, 100, 1, 3), &map, &payoff, PayoffMode::Mixed).unwrap();
        assert_eq!(report.wall_steps, 200);
        assert_eq!(report.pools[0].checkpoints.len(), 2);
    }

    #[test]
    fn exchange_frequencies_are_roughly_uniform() {
        let (map, payoff) = setup();
        // 5 members, 40 barriers: 200 draws, expected 40 per source.
        let report = train(&config(2400, 60, 5, 12), &map, &payoff, PayoffMode::Mixed).unwrap();
        let mut counts = [0usize; 5];
        for e in &report.exchange_log {
            counts[e.adopted_from] += 1;
        }
        let draws = report.exchange_log.len();
        assert_eq!(draws, 200);
        let expect = 0.2;
        let se = (expect * (1.0 - expect) / draws as f64).sqrt();
        for c in counts {
            let freq = c as f64 / draws as f64;
            assert!(
                (freq - expect).abs() <= 3.0 * se,
                "frequency {freq} too far from 1/5 (se {se})"
            );
        }
    }
}
