//! Seeded episode execution shared by training, influence estimation, and
//! evaluation. The ego agent always sits in slot 0.

use crate::game::engine::GridState;
use crate::game::map::ScenarioMap;
use crate::game::payoff::{PayoffMatrix, PayoffMode};
use crate::game::Action;
use crate::policy::{act, PolicyParams};
use crate::rng;

#[allow(unused_imports)]
use num_traits::Float;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpisodeOutcome {
    /// Discounted return of the ego agent.
    pub ego_return: f64,
    /// Discounted return of the co-player.
    pub co_return: f64,
    /// Undiscounted reward sums, the quantities histogrammed downstream.
    pub ego_reward_sum: f64,
    pub co_reward_sum: f64,
    /// Environment steps actually simulated.
    pub steps: u32,
}

/// Runs up to `max_steps` of one episode (truncating at the scenario's
/// episode length) and reports both agents' returns.
pub fn play_steps(
    ego: &PolicyParams,
    co: &PolicyParams,
    scenario: &ScenarioMap,
    payoff: &PayoffMatrix,
    mode: PayoffMode,
    discount: f64,
    seed: u64,
    max_steps: u32,
) -> EpisodeOutcome {
    let mut state = GridState::reset(scenario, payoff, mode, rng::derive(seed, "env", &[]));
    let mut ego_stream = rng::stream(rng::derive(seed, "act", &[0]));
    let mut co_stream = rng::stream(rng::derive(seed, "act", &[1]));
    let steps = max_steps.min(scenario.episode_length);
    let mut outcome = EpisodeOutcome {
        ego_return: 0.0,
        co_return: 0.0,
        ego_reward_sum: 0.0,
        co_reward_sum: 0.0,
        steps,
    };
    let mut gamma_t = 1.0;
    for _ in 0..steps {
        let a0 = if state.agents[0].is_active() {
            act(ego, &state.observe(scenario, 0), &mut ego_stream)
        } else {
            Action::NoOp
        };
        let a1 = if state.agents[1].is_active() {
            act(co, &state.observe(scenario, 1), &mut co_stream)
        } else {
            Action::NoOp
        };
        let out = state
            .step(scenario, payoff, [a0, a1])
            .expect("stepping stays within the episode length");
        outcome.ego_return += gamma_t * out.rewards[0];
        outcome.co_return += gamma_t * out.rewards[1];
        outcome.ego_reward_sum += out.rewards[0];
        outcome.co_reward_sum += out.rewards[1];
        gamma_t *= discount;
    }
    outcome
}

/// Runs one full episode.
pub fn play_episode(
    ego: &PolicyParams,
    co: &PolicyParams,
    scenario: &ScenarioMap,
    payoff: &PayoffMatrix,
    mode: PayoffMode,
    discount: f64,
    seed: u64,
) -> EpisodeOutcome {
    play_steps(
        ego,
        co,
        scenario,
        payoff,
        mode,
        discount,
        seed,
        scenario.episode_length,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    const ARENA: &str = "\
name = arena
episode_length = 120
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

    fn hunter() -> PolicyParams {
        PolicyParams {
            resource_weights: vec![1.2, 0.8],
            zap_propensity: 0.9,
            exploration_temperature: 0.4,
            approach_weight: 1.0,
        }
    }

    #[test]
    fn episodes_replay_bitwise() {
        let (map, payoff) = setup();
        let a = play_episode(&hunter(), &hunter(), &map, &payoff, PayoffMode::Mixed, 1.0, 42);
        let b = play_episode(&hunter(), &hunter(), &map, &payoff, PayoffMode::Mixed, 1.0, 42);
        assert_eq!(a, b);
        assert_eq!(a.steps, map.episode_length);
    }

    #[test]
    fn undiscounted_return_equals_reward_sum() {
        let (map, payoff) = setup();
        let out = play_episode(&hunter(), &hunter(), &map, &payoff, PayoffMode::Mixed, 1.0, 7);
        assert!((out.ego_return - out.ego_reward_sum).abs() < 1e-12);
        assert!((out.co_return - out.co_reward_sum).abs() < 1e-12);
    }

    #[test]
    fn discounting_shrinks_late_rewards() {
        let (map, payoff) = setup();
        let seed = 11;
        let full = play_episode(&hunter(), &hunter(), &map, &payoff, PayoffMode::Mixed, 1.0, seed);
        let damped =
            play_episode(&hunter(), &hunter(), &map, &payoff, PayoffMode::Mixed, 0.99, seed);
        assert!(full.ego_reward_sum > 0.0, "hunters should interact");
        assert!(damped.ego_return < full.ego_return);
        assert_eq!(damped.ego_reward_sum, full.ego_reward_sum);
    }

    #[test]
    fn truncation_consumes_exactly_the_requested_steps() {
        let (map, payoff) = setup();
        let out = play_steps(
            &hunter(),
            &hunter(),
            &map,
            &payoff,
            PayoffMode::Mixed,
            1.0,
            3,
            45,
        );
        assert_eq!(out.steps, 45);
        let over = play_steps(
            &hunter(),
            &hunter(),
            &map,
            &payoff,
            PayoffMode::Mixed,
            1.0,
            3,
            10_000,
        );
        assert_eq!(over.steps, map.episode_length);
    }
}
