//! The desk-scale policy family: four interpretable knobs instead of a
//! neural network. Distinct parameter vectors still span meaningfully
//! different behaviors (resource specialization, aggression, exploration,
//! approach/avoidance), which is the only diversity the influence metric
//! consumes.

use alloc::vec::Vec;
use core::fmt;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::game::engine::{CellCode, Observation};
use crate::game::{Action, Direction};
use crate::rng;

#[allow(unused_imports)]
use num_traits::Float;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    /// Attraction value per resource type.
    pub resource_weights: Vec<f64>,
    /// Probability of firing when the co-player sits in the beam line.
    pub zap_propensity: f64,
    /// Softmax temperature over movement scores. Must stay positive.
    pub exploration_temperature: f64,
    /// Attraction (or aversion, when negative) toward the co-player.
    pub approach_weight: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum PolicyError {
    NonFinite,
    NonPositiveTemperature(f64),
    ZapOutOfRange(f64),
}

impl fmt::Display for PolicyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicyError::NonFinite => write!(f, "policy parameters must be finite"),
            PolicyError::NonPositiveTemperature(t) => {
                write!(f, "exploration temperature must be positive, got {t}")
            }
            PolicyError::ZapOutOfRange(z) => {
                write!(f, "zap propensity must lie in [0,1], got {z}")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for PolicyError {}

impl PolicyParams {
    pub fn validate(&self) -> Result<(), PolicyError> {
        let finite = self.resource_weights.iter().all(|w| w.is_finite())
            && self.zap_propensity.is_finite()
            && self.exploration_temperature.is_finite()
            && self.approach_weight.is_finite();
        if !finite {
            return Err(PolicyError::NonFinite);
        }
        if self.exploration_temperature <= 0.0 {
            return Err(PolicyError::NonPositiveTemperature(
                self.exploration_temperature,
            ));
        }
        if !(0.0..=1.0).contains(&self.zap_propensity) {
            return Err(PolicyError::ZapOutOfRange(self.zap_propensity));
        }
        Ok(())
    }

    /// Canonical little-endian byte image; the fingerprint hashes this, so
    /// two parameter sets collide only if they are bitwise equal.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut bytes = Vec::with_capacity(8 * (self.resource_weights.len() + 4));
        bytes.extend_from_slice(&(self.resource_weights.len() as u64).to_le_bytes());
        for w in &self.resource_weights {
            bytes.extend_from_slice(&w.to_le_bytes());
        }
        bytes.extend_from_slice(&self.zap_propensity.to_le_bytes());
        bytes.extend_from_slice(&self.exploration_temperature.to_le_bytes());
        bytes.extend_from_slice(&self.approach_weight.to_le_bytes());
        bytes
    }

    pub fn fingerprint(&self) -> alloc::string::String {
        let digest = Sha256::digest(self.canonical_bytes());
        hex::encode(digest)
    }
}

/// Penalty score for stepping into a wall; low enough that blocked moves
/// lose to any plausible attractor score at moderate temperatures.
const BLOCKED_SCORE: f64 = -4.0;

const MOVE_ACTIONS: [(Action, Direction); 4] = [
    (Action::MoveNorth, Direction::North),
    (Action::MoveSouth, Direction::South),
    (Action::MoveEast, Direction::East),
    (Action::MoveWest, Direction::West),
];

fn window_code(obs: &Observation, row: i64, col: i64) -> CellCode {
    if row < 0 || col < 0 || row >= obs.side as i64 || col >= obs.side as i64 {
        return CellCode::Wall;
    }
    obs.window[row as usize * obs.side + col as usize]
}

/// True when the co-player stands in the firing line: collinear with the
/// facing direction, inside the window, with no wall between.
fn co_player_in_beam_line(obs: &Observation) -> bool {
    let center = (obs.side / 2) as i64;
    let (dr, dc) = obs.facing.delta();
    let (mut r, mut c) = (center, center);
    loop {
        r += dr;
        c += dc;
        // Out-of-window cells read as wall, so the scan always terminates.
        match window_code(obs, r, c) {
            CellCode::Wall => return false,
            CellCode::CoPlayer => return true,
            _ => {}
        }
    }
}

/// Attraction potential of a window cell: every visible attractor
/// contributes its value shrunk by Manhattan distance.
fn potential(attractors: &[(i64, i64, f64)], row: i64, col: i64) -> f64 {
    let mut phi = 0.0;
    for (ar, ac, value) in attractors {
        let dist = (ar - row).abs() + (ac - col).abs();
        phi += value / (1.0 + dist as f64);
    }
    phi
}

/// Chooses one action. Two-stage heuristic: if the co-player is in the
/// firing line, fire with probability zap_propensity; otherwise sample a
/// non-fire action from a softmax over attraction scores at
/// exploration_temperature. All randomness comes from the given stream.
pub fn act(params: &PolicyParams, obs: &Observation, rng: &mut ChaCha8Rng) -> Action {
    if co_player_in_beam_line(obs) && rng::uniform_f64(rng) < params.zap_propensity {
        return Action::Fire;
    }

    let mut attractors: Vec<(i64, i64, f64)> = Vec::new();
    for wr in 0..obs.side {
        for wc in 0..obs.side {
            match obs.window[wr * obs.side + wc] {
                CellCode::Resource(t) => {
                    let value = params
                        .resource_weights
                        .get(t as usize)
                        .copied()
                        .unwrap_or(0.0);
                    attractors.push((wr as i64, wc as i64, value));
                }
                CellCode::CoPlayer => {
                    attractors.push((wr as i64, wc as i64, params.approach_weight));
                }
                _ => {}
            }
        }
    }

    let center = (obs.side / 2) as i64;
    let mut scored: [(Action, f64); 7] = [
        (Action::MoveNorth, 0.0),
        (Action::MoveSouth, 0.0),
        (Action::MoveEast, 0.0),
        (Action::MoveWest, 0.0),
        (Action::TurnLeft, 0.0),
        (Action::TurnRight, 0.0),
        (Action::NoOp, 0.0),
    ];
    for (slot, (action, dir)) in MOVE_ACTIONS.iter().enumerate() {
        let (dr, dc) = dir.delta();
        let (tr, tc) = (center + dr, center + dc);
        scored[slot] = (
            *action,
            if window_code(obs, tr, tc) == CellCode::Wall {
                BLOCKED_SCORE
            } else {
                potential(&attractors, tr, tc)
            },
        );
    }

    // Numerically stable softmax sample.
    let temp = params.exploration_temperature;
    let max_score = scored
        .iter()
        .map(|(_, s)| *s)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut weights = [0.0f64; 7];
    let mut total = 0.0;
    for (i, (_, s)) in scored.iter().enumerate() {
        let w = ((s - max_score) / temp).exp();
        weights[i] = w;
        total += w;
    }
    let mut target = rng::uniform_f64(rng) * total;
    for (i, w) in weights.iter().enumerate() {
        target -= w;
        if target < 0.0 {
            return scored[i].0;
        }
    }
    scored[6].0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::Inventory;
    use alloc::vec;

    fn params() -> PolicyParams {
        PolicyParams {
            resource_weights: vec![1.0, 0.5],
            zap_propensity: 0.8,
            exploration_temperature: 0.5,
            approach_weight: 0.3,
        }
    }

    fn empty_obs(side: usize) -> Observation {
        Observation {
            window: vec![CellCode::Floor; side * side],
            side,
            facing: Direction::North,
            own_inventory: Inventory::zeros(2),
            tick: 0,
        }
    }

    fn set(obs: &mut Observation, row: usize, col: usize, code: CellCode) {
        let side = obs.side;
        obs.window[row * side + col] = code;
    }

    #[test]
    fn act_is_deterministic_given_the_stream_state() {
        let p = params();
        let mut obs = empty_obs(5);
        set(&mut obs, 0, 2, CellCode::Resource(0));
        let mut a = rng::stream(42);
        let mut b = rng::stream(42);
        for _ in 0..50 {
            assert_eq!(act(&p, &obs, &mut a), act(&p, &obs, &mut b));
        }
    }

    #[test]
    fn act_never_mutates_inputs() {
        let p = params();
        let obs = empty_obs(5);
        let p2 = p.clone();
        let obs2 = obs.clone();
        let mut stream = rng::stream(1);
        act(&p, &obs, &mut stream);
        assert_eq!(p, p2);
        assert_eq!(obs, obs2);
    }

    #[test]
    fn zero_zap_propensity_never_fires() {
        let mut p = params();
        p.zap_propensity = 0.0;
        let mut obs = empty_obs(5);
        // Co-player straight ahead in the facing line.
        set(&mut obs, 1, 2, CellCode::CoPlayer);
        let mut stream = rng::stream(3);
        for _ in 0..500 {
            assert_ne!(act(&p, &obs, &mut stream), Action::Fire);
        }
    }

    #[test]
    fn full_zap_propensity_fires_on_sight() {
        let mut p = params();
        p.zap_propensity = 1.0;
        let mut obs = empty_obs(5);
        set(&mut obs, 1, 2, CellCode::CoPlayer);
        let mut stream = rng::stream(3);
        for _ in 0..50 {
            assert_eq!(act(&p, &obs, &mut stream), Action::Fire);
        }
    }

    #[test]
    fn wall_shields_from_the_beam_check() {
        let mut p = params();
        p.zap_propensity = 1.0;
        let mut obs = empty_obs(5);
        set(&mut obs, 1, 2, CellCode::Wall);
        set(&mut obs, 0, 2, CellCode::CoPlayer);
        let mut stream = rng::stream(3);
        for _ in 0..50 {
            assert_ne!(act(&p, &obs, &mut stream), Action::Fire);
        }
    }

    #[test]
    fn greedy_limit_picks_the_unique_best_move() {
        let mut p = params();
        p.exploration_temperature = 1e-6;
        let mut obs = empty_obs(5);
        set(&mut obs, 0, 2, CellCode::Resource(0));
        let mut stream = rng::stream(7);
        for _ in 0..200 {
            assert_eq!(act(&p, &obs, &mut stream), Action::MoveNorth);
        }
    }

    #[test]
    fn negative_approach_weight_avoids_closing_in() {
        let mut p = params();
        p.exploration_temperature = 1e-6;
        p.approach_weight = -2.0;
        let mut obs = empty_obs(5);
        // Co-player east of center: stepping east scores strictly worst, so
        // at near-zero temperature it is never chosen.
        set(&mut obs, 2, 4, CellCode::CoPlayer);
        obs.facing = Direction::South;
        let mut stream = rng::stream(7);
        for _ in 0..200 {
            assert_ne!(act(&p, &obs, &mut stream), Action::MoveEast);
        }
    }

    #[test]
    fn all_wall_window_still_yields_an_action() {
        let p = params();
        let obs = Observation {
            window: vec![CellCode::Wall; 25],
            side: 5,
            facing: Direction::North,
            own_inventory: Inventory::zeros(2),
            tick: 0,
        };
        let mut stream = rng::stream(1);
        for _ in 0..20 {
            let a = act(&p, &obs, &mut stream);
            assert!(matches!(
                a,
                Action::TurnLeft | Action::TurnRight | Action::NoOp
                    | Action::MoveNorth
                    | Action::MoveSouth
                    | Action::MoveEast
                    | Action::MoveWest
            ));
        }
    }

    #[test]
    fn fingerprint_tracks_content() {
        let p = params();
        let same = params();
        assert_eq!(p.fingerprint(), same.fingerprint());
        let mut other = params();
        other.approach_weight += 1e-9;
        assert_ne!(p.fingerprint(), other.fingerprint());
        assert_eq!(p.fingerprint().len(), 64);
    }

    #[test]
    fn validation_catches_bad_fields() {
        let mut p = params();
        p.exploration_temperature = 0.0;
        assert!(p.validate().is_err());
        let mut p = params();
        p.zap_propensity = 1.5;
        assert!(p.validate().is_err());
        let mut p = params();
        p.resource_weights[0] = f64::NAN;
        assert!(p.validate().is_err());
        assert!(params().validate().is_ok());
    }
}
