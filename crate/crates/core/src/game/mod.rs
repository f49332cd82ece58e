//! Two-player gridworld where matrix-game payoffs resolve on beam contact.

pub mod engine;
pub mod map;
pub mod payoff;

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

/// Grid directions. Row 0 is the top of the map, so north decreases the row.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    North,
    South,
    East,
    West,
}

impl Direction {
    pub fn delta(self) -> (i64, i64) {
        match self {
            Direction::North => (-1, 0),
            Direction::South => (1, 0),
            Direction::East => (0, 1),
            Direction::West => (0, -1),
        }
    }

    pub fn turned_left(self) -> Direction {
        match self {
            Direction::North => Direction::West,
            Direction::West => Direction::South,
            Direction::South => Direction::East,
            Direction::East => Direction::North,
        }
    }

    pub fn turned_right(self) -> Direction {
        match self {
            Direction::North => Direction::East,
            Direction::East => Direction::South,
            Direction::South => Direction::West,
            Direction::West => Direction::North,
        }
    }
}

/// Everything an agent can do in one tick. Moves also set the facing
/// direction; turns only rotate it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Action {
    MoveNorth,
    MoveSouth,
    MoveEast,
    MoveWest,
    TurnLeft,
    TurnRight,
    NoOp,
    Fire,
}

impl Action {
    pub fn move_direction(self) -> Option<Direction> {
        match self {
            Action::MoveNorth => Some(Direction::North),
            Action::MoveSouth => Some(Direction::South),
            Action::MoveEast => Some(Direction::East),
            Action::MoveWest => Some(Direction::West),
            _ => None,
        }
    }
}

/// Per-agent resource counts. The normalized counts are the mixed strategy
/// played when an interaction fires.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Inventory {
    pub counts: Vec<u32>,
}

impl Inventory {
    pub fn zeros(k: usize) -> Inventory {
        Inventory { counts: vec![0; k] }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|c| u64::from(*c)).sum()
    }

    pub fn add(&mut self, resource_type: u8) {
        self.counts[resource_type as usize] += 1;
    }

    pub fn clear(&mut self) {
        for c in &mut self.counts {
            *c = 0;
        }
    }

    /// Mixed-strategy weights, or `None` while the inventory is empty.
    pub fn mixed_weights(&self) -> Option<Vec<f64>> {
        let total = self.total();
        if total == 0 {
            return None;
        }
        Some(
            self.counts
                .iter()
                .map(|c| f64::from(*c) / total as f64)
                .collect(),
        )
    }
}

/// Records emitted by the engine for bookkeeping and audits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum GameEvent {
    Collected {
        agent: usize,
        resource: u8,
        row: usize,
        col: usize,
        tick: u32,
    },
    /// A beam contact that resolved a payoff. The zapper is the row player.
    Interaction {
        zapper: usize,
        target: usize,
        zapper_reward: f64,
        target_reward: f64,
        tick: u32,
    },
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn turns_compose_to_identity() {
        for d in [
            Direction::North,
            Direction::South,
            Direction::East,
            Direction::West,
        ] {
            assert_eq!(d.turned_left().turned_right(), d);
            assert_eq!(
                d.turned_left().turned_left(),
                d.turned_right().turned_right()
            );
        }
    }

    #[test]
    fn mixed_weights_normalize() {
        let mut inv = Inventory::zeros(2);
        assert_eq!(inv.mixed_weights(), None);
        inv.add(0);
        inv.add(0);
        inv.add(1);
        let nu = inv.mixed_weights().unwrap();
        assert!((nu[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((nu[1] - 1.0 / 3.0).abs() < 1e-12);
        assert!((nu.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
