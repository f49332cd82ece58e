//! The step engine.
//!
//! Phase order inside one step is fixed: respawn countdowns, turns, moves,
//! collection, beams, regeneration, tick increment. Every random draw comes
//! from the state's own generator in a fixed order, so a (scenario, payoff,
//! seed, action sequence) tuple replays bitwise identically.

use alloc::vec::Vec;
use core::fmt;

use rand_chacha::ChaCha8Rng;

use crate::game::map::{CellKind, ScenarioMap};
use crate::game::payoff::{resolve_interaction, PayoffMatrix, PayoffMode};
use crate::game::{Action, Direction, GameEvent, Inventory};
use crate::rng;

#[derive(Clone, Debug, PartialEq)]
pub struct AgentState {
    pub row: usize,
    pub col: usize,
    pub facing: Direction,
    pub inventory: Inventory,
    /// `Some(n)`: absent from the grid, re-enters when the countdown hits 0.
    pub respawn_countdown: Option<u32>,
    pub beam_cooldown: u32,
    pub episode_reward: f64,
}

impl AgentState {
    pub fn is_active(&self) -> bool {
        self.respawn_countdown.is_none()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResourceCell {
    pub row: usize,
    pub col: usize,
    pub resource_type: u8,
    pub present: bool,
    pub regen_in: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridState {
    pub tick: u32,
    pub agents: [AgentState; 2],
    pub resources: Vec<ResourceCell>,
    pub payoff_mode: PayoffMode,
    rng: ChaCha8Rng,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    pub rewards: [f64; 2],
    pub events: Vec<GameEvent>,
}

/// What an agent sees: a square window centered on itself plus its own
/// inventory. The co-player's inventory is never exposed.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    /// Row-major (2r+1) x (2r+1) window; out-of-bounds cells read as wall.
    pub window: Vec<CellCode>,
    pub side: usize,
    pub facing: Direction,
    pub own_inventory: Inventory,
    pub tick: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CellCode {
    Wall,
    Floor,
    Resource(u8),
    CoPlayer,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepError {
    EpisodeOver { tick: u32, episode_length: u32 },
}

impl fmt::Display for StepError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepError::EpisodeOver {
                tick,
                episode_length,
            } => write!(
                f,
                "step at tick {tick} but the episode ends after {episode_length} steps"
            ),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for StepError {}

impl GridState {
    /// Places both agents on distinct spawn spots, materializes random
    /// resource cells, and zeroes all bookkeeping.
    pub fn reset(
        scenario: &ScenarioMap,
        payoff: &PayoffMatrix,
        mode: PayoffMode,
        seed: u64,
    ) -> GridState {
        let mut rng = rng::stream(seed);
        let n = scenario.spawns.len();
        let first = rng::uniform_index(&mut rng, n);
        let mut second = rng::uniform_index(&mut rng, n - 1);
        if second >= first {
            second += 1;
        }
        let dirs = [
            Direction::North,
            Direction::South,
            Direction::East,
            Direction::West,
        ];
        let make_agent = |spot: usize, rng: &mut ChaCha8Rng| AgentState {
            row: scenario.spawns[spot].0,
            col: scenario.spawns[spot].1,
            facing: dirs[rng::uniform_index(rng, 4)],
            inventory: Inventory::zeros(payoff.k),
            respawn_countdown: None,
            beam_cooldown: 0,
            episode_reward: 0.0,
        };
        let agent0 = make_agent(first, &mut rng);
        let agent1 = make_agent(second, &mut rng);

        let mut resources = Vec::new();
        for row in 0..scenario.height {
            for col in 0..scenario.width {
                match scenario.cell(row, col) {
                    CellKind::Resource(t) => resources.push(ResourceCell {
                        row,
                        col,
                        resource_type: t,
                        present: true,
                        regen_in: 0,
                    }),
                    CellKind::Random(set_idx) => {
                        let types = &scenario.random_sets[set_idx as usize].types;
                        let t = types[rng::uniform_index(&mut rng, types.len())];
                        resources.push(ResourceCell {
                            row,
                            col,
                            resource_type: t,
                            present: true,
                            regen_in: 0,
                        });
                    }
                    _ => {}
                }
            }
        }

        GridState {
            tick: 0,
            agents: [agent0, agent1],
            resources,
            payoff_mode: mode,
            rng,
        }
    }

    fn resource_at(&self, row: usize, col: usize) -> Option<usize> {
        self.resources
            .iter()
            .position(|r| r.row == row && r.col == col)
    }

    /// The cell an agent's beam reaches: scans along the facing direction up
    /// to beam_range, stopping at walls. Returns the co-player's index on a
    /// hit.
    fn beam_hit(&self, scenario: &ScenarioMap, shooter: usize) -> Option<usize> {
        let other = 1 - shooter;
        if !self.agents[other].is_active() {
            return None;
        }
        let (dr, dc) = self.agents[shooter].facing.delta();
        let (mut r, mut c) = (
            self.agents[shooter].row as i64,
            self.agents[shooter].col as i64,
        );
        for _ in 0..scenario.beam_range {
            r += dr;
            c += dc;
            if scenario.is_wall(r, c) {
                return None;
            }
            if self.agents[other].row as i64 == r && self.agents[other].col as i64 == c {
                return Some(other);
            }
        }
        None
    }

    fn reenter(&mut self, scenario: &ScenarioMap, agent: usize) {
        let other = 1 - agent;
        let blocked = if self.agents[other].is_active() {
            Some((self.agents[other].row, self.agents[other].col))
        } else {
            None
        };
        let free: Vec<(usize, usize)> = scenario
            .spawns
            .iter()
            .copied()
            .filter(|spot| Some(*spot) != blocked)
            .collect();
        let pick = rng::uniform_index(&mut self.rng, free.len());
        self.agents[agent].row = free[pick].0;
        self.agents[agent].col = free[pick].1;
        self.agents[agent].respawn_countdown = None;
    }

    /// Draws a pure strategy index from an inventory's counts.
    fn sample_pure(&mut self, inv: &Inventory) -> usize {
        let total = inv.total();
        debug_assert!(total > 0);
        let mut draw = rng::uniform_index(&mut self.rng, total as usize) as u64;
        for (i, c) in inv.counts.iter().enumerate() {
            let c = u64::from(*c);
            if draw < c {
                return i;
            }
            draw -= c;
        }
        unreachable!("draw bounded by the total count");
    }

    pub fn step(
        &mut self,
        scenario: &ScenarioMap,
        payoff: &PayoffMatrix,
        actions: [Action; 2],
    ) -> Result<StepOutcome, StepError> {
        if self.tick >= scenario.episode_length {
            return Err(StepError::EpisodeOver {
                tick: self.tick,
                episode_length: scenario.episode_length,
            });
        }
        let mut rewards = [0.0f64; 2];
        let mut events = Vec::new();

        // Countdowns: beam cooldowns run down; respawning agents re-enter
        // when theirs hits zero and act this very step.
        for i in 0..2 {
            self.agents[i].beam_cooldown = self.agents[i].beam_cooldown.saturating_sub(1);
            if let Some(cd) = self.agents[i].respawn_countdown {
                let cd = cd - 1;
                if cd == 0 {
                    self.reenter(scenario, i);
                } else {
                    self.agents[i].respawn_countdown = Some(cd);
                }
            }
        }

        // Turns.
        for i in 0..2 {
            if !self.agents[i].is_active() {
                continue;
            }
            match actions[i] {
                Action::TurnLeft => self.agents[i].facing = self.agents[i].facing.turned_left(),
                Action::TurnRight => self.agents[i].facing = self.agents[i].facing.turned_right(),
                _ => {}
            }
        }

        // Moves, processed in alternating priority order so simultaneous
        // conflicts resolve deterministically and fairly. Sequential
        // processing blocks swaps by itself: the first mover finds the other
        // agent still in place.
        let order = if self.tick % 2 == 0 { [0, 1] } else { [1, 0] };
        for i in order {
            if !self.agents[i].is_active() {
                continue;
            }
            let Some(dir) = actions[i].move_direction() else {
                continue;
            };
            self.agents[i].facing = dir;
            let (dr, dc) = dir.delta();
            let (tr, tc) = (self.agents[i].row as i64 + dr, self.agents[i].col as i64 + dc);
            if scenario.is_wall(tr, tc) {
                continue;
            }
            let other = &self.agents[1 - i];
            if other.is_active() && other.row as i64 == tr && other.col as i64 == tc {
                continue;
            }
            self.agents[i].row = tr as usize;
            self.agents[i].col = tc as usize;
        }

        // Collection: standing on a present resource picks it up.
        for i in 0..2 {
            if !self.agents[i].is_active() {
                continue;
            }
            let (row, col) = (self.agents[i].row, self.agents[i].col);
            if let Some(ri) = self.resource_at(row, col) {
                if self.resources[ri].present {
                    let t = self.resources[ri].resource_type;
                    self.resources[ri].present = false;
                    self.resources[ri].regen_in = scenario.regen_delay;
                    self.agents[i].inventory.add(t);
                    events.push(GameEvent::Collected {
                        agent: i,
                        resource: t,
                        row,
                        col,
                        tick: self.tick,
                    });
                }
            }
        }

        // Beams. Firing consumes the cooldown whether or not anything is
        // hit. A mutual zap resolves as one interaction with agent 0 as the
        // row player.
        let mut hits = [false; 2];
        for i in 0..2 {
            if actions[i] == Action::Fire
                && self.agents[i].is_active()
                && self.agents[i].beam_cooldown == 0
            {
                self.agents[i].beam_cooldown = scenario.beam_cooldown;
                hits[i] = self.beam_hit(scenario, i).is_some();
            }
        }
        let contact = match hits {
            [true, _] => Some((0usize, 1usize)),
            [false, true] => Some((1, 0)),
            _ => None,
        };
        if let Some((zapper, target)) = contact {
            let pair = match self.payoff_mode {
                PayoffMode::Mixed => resolve_interaction(
                    &self.agents[zapper].inventory,
                    &self.agents[target].inventory,
                    payoff,
                ),
                PayoffMode::Sampled => {
                    if self.agents[zapper].inventory.total() > 0
                        && self.agents[target].inventory.total() > 0
                    {
                        let inv_row = self.agents[zapper].inventory.clone();
                        let inv_col = self.agents[target].inventory.clone();
                        let i = self.sample_pure(&inv_row);
                        let j = self.sample_pure(&inv_col);
                        Some((payoff.row_payoff[i][j], payoff.row_payoff[j][i]))
                    } else {
                        None
                    }
                }
            };
            // An empty inventory on either side makes the hit inert.
            if let Some((r_row, r_col)) = pair {
                rewards[zapper] += r_row;
                rewards[target] += r_col;
                events.push(GameEvent::Interaction {
                    zapper,
                    target,
                    zapper_reward: r_row,
                    target_reward: r_col,
                    tick: self.tick,
                });
                for i in [zapper, target] {
                    self.agents[i].respawn_countdown = Some(scenario.respawn_delay);
                    self.agents[i].inventory.clear();
                }
            }
        }

        // Regeneration. Cells collected this very step keep their full
        // delay: only previously depleted cells count down.
        for r in &mut self.resources {
            if !r.present {
                if r.regen_in > 0 && !events.iter().any(|e| matches!(e, GameEvent::Collected { row, col, .. } if *row == r.row && *col == r.col)) {
                    r.regen_in -= 1;
                }
                if r.regen_in == 0 {
                    r.present = true;
                }
            }
        }

        for i in 0..2 {
            self.agents[i].episode_reward += rewards[i];
        }
        self.tick += 1;
        Ok(StepOutcome { rewards, events })
    }

    /// Builds the agent's view. A respawning agent sees an all-wall window
    /// and an empty inventory so policies stay total functions.
    pub fn observe(&self, scenario: &ScenarioMap, agent: usize) -> Observation {
        let radius = scenario.observation_radius;
        let side = 2 * radius + 1;
        let me = &self.agents[agent];
        if !me.is_active() {
            return Observation {
                window: alloc::vec![CellCode::Wall; side * side],
                side,
                facing: me.facing,
                own_inventory: Inventory::zeros(me.inventory.counts.len()),
                tick: self.tick,
            };
        }
        let other = &self.agents[1 - agent];
        let mut window = Vec::with_capacity(side * side);
        for wr in 0..side {
            for wc in 0..side {
                let gr = me.row as i64 + wr as i64 - radius as i64;
                let gc = me.col as i64 + wc as i64 - radius as i64;
                let code = if scenario.is_wall(gr, gc) {
                    CellCode::Wall
                } else if other.is_active()
                    && other.row as i64 == gr
                    && other.col as i64 == gc
                {
                    CellCode::CoPlayer
                } else {
                    let (gr, gc) = (gr as usize, gc as usize);
                    match self.resource_at(gr, gc) {
                        Some(ri) if self.resources[ri].present => {
                            CellCode::Resource(self.resources[ri].resource_type)
                        }
                        _ => CellCode::Floor,
                    }
                };
                window.push(code);
            }
        }
        Observation {
            window,
            side,
            facing: me.facing,
            own_inventory: me.inventory.clone(),
            tick: self.tick,
        }
    }
}
