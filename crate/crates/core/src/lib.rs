//! Core kernels for the influence workbench: a grid matrix-game simulator,
//! a deterministic (1+1) hill-climb trainer with self-play and population
//! exchange, reward-distribution estimators for the level-of-influence
//! metric, fixed-opponent evaluation, from-scratch significance tests, and
//! the influence-guided budget allocator.
//!
//! The crate is `no_std`-compatible (requires `alloc`). The `std` feature,
//! on by default, only adds `std::error::Error` impls for the error types.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod allocator;
pub mod eval;
pub mod game;
pub mod loi;
pub mod policy;
pub mod pool;
pub mod rng;
pub mod rollout;
pub mod stats;
pub mod trainer;

pub use game::{
    engine::{GridState, StepOutcome},
    map::{CellKind, MapError, ScenarioMap},
    payoff::{PayoffMatrix, PayoffMode},
    Action, GameEvent,
};
pub use policy::PolicyParams;
