//! Symbolic environments with sparse rewards and axis-grouped actions.
//!
//! Every environment is a pure state machine: the state owns its random
//! stream, so two states reset from the same `(kind, seed)` evolve
//! identically under the same actions.

mod grid;
mod pong;

use alloc::vec::Vec;
use core::fmt;

pub use grid::{GridState, MAX_STEPS};
pub use pong::{PongConfig, PongState};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EnvKind {
    /// Dynamic obstacles, 4x4.
    Do,
    /// Dynamic obstacles, 3x3x2.
    Do3d,
    /// Go to the target one of two keys, 4x4.
    G2k,
    Pong,
}

impl EnvKind {
    pub const ALL: [EnvKind; 4] = [EnvKind::Do, EnvKind::Do3d, EnvKind::G2k, EnvKind::Pong];

    pub fn name(self) -> &'static str {
        match self {
            EnvKind::Do => "do",
            EnvKind::Do3d => "do3d",
            EnvKind::G2k => "g2k",
            EnvKind::Pong => "pong",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name().eq_ignore_ascii_case(name))
    }

    /// Grid extent along x, y, z. Pong has no grid and reports `[1, 1, 1]`.
    pub fn dims(self) -> [usize; 3] {
        match self {
            EnvKind::Do | EnvKind::G2k => [4, 4, 1],
            EnvKind::Do3d => [3, 3, 2],
            EnvKind::Pong => [1, 1, 1],
        }
    }

    pub fn action_count(self) -> usize {
        match self {
            EnvKind::Do | EnvKind::G2k => 4,
            EnvKind::Do3d => 6,
            EnvKind::Pong => 3,
        }
    }

    pub fn obs_len(self, mask_opponent: bool) -> usize {
        match self {
            EnvKind::Do => 8,
            EnvKind::Do3d => 12,
            EnvKind::G2k => 5,
            EnvKind::Pong if mask_opponent => 5,
            EnvKind::Pong => 6,
        }
    }

    pub fn is_grid(self) -> bool {
        self != EnvKind::Pong
    }

    /// Human-readable names for the observation features, in order.
    pub fn feature_names(self, mask_opponent: bool) -> Vec<&'static str> {
        match self {
            EnvKind::Do => ["goal x", "goal y", "obs1 x", "obs1 y", "obs2 x", "obs2 y", "obs3 x", "obs3 y"].to_vec(),
            EnvKind::Do3d => [
                "goal x", "goal y", "goal z", "obs1 x", "obs1 y", "obs1 z", "obs2 x", "obs2 y", "obs2 z", "obs3 x",
                "obs3 y", "obs3 z",
            ]
            .to_vec(),
            EnvKind::G2k => ["key0 x", "key0 y", "key1 x", "key1 y", "key id"].to_vec(),
            EnvKind::Pong if mask_opponent => ["agent y", "ball x", "ball y", "ball vx", "ball vy"].to_vec(),
            EnvKind::Pong => ["agent y", "opponent y", "ball x", "ball y", "ball vx", "ball vy"].to_vec(),
        }
    }

    pub fn action_names(self) -> &'static [&'static str] {
        match self {
            EnvKind::Do | EnvKind::G2k => &["up", "down", "left", "right"],
            EnvKind::Do3d => &["up", "down", "left", "right", "fwd", "bwd"],
            EnvKind::Pong => &["up", "down", "noop"],
        }
    }
}

impl fmt::Display for EnvKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Set of actions that move along one spatial axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AxisGroup {
    UpDown,
    LeftRight,
    FwdBwd,
    Noop,
}

impl AxisGroup {
    pub fn label(self) -> &'static str {
        match self {
            AxisGroup::UpDown => "up/down",
            AxisGroup::LeftRight => "left/right",
            AxisGroup::FwdBwd => "fwd/bwd",
            AxisGroup::Noop => "noop",
        }
    }
}

/// Axis group of every action index, in action order.
pub fn axis_groups(kind: EnvKind) -> Vec<AxisGroup> {
    use AxisGroup::*;
    match kind {
        EnvKind::Do | EnvKind::G2k => [UpDown, UpDown, LeftRight, LeftRight].to_vec(),
        EnvKind::Do3d => [UpDown, UpDown, LeftRight, LeftRight, FwdBwd, FwdBwd].to_vec(),
        EnvKind::Pong => [UpDown, UpDown, Noop].to_vec(),
    }
}

/// Distinct groups for a kind, in first-appearance order.
pub fn group_list(kind: EnvKind) -> Vec<AxisGroup> {
    let mut out: Vec<AxisGroup> = Vec::new();
    for g in axis_groups(kind) {
        if !out.contains(&g) {
            out.push(g);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cause {
    Goal,
    Collision,
    WrongKey,
    Timeout,
    GameOver,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub reward: f64,
    pub done: bool,
    pub cause: Cause,
}

impl StepOutcome {
    pub(crate) fn ongoing(reward: f64) -> Self {
        Self { reward, done: false, cause: Cause::None }
    }

    pub(crate) fn end(reward: f64, cause: Cause) -> Self {
        Self { reward, done: true, cause }
    }
}

/// Options that select and parameterise an environment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvConfig {
    pub kind: EnvKind,
    /// Drops the opponent paddle from Pong observations.
    pub mask_opponent: bool,
    pub pong: PongConfig,
}

impl EnvConfig {
    pub fn new(kind: EnvKind) -> Self {
        Self { kind, mask_opponent: false, pong: PongConfig::default() }
    }

    pub fn obs_len(&self) -> usize {
        self.kind.obs_len(self.mask_opponent)
    }

    pub fn action_count(&self) -> usize {
        self.kind.action_count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EnvState {
    Grid(GridState),
    Pong(PongState),
}

impl EnvState {
    pub fn reset(cfg: &EnvConfig, seed: u64) -> Self {
        match cfg.kind {
            EnvKind::Pong => EnvState::Pong(PongState::reset(cfg.pong, cfg.mask_opponent, seed)),
            kind => EnvState::Grid(GridState::reset(kind, seed)),
        }
    }

    pub fn kind(&self) -> EnvKind {
        match self {
            EnvState::Grid(g) => g.kind(),
            EnvState::Pong(_) => EnvKind::Pong,
        }
    }

    pub fn is_done(&self) -> bool {
        match self {
            EnvState::Grid(g) => g.is_done(),
            EnvState::Pong(p) => p.is_done(),
        }
    }

    pub fn steps(&self) -> u32 {
        match self {
            EnvState::Grid(g) => g.steps(),
            EnvState::Pong(p) => p.ticks(),
        }
    }

    pub fn step(&mut self, action: usize) -> Result<StepOutcome> {
        let actions = self.kind().action_count();
        if action >= actions {
            return Err(Error::InvalidAction { action, actions });
        }
        if self.is_done() {
            return Err(Error::EpisodeDone);
        }
        Ok(match self {
            EnvState::Grid(g) => g.step(action),
            EnvState::Pong(p) => p.step(action),
        })
    }

    pub fn observe(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.observe_into(&mut out);
        out
    }

    pub fn observe_into(&self, out: &mut Vec<f64>) {
        out.clear();
        match self {
            EnvState::Grid(g) => g.observe_into(out),
            EnvState::Pong(p) => p.observe_into(out),
        }
    }
}

/// Resets an environment and returns the state with its first observation.
pub fn reset(cfg: &EnvConfig, seed: u64) -> (EnvState, Vec<f64>) {
    let state = EnvState::reset(cfg, seed);
    let obs = state.observe();
    (state, obs)
}
