use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{Cause, EnvKind, StepOutcome};

/// Episode step limit for every grid kind.
pub const MAX_STEPS: u32 = 100;

const OBSTACLES: usize = 3;

pub type Cell = [i32; 3];

/// Entity placement used to build a state directly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub agent: Cell,
    pub goal: Option<Cell>,
    pub obstacles: Vec<Cell>,
    pub keys: Vec<Cell>,
    pub target: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridState {
    kind: EnvKind,
    layout: Layout,
    steps: u32,
    done: bool,
    rng: ChaCha8Rng,
}

fn action_delta(action: usize) -> Cell {
    match action {
        0 => [0, 1, 0],
        1 => [0, -1, 0],
        2 => [-1, 0, 0],
        3 => [1, 0, 0],
        4 => [0, 0, 1],
        5 => [0, 0, -1],
        _ => [0, 0, 0],
    }
}

impl GridState {
    pub fn reset(kind: EnvKind, seed: u64) -> Self {
        assert!(kind.is_grid(), "{kind} is not a grid environment");
        let mut rng = crate::rng::stream(seed, 0x6772_6964);
        let [nx, ny, nz] = kind.dims();
        let mut cells: Vec<Cell> = Vec::with_capacity(nx * ny * nz);
        for z in 0..nz {
            for y in 0..ny {
                for x in 0..nx {
                    cells.push([x as i32, y as i32, z as i32]);
                }
            }
        }
        let entities = match kind {
            EnvKind::G2k => 3,
            _ => 2 + OBSTACLES,
        };
        let (picked, _) = cells.partial_shuffle(&mut rng, entities);
        let picked = picked.to_vec();
        let layout = match kind {
            EnvKind::G2k => Layout {
                agent: picked[0],
                goal: None,
                obstacles: Vec::new(),
                keys: picked[1..3].to_vec(),
                target: rng.gen_range(0..2u8),
            },
            _ => Layout {
                agent: picked[0],
                goal: Some(picked[1]),
                obstacles: picked[2..].to_vec(),
                keys: Vec::new(),
                target: 0,
            },
        };
        Self { kind, layout, steps: 0, done: false, rng }
    }

    /// Builds a state from an explicit placement. Positions must be in
    /// bounds and distinct.
    pub fn with_layout(kind: EnvKind, layout: Layout, seed: u64) -> Self {
        let state = Self { kind, layout, steps: 0, done: false, rng: crate::rng::stream(seed, 0x6772_6964) };
        let all = state.occupied();
        for (i, c) in all.iter().enumerate() {
            assert!(state.in_bounds(*c), "cell {c:?} out of bounds");
            assert!(!all[..i].contains(c), "cell {c:?} occupied twice");
        }
        state
    }

    fn occupied(&self) -> Vec<Cell> {
        let l = &self.layout;
        let mut all = Vec::with_capacity(6);
        all.push(l.agent);
        all.extend(l.goal);
        all.extend_from_slice(&l.obstacles);
        all.extend_from_slice(&l.keys);
        all
    }

    pub fn kind(&self) -> EnvKind {
        self.kind
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn steps(&self) -> u32 {
        self.steps
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    fn in_bounds(&self, c: Cell) -> bool {
        let d = self.kind.dims();
        (0..3).all(|a| c[a] >= 0 && (c[a] as usize) < d[a])
    }

    fn is_free_for_obstacle(&self, c: Cell) -> bool {
        let l = &self.layout;
        self.in_bounds(c) && c != l.agent && l.goal != Some(c) && !l.obstacles.contains(&c)
    }

    pub(super) fn step(&mut self, action: usize) -> StepOutcome {
        self.steps += 1;
        let delta = action_delta(action);
        let next = [self.layout.agent[0] + delta[0], self.layout.agent[1] + delta[1], self.layout.agent[2] + delta[2]];
        if self.in_bounds(next) {
            self.layout.agent = next;
        }
        let agent = self.layout.agent;

        let outcome = if self.layout.goal == Some(agent) {
            Some(StepOutcome::end(1.0, Cause::Goal))
        } else if self.layout.obstacles.contains(&agent) {
            Some(StepOutcome::end(0.0, Cause::Collision))
        } else if let Some(k) = self.layout.keys.iter().position(|&c| c == agent) {
            if k == self.layout.target as usize {
                Some(StepOutcome::end(1.0, Cause::Goal))
            } else {
                Some(StepOutcome::end(0.0, Cause::WrongKey))
            }
        } else {
            None
        };
        if let Some(o) = outcome {
            self.done = true;
            return o;
        }

        self.move_obstacles();

        if self.steps >= MAX_STEPS {
            self.done = true;
            return StepOutcome::end(0.0, Cause::Timeout);
        }
        StepOutcome::ongoing(0.0)
    }

    // Each obstacle in turn picks a uniformly random free neighbour, never
    // the agent, the goal or another obstacle; it stays put when boxed in.
    fn move_obstacles(&mut self) {
        let dims = if self.kind.dims()[2] > 1 { 6 } else { 4 };
        let mut options: Vec<Cell> = Vec::with_capacity(6);
        for i in 0..self.layout.obstacles.len() {
            let here = self.layout.obstacles[i];
            options.clear();
            for a in 0..dims {
                let d = action_delta(a);
                let c = [here[0] + d[0], here[1] + d[1], here[2] + d[2]];
                if self.is_free_for_obstacle(c) {
                    options.push(c);
                }
            }
            if let Some(&c) = options.choose(&mut self.rng) {
                self.layout.obstacles[i] = c;
            }
        }
    }

    pub(super) fn observe_into(&self, out: &mut Vec<f64>) {
        let dims = self.kind.dims();
        let axes = if dims[2] > 1 { 3 } else { 2 };
        let agent = self.layout.agent;
        let mut push = |c: Cell| {
            for a in 0..axes {
                out.push(f64::from(c[a] - agent[a]) / (dims[a] - 1) as f64);
            }
        };
        if let Some(g) = self.layout.goal {
            push(g);
        }
        for &o in &self.layout.obstacles {
            push(o);
        }
        for &k in &self.layout.keys {
            push(k);
        }
        if self.kind == EnvKind::G2k {
            out.push(if self.layout.target == 0 { -1.0 } else { 1.0 });
        }
    }
}
