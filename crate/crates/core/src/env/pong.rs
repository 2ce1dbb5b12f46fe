use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{Cause, StepOutcome};

/// Physics constants for the symbolic Pong court, normalised to `[0, 1]^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PongConfig {
    pub paddle_height: f64,
    pub paddle_speed: f64,
    /// Speed of the scripted opponent that follows the ball centre.
    pub opponent_speed: f64,
    /// Horizontal ball speed; the vertical component is bounded by the same value.
    pub ball_speed: f64,
    pub points_to_win: u32,
    /// Hard cap on ticks per game.
    pub max_ticks: u32,
}

impl Default for PongConfig {
    fn default() -> Self {
        Self {
            paddle_height: 0.2,
            paddle_speed: 0.04,
            opponent_speed: 0.01,
            ball_speed: 0.03,
            points_to_win: 21,
            max_ticks: 50_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PongState {
    cfg: PongConfig,
    mask_opponent: bool,
    agent_y: f64,
    opponent_y: f64,
    ball: [f64; 4],
    agent_score: u32,
    opponent_score: u32,
    ticks: u32,
    done: bool,
    rng: ChaCha8Rng,
}

impl PongState {
    pub fn reset(cfg: PongConfig, mask_opponent: bool, seed: u64) -> Self {
        let rng = crate::rng::stream(seed, 0x706f_6e67);
        let mut s = Self {
            cfg,
            mask_opponent,
            agent_y: 0.5,
            opponent_y: 0.5,
            ball: [0.5, 0.5, 0.0, 0.0],
            agent_score: 0,
            opponent_score: 0,
            ticks: 0,
            done: false,
            rng,
        };
        s.serve();
        s
    }

    fn serve(&mut self) {
        let v = self.cfg.ball_speed;
        let dir = if self.rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let vy = self.rng.gen_range(-v..=v);
        let y = self.rng.gen_range(0.25..=0.75);
        self.ball = [0.5, y, dir * v, vy];
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn ticks(&self) -> u32 {
        self.ticks
    }

    pub fn scores(&self) -> (u32, u32) {
        (self.agent_score, self.opponent_score)
    }

    fn clamp_paddle(&self, y: f64) -> f64 {
        let h = self.cfg.paddle_height / 2.0;
        y.clamp(h, 1.0 - h)
    }

    fn deflect(&mut self, paddle_y: f64) -> bool {
        let h = self.cfg.paddle_height / 2.0;
        let offset = self.ball[1] - paddle_y;
        if offset.abs() > h {
            return false;
        }
        self.ball[2] = -self.ball[2];
        self.ball[3] = self.cfg.ball_speed * (offset / h);
        true
    }

    pub(super) fn step(&mut self, action: usize) -> StepOutcome {
        self.ticks += 1;
        let dy = match action {
            0 => self.cfg.paddle_speed,
            1 => -self.cfg.paddle_speed,
            _ => 0.0,
        };
        self.agent_y = self.clamp_paddle(self.agent_y + dy);
        let chase = (self.ball[1] - self.opponent_y).clamp(-self.cfg.opponent_speed, self.cfg.opponent_speed);
        self.opponent_y = self.clamp_paddle(self.opponent_y + chase);

        self.ball[0] += self.ball[2];
        self.ball[1] += self.ball[3];
        if self.ball[1] < 0.0 {
            self.ball[1] = -self.ball[1];
            self.ball[3] = -self.ball[3];
        } else if self.ball[1] > 1.0 {
            self.ball[1] = 2.0 - self.ball[1];
            self.ball[3] = -self.ball[3];
        }

        let mut reward = 0.0;
        if self.ball[0] <= 0.0 {
            if self.deflect(self.agent_y) {
                self.ball[0] = -self.ball[0];
            } else {
                self.opponent_score += 1;
                reward = -1.0;
                self.serve();
            }
        } else if self.ball[0] >= 1.0 {
            if self.deflect(self.opponent_y) {
                self.ball[0] = 2.0 - self.ball[0];
            } else {
                self.agent_score += 1;
                reward = 1.0;
                self.serve();
            }
        }

        let target = self.cfg.points_to_win;
        if self.agent_score >= target || self.opponent_score >= target {
            self.done = true;
            return StepOutcome::end(reward, Cause::GameOver);
        }
        if self.ticks >= self.cfg.max_ticks {
            self.done = true;
            return StepOutcome::end(reward, Cause::Timeout);
        }
        StepOutcome::ongoing(reward)
    }

    pub(super) fn observe_into(&self, out: &mut Vec<f64>) {
        let v = self.cfg.ball_speed;
        out.push(self.agent_y);
        if !self.mask_opponent {
            out.push(self.opponent_y);
        }
        out.extend_from_slice(&[self.ball[0], self.ball[1], self.ball[2] / v, self.ball[3] / v]);
    }
}
