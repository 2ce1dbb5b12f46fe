use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;

use super::policy;
use crate::env::{EnvConfig, EnvState};
use crate::mlp::{ForwardCache, SpatialMlp};
use crate::rng;
use crate::Result;

/// A batch of independently seeded environments stepped in lockstep.
#[derive(Debug, Clone)]
pub struct EnvPool {
    cfg: EnvConfig,
    seed: u64,
    envs: Vec<EnvState>,
    obs: Vec<Vec<f64>>,
    episodes: Vec<u64>,
    running_return: Vec<f64>,
}

impl EnvPool {
    pub fn new(cfg: EnvConfig, num_envs: usize, seed: u64) -> Self {
        let envs: Vec<EnvState> =
            (0..num_envs).map(|e| EnvState::reset(&cfg, Self::episode_seed(seed, e, 0))).collect();
        let obs = envs.iter().map(EnvState::observe).collect();
        Self { cfg, seed, envs, obs, episodes: vec![0; num_envs], running_return: vec![0.0; num_envs] }
    }

    fn episode_seed(seed: u64, env: usize, episode: u64) -> u64 {
        rng::derive(rng::derive(seed, env as u64), episode)
    }

    pub fn len(&self) -> usize {
        self.envs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.envs.is_empty()
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    /// Steps env `e`, resetting it on termination. Returns `(reward, done,
    /// finished episode return)`.
    fn step(&mut self, e: usize, action: usize) -> Result<(f64, bool, Option<f64>)> {
        let out = self.envs[e].step(action)?;
        self.running_return[e] += out.reward;
        let mut finished = None;
        if out.done {
            finished = Some(self.running_return[e]);
            self.running_return[e] = 0.0;
            self.episodes[e] += 1;
            self.envs[e] = EnvState::reset(&self.cfg, Self::episode_seed(self.seed, e, self.episodes[e]));
        }
        self.envs[e].observe_into(&mut self.obs[e]);
        Ok((out.reward, out.done, finished))
    }
}

/// On-policy experience laid out time-major: index `t * num_envs + e`.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutBatch {
    pub num_envs: usize,
    pub steps: usize,
    pub obs_len: usize,
    pub obs: Vec<f64>,
    pub actions: Vec<usize>,
    pub log_probs: Vec<f64>,
    pub values: Vec<f64>,
    pub rewards: Vec<f64>,
    pub dones: Vec<bool>,
    /// Critic value of the observation after the last step, per env.
    pub bootstrap: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
    /// Returns of episodes that finished during collection.
    pub episode_returns: Vec<f64>,
}

impl RolloutBatch {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn obs_row(&self, k: usize) -> &[f64] {
        &self.obs[k * self.obs_len..(k + 1) * self.obs_len]
    }
}

/// Runs `steps` lockstep steps of sampled actions in every env of the pool.
pub fn collect_rollout(
    actor: &SpatialMlp,
    critic: &SpatialMlp,
    pool: &mut EnvPool,
    steps: usize,
    rng: &mut ChaCha8Rng,
) -> Result<RolloutBatch> {
    let n = pool.len();
    let obs_len = pool.cfg.obs_len();
    let total = n * steps;
    let mut batch = RolloutBatch {
        num_envs: n,
        steps,
        obs_len,
        obs: Vec::with_capacity(total * obs_len),
        actions: Vec::with_capacity(total),
        log_probs: Vec::with_capacity(total),
        values: Vec::with_capacity(total),
        rewards: Vec::with_capacity(total),
        dones: Vec::with_capacity(total),
        bootstrap: Vec::with_capacity(n),
        advantages: Vec::new(),
        returns: Vec::new(),
        episode_returns: Vec::new(),
    };
    let mut a_cache = ForwardCache::new(actor);
    let mut c_cache = ForwardCache::new(critic);
    let mut logp = vec![0.0; actor.output_len()];
    for _ in 0..steps {
        for e in 0..n {
            actor.forward_cached(&pool.obs[e], &mut a_cache)?;
            critic.forward_cached(&pool.obs[e], &mut c_cache)?;
            policy::log_softmax(a_cache.logits(), &mut logp);
            let action = policy::sample(&logp, rng);
            batch.obs.extend_from_slice(&pool.obs[e]);
            batch.actions.push(action);
            batch.log_probs.push(logp[action]);
            batch.values.push(c_cache.logits()[0]);
            let (reward, done, finished) = pool.step(e, action)?;
            batch.rewards.push(reward);
            batch.dones.push(done);
            batch.episode_returns.extend(finished);
        }
    }
    for e in 0..n {
        critic.forward_cached(&pool.obs[e], &mut c_cache)?;
        batch.bootstrap.push(c_cache.logits()[0]);
    }
    Ok(batch)
}

/// Generalised advantage estimation; episode ends cut both the bootstrap
/// and the trace.
pub fn compute_gae(batch: &mut RolloutBatch, gamma: f64, lambda: f64) {
    let n = batch.num_envs;
    let total = batch.len();
    batch.advantages = vec![0.0; total];
    batch.returns = vec![0.0; total];
    for e in 0..n {
        let mut next_value = batch.bootstrap[e];
        let mut acc = 0.0;
        for t in (0..batch.steps).rev() {
            let k = t * n + e;
            let live = if batch.dones[k] { 0.0 } else { 1.0 };
            let delta = batch.rewards[k] + gamma * next_value * live - batch.values[k];
            acc = delta + gamma * lambda * live * acc;
            batch.advantages[k] = acc;
            batch.returns[k] = acc + batch.values[k];
            next_value = batch.values[k];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn empty_batch(num_envs: usize, steps: usize) -> RolloutBatch {
        let total = num_envs * steps;
        RolloutBatch {
            num_envs,
            steps,
            obs_len: 0,
            obs: Vec::new(),
            actions: vec![0; total],
            log_probs: vec![0.0; total],
            values: vec![0.0; total],
            rewards: vec![0.0; total],
            dones: vec![false; total],
            bootstrap: vec![0.0; num_envs],
            advantages: Vec::new(),
            returns: Vec::new(),
            episode_returns: Vec::new(),
        }
    }

    #[test]
    fn zero_rewards_zero_values_give_zero_advantages() {
        let mut b = empty_batch(3, 5);
        compute_gae(&mut b, 0.99, 0.95);
        assert!(b.advantages.iter().all(|&a| a == 0.0));
    }

    #[test]
    fn single_terminal_step() {
        let mut b = empty_batch(1, 1);
        b.rewards[0] = 1.0;
        b.dones[0] = true;
        b.bootstrap[0] = 7.0;
        compute_gae(&mut b, 0.99, 0.95);
        assert_eq!(b.advantages, [1.0]);
        assert_eq!(b.returns, [1.0]);
    }

    // O(T^2) oracle: A_t = sum_{l>=0} (gamma*lambda)^l delta_{t+l}, truncated at
    // the first episode end.
    fn direct_sum(b: &RolloutBatch, gamma: f64, lambda: f64) -> Vec<f64> {
        let n = b.num_envs;
        let mut out = vec![0.0; b.len()];
        for e in 0..n {
            let value_at = |t: usize| if t == b.steps { b.bootstrap[e] } else { b.values[t * n + e] };
            for t in 0..b.steps {
                let mut sum = 0.0;
                let mut coef = 1.0;
                for u in t..b.steps {
                    let k = u * n + e;
                    let next = if b.dones[k] { 0.0 } else { value_at(u + 1) };
                    let delta = b.rewards[k] + gamma * next - b.values[k];
                    sum += coef * delta;
                    if b.dones[k] {
                        break;
                    }
                    coef *= gamma * lambda;
                }
                out[t * n + e] = sum;
            }
        }
        out
    }

    #[test]
    fn gae_matches_direct_summation() {
        let mut rng = crate::rng::stream(42, 0);
        for _ in 0..20 {
            let mut b = empty_batch(4, 37);
            for k in 0..b.len() {
                b.rewards[k] = if rng.gen_bool(0.1) { 1.0 } else { 0.0 };
                b.values[k] = rng.gen_range(-1.0..1.0);
                b.dones[k] = rng.gen_bool(0.08);
            }
            for v in &mut b.bootstrap {
                *v = rng.gen_range(-1.0..1.0);
            }
            compute_gae(&mut b, 0.99, 0.95);
            let oracle = direct_sum(&b, 0.99, 0.95);
            for (a, o) in b.advantages.iter().zip(&oracle) {
                assert!((a - o).abs() < 1e-10);
            }
        }
    }
}
