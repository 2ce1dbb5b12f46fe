//! PPO training with a scheduled connection cost, periodic relocation,
//! magnitude pruning and an unregularised fine-tuning phase.

mod adam;
mod loss;
pub mod policy;
mod prune;
mod rollout;

use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

pub use adam::Adam;
pub use loss::{clipped_surrogate, minibatch_loss, standardise, LossCoefs, LossStats, Minibatch};
pub use prune::{prune, PruneReport};
pub use rollout::{collect_rollout, compute_gae, EnvPool, RolloutBatch};

use crate::env::{Cause, EnvConfig, EnvState};
use crate::mlp::{Activation, ActivationTrace, ForwardCache, Gradients, InitScheme, SpatialMlp, TraceSource};
use crate::regularizer::{self, RegConfig};
use crate::{rng, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub num_envs: usize,
    pub steps_per_env: usize,
    pub minibatches: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub adam_eps: f64,
    pub max_grad_norm: f64,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub clip_eps: f64,
    pub ent_coef: f64,
    pub vf_coef: f64,
    /// Frames in the regularised phase.
    pub train_frames: u64,
    /// Frames in the unregularised phase after pruning.
    pub finetune_frames: u64,
    pub prune_fraction: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden: [32, 32].to_vec(),
            activation: Activation::Tanh,
            num_envs: 16,
            steps_per_env: 128,
            minibatches: 8,
            epochs: 16,
            learning_rate: 5e-4,
            adam_eps: 1e-5,
            max_grad_norm: 0.5,
            gamma: 0.99,
            gae_lambda: 0.95,
            clip_eps: 0.2,
            ent_coef: 0.01,
            vf_coef: 0.5,
            train_frames: 4_000_000,
            finetune_frames: 2_000_000,
            prune_fraction: 0.01,
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// Pong settings: 16 hidden units, smaller steps and clipping, 10M + 10M frames.
    pub fn pong() -> Self {
        Self {
            hidden: [16, 16].to_vec(),
            learning_rate: 1e-5,
            max_grad_norm: 0.1,
            train_frames: 10_000_000,
            finetune_frames: 10_000_000,
            ..Self::default()
        }
    }

    pub fn batch_size(&self) -> usize {
        self.num_envs * self.steps_per_env
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if self.num_envs == 0 || self.steps_per_env == 0 || self.minibatches == 0 || self.epochs == 0 {
            return bad("num_envs, steps_per_env, minibatches and epochs must be positive");
        }
        if !self.batch_size().is_multiple_of(self.minibatches) {
            return bad("batch size must be divisible by minibatches");
        }
        if !(0.0..1.0).contains(&self.prune_fraction) {
            return bad("prune_fraction must lie in [0, 1)");
        }
        if self.hidden.contains(&0) {
            return bad("hidden layers must be non-empty");
        }
        if !(self.learning_rate > 0.0 && self.max_grad_norm > 0.0) {
            return bad("learning_rate and max_grad_norm must be positive");
        }
        if !(0.0..=1.0).contains(&self.gamma) || !(0.0..=1.0).contains(&self.gae_lambda) {
            return bad("gamma and gae_lambda must lie in [0, 1]");
        }
        Ok(())
    }

    pub fn coefs(&self) -> LossCoefs {
        LossCoefs { clip_eps: self.clip_eps, ent_coef: self.ent_coef, vf_coef: self.vf_coef }
    }

    /// Number of whole updates that fit in `frames`.
    pub fn updates(&self, frames: u64) -> usize {
        (frames / self.batch_size() as u64) as usize
    }

    pub fn layer_sizes(&self, env: &EnvConfig, outputs: usize) -> Vec<usize> {
        let mut sizes = Vec::with_capacity(self.hidden.len() + 2);
        sizes.push(env.obs_len());
        sizes.extend_from_slice(&self.hidden);
        sizes.push(outputs);
        sizes
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Train,
    Finetune,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Train => "train",
            Phase::Finetune => "finetune",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateMetrics {
    pub update: usize,
    pub frames: u64,
    pub phase: Phase,
    /// Mean return of episodes finished during this update's rollout;
    /// NaN when none finished.
    pub mean_return: f64,
    pub loss_total: f64,
    pub loss_cc: f64,
    pub lambda: f64,
    pub sparsity_frac: f64,
}

/// Actor, critic and optimiser state for one training run.
#[derive(Debug, Clone)]
pub struct Learner {
    pub actor: SpatialMlp,
    pub critic: SpatialMlp,
    actor_opt: Adam,
    critic_opt: Adam,
    actor_grads: Gradients,
    critic_grads: Gradients,
}

impl Learner {
    pub fn new(env: &EnvConfig, cfg: &TrainConfig) -> Result<Self> {
        let actor = SpatialMlp::new(
            &cfg.layer_sizes(env, env.action_count()),
            cfg.activation,
            InitScheme::actor(),
            rng::derive(cfg.seed, 1),
        )?;
        let critic =
            SpatialMlp::new(&cfg.layer_sizes(env, 1), cfg.activation, InitScheme::critic(), rng::derive(cfg.seed, 2))?;
        Ok(Self::from_nets(actor, critic, cfg))
    }

    pub fn from_nets(actor: SpatialMlp, critic: SpatialMlp, cfg: &TrainConfig) -> Self {
        Self {
            actor_opt: Adam::new(&actor, cfg.learning_rate, cfg.adam_eps),
            critic_opt: Adam::new(&critic, cfg.learning_rate, cfg.adam_eps),
            actor_grads: Gradients::zeros(&actor),
            critic_grads: Gradients::zeros(&critic),
            actor,
            critic,
        }
    }

    /// Restarts both optimisers, e.g. after pruning.
    pub fn reset_optimisers(&mut self, cfg: &TrainConfig) {
        self.actor_opt = Adam::new(&self.actor, cfg.learning_rate, cfg.adam_eps);
        self.critic_opt = Adam::new(&self.critic, cfg.learning_rate, cfg.adam_eps);
    }

    /// Epochs of shuffled minibatch updates on one rollout. Returns the mean
    /// loss statistics over all minibatch steps.
    pub fn ppo_update(
        &mut self,
        batch: &RolloutBatch,
        cfg: &TrainConfig,
        reg: &RegConfig,
        lambda: f64,
        update: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<LossStats> {
        let coefs = cfg.coefs();
        let size = batch.len() / cfg.minibatches;
        let mut order: Vec<usize> = (0..batch.len()).collect();
        let mut mean = LossStats::default();
        let steps = (cfg.epochs * cfg.minibatches) as f64;
        for _ in 0..cfg.epochs {
            order.shuffle(rng);
            for chunk in order.chunks_exact(size) {
                let mb = Minibatch::gather(batch, chunk);
                self.actor_grads.clear();
                self.critic_grads.clear();
                let stats = minibatch_loss(
                    &self.actor,
                    &self.critic,
                    &mb,
                    &coefs,
                    reg,
                    lambda,
                    Some((&mut self.actor_grads, &mut self.critic_grads)),
                )?;
                if !stats.total.is_finite() || !self.actor_grads.is_finite() || !self.critic_grads.is_finite() {
                    return Err(Error::NonFiniteLoss { update, detail: format!("{stats:?}") });
                }
                let norm = libm::sqrt(self.actor_grads.norm_sq() + self.critic_grads.norm_sq());
                if norm > cfg.max_grad_norm {
                    let k = cfg.max_grad_norm / norm;
                    self.actor_grads.scale(k);
                    self.critic_grads.scale(k);
                }
                self.actor_opt.step(&mut self.actor, &self.actor_grads);
                self.critic_opt.step(&mut self.critic, &self.critic_grads);
                mean.total += stats.total / steps;
                mean.policy += stats.policy / steps;
                mean.value += stats.value / steps;
                mean.entropy += stats.entropy / steps;
                mean.cc += stats.cc / steps;
                mean.approx_kl += stats.approx_kl / steps;
                mean.clip_frac += stats.clip_frac / steps;
            }
        }
        Ok(mean)
    }
}

/// Actor snapshots at the end of each stage, the final critic and the
/// per-update metrics log.
#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub raw: SpatialMlp,
    pub pruned: SpatialMlp,
    pub finetuned: SpatialMlp,
    pub critic: SpatialMlp,
    pub prune_report: PruneReport,
    pub metrics: Vec<UpdateMetrics>,
}

fn mean_or_nan(v: &[f64]) -> f64 {
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Full run: regularised training, pruning, then fine-tuning with the cost
/// switched off and masks frozen. `on_update` sees every metrics row as it
/// is produced.
pub fn train(
    env: &EnvConfig,
    cfg: &TrainConfig,
    reg: &RegConfig,
    on_update: &mut dyn FnMut(&UpdateMetrics),
) -> Result<TrainOutput> {
    cfg.validate()?;
    reg.validate()?;
    let mut learner = Learner::new(env, cfg)?;
    let mut pool = EnvPool::new(*env, cfg.num_envs, rng::derive(cfg.seed, 3));
    let mut act_rng = rng::stream(cfg.seed, 4);
    let mut shuffle_rng = rng::stream(cfg.seed, 5);
    let batch_frames = cfg.batch_size() as u64;
    let mut metrics = Vec::new();
    let mut frames = 0u64;

    let phase1 = cfg.updates(cfg.train_frames);
    for u in 0..phase1 {
        let lambda = regularizer::schedule_lambda(u, phase1, reg);
        let mut batch = collect_rollout(&learner.actor, &learner.critic, &mut pool, cfg.steps_per_env, &mut act_rng)?;
        compute_gae(&mut batch, cfg.gamma, cfg.gae_lambda);
        let stats = learner.ppo_update(&batch, cfg, reg, lambda, u, &mut shuffle_rng)?;
        if reg.relocation && (u + 1) % reg.swap_interval == 0 {
            regularizer::relocate_neurons(&mut learner.actor, reg);
        }
        frames += batch_frames;
        let row = UpdateMetrics {
            update: u,
            frames,
            phase: Phase::Train,
            mean_return: mean_or_nan(&batch.episode_returns),
            loss_total: stats.total,
            loss_cc: stats.cc,
            lambda,
            sparsity_frac: learner.actor.sparsity(),
        };
        on_update(&row);
        metrics.push(row);
    }

    let raw = learner.actor.clone();
    let prune_report = prune(&mut learner.actor, cfg.prune_fraction);
    let pruned = learner.actor.clone();
    learner.reset_optimisers(cfg);

    let phase2 = cfg.updates(cfg.finetune_frames);
    for u in 0..phase2 {
        let update = phase1 + u;
        let mut batch = collect_rollout(&learner.actor, &learner.critic, &mut pool, cfg.steps_per_env, &mut act_rng)?;
        compute_gae(&mut batch, cfg.gamma, cfg.gae_lambda);
        let stats = learner.ppo_update(&batch, cfg, reg, 0.0, update, &mut shuffle_rng)?;
        frames += batch_frames;
        let row = UpdateMetrics {
            update,
            frames,
            phase: Phase::Finetune,
            mean_return: mean_or_nan(&batch.episode_returns),
            loss_total: stats.total,
            loss_cc: 0.0,
            lambda: 0.0,
            sparsity_frac: learner.actor.sparsity(),
        };
        on_update(&row);
        metrics.push(row);
    }

    Ok(TrainOutput { raw, pruned, finetuned: learner.actor.clone(), critic: learner.critic, prune_report, metrics })
}

/// Seed of the `i`-th evaluation episode.
pub fn episode_seed(seed: u64, i: usize) -> u64 {
    rng::derive(seed, 0x6576_616c_0000_0000 ^ i as u64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalStats {
    pub episodes: usize,
    pub mean_return: f64,
    /// Fraction of episodes ending at the goal (grid kinds).
    pub success_rate: f64,
    pub mean_length: f64,
}

/// Greedy (argmax) rollouts of `episodes` seeded episodes.
pub fn evaluate(actor: &SpatialMlp, env: &EnvConfig, episodes: usize, seed: u64) -> Result<EvalStats> {
    let mut cache = ForwardCache::new(actor);
    let mut obs = Vec::new();
    let (mut ret, mut wins, mut steps) = (0.0, 0usize, 0u64);
    for i in 0..episodes {
        let mut state = EnvState::reset(env, episode_seed(seed, i));
        loop {
            state.observe_into(&mut obs);
            actor.forward_cached(&obs, &mut cache)?;
            let out = state.step(policy::argmax(cache.logits()))?;
            ret += out.reward;
            steps += 1;
            if out.done {
                wins += usize::from(out.cause == Cause::Goal);
                break;
            }
        }
    }
    let n = episodes.max(1) as f64;
    Ok(EvalStats { episodes, mean_return: ret / n, success_rate: wins as f64 / n, mean_length: steps as f64 / n })
}

/// Records every neuron's activation at every step of `episodes` greedy
/// episodes.
pub fn collect_trace(actor: &SpatialMlp, env: &EnvConfig, episodes: usize, seed: u64) -> Result<ActivationTrace> {
    let mut trace = ActivationTrace::new(
        actor.sizes().to_vec(),
        TraceSource { env: env.kind.name().into(), policy_id: Default::default(), seed, episodes },
    );
    let mut cache = ForwardCache::new(actor);
    let mut obs = Vec::new();
    let mut row = Vec::with_capacity(actor.neuron_count());
    for i in 0..episodes {
        let mut state = EnvState::reset(env, episode_seed(seed, i));
        loop {
            state.observe_into(&mut obs);
            actor.forward_cached(&obs, &mut cache)?;
            row.clear();
            for l in 0..actor.sizes().len() {
                row.extend_from_slice(cache.activations(l));
            }
            trace.push_row(&row);
            if state.step(policy::argmax(cache.logits()))?.done {
                break;
            }
        }
    }
    Ok(trace)
}
