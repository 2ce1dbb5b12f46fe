//! Clipped-surrogate PPO loss with exact gradients.

use alloc::vec;
use alloc::vec::Vec;

use super::policy;
use super::RolloutBatch;
use crate::mlp::{ForwardCache, Gradients, SpatialMlp};
use crate::regularizer::{self, RegConfig};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossCoefs {
    pub clip_eps: f64,
    pub ent_coef: f64,
    pub vf_coef: f64,
}

/// A gathered minibatch with advantages standardised over its own samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Minibatch {
    pub obs_len: usize,
    pub obs: Vec<f64>,
    pub actions: Vec<usize>,
    pub old_log_probs: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl Minibatch {
    pub fn gather(batch: &RolloutBatch, idx: &[usize]) -> Self {
        let mut obs = Vec::with_capacity(idx.len() * batch.obs_len);
        for &k in idx {
            obs.extend_from_slice(batch.obs_row(k));
        }
        let mut advantages: Vec<f64> = idx.iter().map(|&k| batch.advantages[k]).collect();
        standardise(&mut advantages);
        Self {
            obs_len: batch.obs_len,
            obs,
            actions: idx.iter().map(|&k| batch.actions[k]).collect(),
            old_log_probs: idx.iter().map(|&k| batch.log_probs[k]).collect(),
            advantages,
            returns: idx.iter().map(|&k| batch.returns[k]).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

/// Shifts to mean 0 and scales to unit (population) standard deviation.
pub fn standardise(v: &mut [f64]) {
    if v.is_empty() {
        return;
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n;
    let std = libm::sqrt(var) + 1e-8;
    for a in v.iter_mut() {
        *a = (*a - mean) / std;
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossStats {
    pub total: f64,
    pub policy: f64,
    pub value: f64,
    pub entropy: f64,
    /// Scaled connection cost of the actor.
    pub cc: f64,
    pub approx_kl: f64,
    pub clip_frac: f64,
}

/// Clipped surrogate for one sample and its derivative with respect to the
/// new log-probability.
#[inline]
pub fn clipped_surrogate(ratio: f64, advantage: f64, eps: f64) -> (f64, f64) {
    let clipped = ratio.clamp(1.0 - eps, 1.0 + eps);
    let unclipped_obj = ratio * advantage;
    let clipped_obj = clipped * advantage;
    if unclipped_obj <= clipped_obj {
        (-unclipped_obj, -advantage * ratio)
    } else {
        (-clipped_obj, 0.0)
    }
}

/// Mean PPO loss over the minibatch plus `lambda` times the actor's
/// connection cost. When `grads` is given, the exact gradients are
/// accumulated into the actor and critic buffers.
pub fn minibatch_loss(
    actor: &SpatialMlp,
    critic: &SpatialMlp,
    mb: &Minibatch,
    coefs: &LossCoefs,
    reg: &RegConfig,
    lambda: f64,
    mut grads: Option<(&mut Gradients, &mut Gradients)>,
) -> Result<LossStats> {
    let n = mb.len() as f64;
    let actions = actor.output_len();
    let mut a_cache = ForwardCache::new(actor);
    let mut c_cache = ForwardCache::new(critic);
    let mut logp = vec![0.0; actions];
    let mut dlogits = vec![0.0; actions];
    let mut stats = LossStats::default();
    let mut clipped = 0usize;
    for k in 0..mb.len() {
        let obs = &mb.obs[k * mb.obs_len..(k + 1) * mb.obs_len];
        actor.forward_cached(obs, &mut a_cache)?;
        critic.forward_cached(obs, &mut c_cache)?;
        policy::log_softmax(a_cache.logits(), &mut logp);
        let a = mb.actions[k];
        let log_ratio = logp[a] - mb.old_log_probs[k];
        let ratio = libm::exp(log_ratio);
        let (pg, dpg) = clipped_surrogate(ratio, mb.advantages[k], coefs.clip_eps);
        if (ratio - 1.0).abs() > coefs.clip_eps {
            clipped += 1;
        }
        let h = policy::entropy(&logp);
        let v = c_cache.logits()[0];
        let err = v - mb.returns[k];
        stats.policy += pg / n;
        stats.entropy += h / n;
        stats.value += err * err / n;
        stats.approx_kl += ((ratio - 1.0) - log_ratio) / n;

        if let Some((ga, gc)) = grads.as_mut() {
            for j in 0..actions {
                let p = libm::exp(logp[j]);
                let indicator = if j == a { 1.0 } else { 0.0 };
                let d_pg = dpg * (indicator - p);
                let d_h = -p * (logp[j] + h);
                dlogits[j] = (d_pg - coefs.ent_coef * d_h) / n;
            }
            actor.backward(&a_cache, &dlogits, ga);
            critic.backward(&c_cache, &[2.0 * coefs.vf_coef * err / n], gc);
        }
    }
    stats.clip_frac = clipped as f64 / n;
    stats.cc = if lambda != 0.0 { regularizer::connection_cost_with(actor, reg, lambda)? } else { 0.0 };
    stats.total = stats.policy + coefs.vf_coef * stats.value - coefs.ent_coef * stats.entropy + stats.cc;
    if let Some((ga, gc)) = grads {
        regularizer::add_cost_gradient(actor, reg, lambda, ga);
        ga.apply_mask(actor);
        gc.apply_mask(critic);
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn surrogate_clips_positive_advantage() {
        let (obj, d) = clipped_surrogate(1.5, 1.0, 0.2);
        assert!((obj + 1.2).abs() < 1e-15);
        assert_eq!(d, 0.0);
        let (obj, d) = clipped_surrogate(1.1, 2.0, 0.2);
        assert!((obj + 2.2).abs() < 1e-15);
        assert!((d + 2.2).abs() < 1e-15);
        // Negative advantage keeps the pessimistic unclipped term.
        let (obj, _) = clipped_surrogate(1.5, -1.0, 0.2);
        assert!((obj - 1.5).abs() < 1e-15);
    }

    #[test]
    fn standardise_gives_zero_mean_unit_std() {
        let mut v = [1.0, 2.0, 3.0, 10.0];
        standardise(&mut v);
        let mean: f64 = v.iter().sum::<f64>() / 4.0;
        let var: f64 = v.iter().map(|a| a * a).sum::<f64>() / 4.0;
        assert!(mean.abs() < 1e-12);
        assert!((var - 1.0).abs() < 1e-6);
    }
}
