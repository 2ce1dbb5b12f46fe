//! Network checkpoints and activation traces on disk.

use std::path::Path;

use modnet_core::env::{EnvConfig, EnvKind};
use modnet_core::mlp::{Activation, ActivationTrace, MlpParts, SpatialMlp, TraceSource};
use serde::{Deserialize, Serialize};

use crate::artifact::{Artifact, Provenance};
use crate::config::PongSection;
use crate::error::{Error, Result};

pub const CHECKPOINT: &str = "checkpoint";
pub const TRACE: &str = "trace";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Raw,
    Pruned,
    Finetuned,
}

impl Stage {
    pub const ALL: [Stage; 3] = [Stage::Raw, Stage::Pruned, Stage::Finetuned];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Raw => "raw",
            Stage::Pruned => "pruned",
            Stage::Finetuned => "finetuned",
        }
    }
}

/// Plain-data form of a [`SpatialMlp`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkData {
    pub sizes: Vec<usize>,
    pub activation: String,
    /// Per weight layer, row-major `n_l x n_{l+1}`.
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
    pub xs: Vec<Vec<f64>>,
    pub weight_mask: Vec<Vec<bool>>,
    pub neuron_mask: Vec<Vec<bool>>,
}

impl NetworkData {
    pub fn from_net(net: &SpatialMlp) -> Self {
        let p = net.to_parts();
        Self {
            sizes: p.sizes,
            activation: p.activation.name().into(),
            weights: p.weights,
            biases: p.biases,
            xs: p.xs,
            weight_mask: p.weight_mask,
            neuron_mask: p.neuron_mask,
        }
    }

    pub fn to_net(&self) -> Result<SpatialMlp> {
        let activation = Activation::from_name(&self.activation)
            .ok_or_else(|| Error::Invalid(format!("unknown activation `{}`", self.activation)))?;
        Ok(SpatialMlp::from_parts(MlpParts {
            sizes: self.sizes.clone(),
            activation,
            weights: self.weights.clone(),
            biases: self.biases.clone(),
            xs: self.xs.clone(),
            weight_mask: self.weight_mask.clone(),
            neuron_mask: self.neuron_mask.clone(),
        })?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointBody {
    pub env: String,
    pub mask_opponent: bool,
    /// Pong physics; ignored by the grid kinds.
    pub pong: PongSection,
    pub lambda_cc: f64,
    pub d_s: f64,
    pub seed: u64,
    /// Environment frames consumed up to this stage.
    pub frames: u64,
    pub stage: Stage,
    pub network: NetworkData,
}

pub type Checkpoint = Artifact<CheckpointBody>;

impl CheckpointBody {
    pub fn env_kind(&self) -> Result<EnvKind> {
        EnvKind::from_name(&self.env).ok_or_else(|| Error::Invalid(format!("unknown env `{}`", self.env)))
    }

    pub fn env_config(&self) -> Result<EnvConfig> {
        Ok(EnvConfig { kind: self.env_kind()?, mask_opponent: self.mask_opponent, pong: self.pong.to_config() })
    }
}

pub fn load_checkpoint(path: &Path) -> Result<(Checkpoint, SpatialMlp)> {
    let ck = Checkpoint::load(path, CHECKPOINT)?;
    let net = ck.body.network.to_net()?;
    Ok((ck, net))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceBody {
    pub env: String,
    pub episodes: usize,
    pub episode_seed: u64,
    pub sizes: Vec<usize>,
    /// One row per environment step.
    pub rows: Vec<Vec<f64>>,
}

pub type TraceFile = Artifact<TraceBody>;

impl TraceBody {
    pub fn from_trace(t: &ActivationTrace) -> Self {
        Self {
            env: t.source.env.clone(),
            episodes: t.source.episodes,
            episode_seed: t.source.seed,
            sizes: t.sizes.clone(),
            rows: (0..t.rows()).map(|k| t.row(k).to_vec()).collect(),
        }
    }

    pub fn to_trace(&self, policy_id: &str) -> Result<ActivationTrace> {
        let mut t = ActivationTrace::new(
            self.sizes.clone(),
            TraceSource {
                env: self.env.clone(),
                policy_id: policy_id.into(),
                seed: self.episode_seed,
                episodes: self.episodes,
            },
        );
        for r in &self.rows {
            if r.len() != t.cols() {
                return Err(Error::Invalid(format!("trace row has {} values, expected {}", r.len(), t.cols())));
            }
            t.push_row(r);
        }
        Ok(t)
    }
}

pub fn checkpoint_artifact(body: CheckpointBody, config_hash: &str, parent: &str) -> Checkpoint {
    let seed = body.seed;
    Artifact::new(CHECKPOINT, Provenance { config_hash: config_hash.into(), seed, parent: parent.into() }, body)
}
