//! Run configuration files, presets and validation.

use std::path::Path;

use modnet_core::env::{EnvConfig, EnvKind, PongConfig};
use modnet_core::mlp::Activation;
use modnet_core::modules::Method;
use modnet_core::ppo::TrainConfig;
use modnet_core::regularizer::{Penalty, RegConfig};
use serde::{Deserialize, Serialize};

use crate::artifact::sha256_hex;
use crate::error::{io, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub env: EnvSection,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub reg: RegSection,
    /// Root for run directories; `MODNET_OUT` or `--out` override it.
    #[serde(default)]
    pub output_dir: Option<String>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub detection: DetectionSection,
    #[serde(default)]
    pub intervention: InterventionSection,
    #[serde(default)]
    pub eval: EvalSection,
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvSection {
    pub kind: String,
    #[serde(default)]
    pub mask_opponent: bool,
    #[serde(default)]
    pub pong: PongSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PongSection {
    pub paddle_height: f64,
    pub paddle_speed: f64,
    pub opponent_speed: f64,
    pub ball_speed: f64,
    pub points_to_win: u32,
    pub max_ticks: u32,
}

impl Default for PongSection {
    fn default() -> Self {
        let p = PongConfig::default();
        Self {
            paddle_height: p.paddle_height,
            paddle_speed: p.paddle_speed,
            opponent_speed: p.opponent_speed,
            ball_speed: p.ball_speed,
            points_to_win: p.points_to_win,
            max_ticks: p.max_ticks,
        }
    }
}

impl PongSection {
    pub fn to_config(&self) -> PongConfig {
        PongConfig {
            paddle_height: self.paddle_height,
            paddle_speed: self.paddle_speed,
            opponent_speed: self.opponent_speed,
            ball_speed: self.ball_speed,
            points_to_win: self.points_to_win,
            max_ticks: self.max_ticks,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub hidden: Vec<usize>,
    pub activation: String,
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
    pub train_frames: u64,
    pub finetune_frames: u64,
    pub prune_fraction: f64,
}

impl From<&TrainConfig> for TrainSection {
    fn from(t: &TrainConfig) -> Self {
        Self {
            hidden: t.hidden.clone(),
            activation: t.activation.name().into(),
            num_envs: t.num_envs,
            steps_per_env: t.steps_per_env,
            minibatches: t.minibatches,
            epochs: t.epochs,
            learning_rate: t.learning_rate,
            adam_eps: t.adam_eps,
            max_grad_norm: t.max_grad_norm,
            gamma: t.gamma,
            gae_lambda: t.gae_lambda,
            clip_eps: t.clip_eps,
            ent_coef: t.ent_coef,
            vf_coef: t.vf_coef,
            train_frames: t.train_frames,
            finetune_frames: t.finetune_frames,
            prune_fraction: t.prune_fraction,
        }
    }
}

impl Default for TrainSection {
    fn default() -> Self {
        (&TrainConfig::default()).into()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegSection {
    pub lambda: f64,
    pub d_s: f64,
    pub penalty: String,
    pub distance_weighted: bool,
    pub window: [f64; 2],
    pub top_k: usize,
    pub swap_interval: usize,
    pub relocation: bool,
}

impl From<&RegConfig> for RegSection {
    fn from(r: &RegConfig) -> Self {
        Self {
            lambda: r.lambda,
            d_s: r.d_s,
            penalty: r.penalty.name().into(),
            distance_weighted: r.distance_weighted,
            window: [r.window.0, r.window.1],
            top_k: r.top_k,
            swap_interval: r.swap_interval,
            relocation: r.relocation,
        }
    }
}

impl Default for RegSection {
    fn default() -> Self {
        (&RegConfig::default()).into()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectionSection {
    pub method: String,
    pub trace_episodes: usize,
    pub trace_seed: u64,
    pub detect_seed: u64,
}

impl Default for DetectionSection {
    fn default() -> Self {
        Self { method: Method::FtInternal.name().into(), trace_episodes: 10_000, trace_seed: 1, detect_seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InterventionSection {
    pub episodes: usize,
    pub seed: u64,
    pub saturation: f64,
    /// Also edit weights with only one endpoint in the module.
    pub incident: bool,
}

impl Default for InterventionSection {
    fn default() -> Self {
        Self { episodes: 10_000, seed: 2, saturation: modnet_core::intervention::SATURATION, incident: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSection {
    pub episodes: usize,
    pub seed: u64,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self { episodes: 1_000, seed: 3 }
    }
}

pub const PRESETS: [&str; 8] =
    ["desk-do", "desk-do3d", "desk-g2k", "desk-pong", "full-do", "full-do3d", "full-g2k", "full-pong"];

impl RunConfig {
    pub fn for_env(kind: EnvKind) -> Self {
        let train = if kind == EnvKind::Pong { TrainConfig::pong() } else { TrainConfig::default() };
        let mut c = Self {
            env: EnvSection { kind: kind.name().into(), mask_opponent: false, pong: PongSection::default() },
            train: (&train).into(),
            reg: RegSection::default(),
            output_dir: None,
            seeds: default_seeds(),
            detection: DetectionSection::default(),
            intervention: InterventionSection::default(),
            eval: EvalSection::default(),
        };
        if kind == EnvKind::Pong {
            // A Pong episode is a whole game of thousands of ticks.
            c.detection.trace_episodes = 10;
            c.intervention.episodes = 20;
            c.eval.episodes = 20;
        }
        c
    }

    /// Full-length settings, or desk-scale ones with frames cut eightfold
    /// and fewer evaluation episodes.
    pub fn preset(name: &str) -> Result<Self> {
        let (scale, env) = name.split_once('-').ok_or_else(|| Error::Config(format!("unknown preset `{name}`")))?;
        let kind = EnvKind::from_name(env).ok_or_else(|| Error::Config(format!("unknown preset `{name}`")))?;
        let mut c = Self::for_env(kind);
        match scale {
            "full" => {}
            "desk" => {
                c.train.train_frames /= 8;
                c.train.finetune_frames /= 8;
                c.detection.trace_episodes = 1_000;
                c.intervention.episodes = 2_000;
                if kind == EnvKind::Pong {
                    // The full-length Pong step size is too small to make progress
                    // within a desk-scale budget.
                    c.train.learning_rate = 5e-4;
                    c.train.max_grad_norm = 0.5;
                    c.detection.trace_episodes = 2;
                    c.intervention.episodes = 4;
                    c.eval.episodes = 4;
                }
            }
            _ => return Err(Error::Config(format!("unknown preset `{name}`"))),
        }
        Ok(c)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io(path))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            e => e,
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serialises");
        s.push('\n');
        s
    }

    pub fn env_kind(&self) -> Result<EnvKind> {
        EnvKind::from_name(&self.env.kind)
            .ok_or_else(|| Error::Config(format!("env.kind: unknown environment `{}`", self.env.kind)))
    }

    pub fn env_config(&self) -> Result<EnvConfig> {
        Ok(EnvConfig { kind: self.env_kind()?, mask_opponent: self.env.mask_opponent, pong: self.env.pong.to_config() })
    }

    pub fn train_config(&self, seed: u64) -> Result<TrainConfig> {
        let t = &self.train;
        let activation = Activation::from_name(&t.activation)
            .ok_or_else(|| Error::Config(format!("train.activation: unknown activation `{}`", t.activation)))?;
        Ok(TrainConfig {
            hidden: t.hidden.clone(),
            activation,
            num_envs: t.num_envs,
            steps_per_env: t.steps_per_env,
            minibatches: t.minibatches,
            epochs: t.epochs,
            learning_rate: t.learning_rate,
            adam_eps: t.adam_eps,
            max_grad_norm: t.max_grad_norm,
            gamma: t.gamma,
            gae_lambda: t.gae_lambda,
            clip_eps: t.clip_eps,
            ent_coef: t.ent_coef,
            vf_coef: t.vf_coef,
            train_frames: t.train_frames,
            finetune_frames: t.finetune_frames,
            prune_fraction: t.prune_fraction,
            seed,
        })
    }

    pub fn reg_config(&self) -> Result<RegConfig> {
        let r = &self.reg;
        let penalty = Penalty::from_name(&r.penalty)
            .ok_or_else(|| Error::Config(format!("reg.penalty: unknown penalty `{}`", r.penalty)))?;
        Ok(RegConfig {
            lambda: r.lambda,
            d_s: r.d_s,
            penalty,
            distance_weighted: r.distance_weighted,
            window: (r.window[0], r.window[1]),
            top_k: r.top_k,
            swap_interval: r.swap_interval,
            relocation: r.relocation,
        })
    }

    pub fn method(&self) -> Result<Method> {
        Method::from_name(&self.detection.method)
            .ok_or_else(|| Error::Config(format!("detection.method: unknown method `{}`", self.detection.method)))
    }

    pub fn validate(&self) -> Result<()> {
        let kind = self.env_kind()?;
        if self.env.mask_opponent && kind != EnvKind::Pong {
            return Err(Error::Config("env.mask_opponent only applies to pong".into()));
        }
        let p = &self.env.pong;
        if !(p.paddle_height > 0.0 && p.paddle_height < 1.0 && p.ball_speed > 0.0 && p.points_to_win > 0) {
            return Err(Error::Config("env.pong: paddle_height in (0, 1), ball_speed > 0, points_to_win > 0".into()));
        }
        let prefix = |field: &'static str| move |e: modnet_core::Error| Error::Config(format!("{field}: {e}"));
        self.train_config(0)?.validate().map_err(prefix("train"))?;
        self.reg_config()?.validate().map_err(prefix("reg"))?;
        self.method()?;
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds: at least one seed is required".into()));
        }
        if self.detection.trace_episodes == 0 {
            return Err(Error::Config("detection.trace_episodes must be positive".into()));
        }
        if self.intervention.episodes == 0 {
            return Err(Error::Config("intervention.episodes must be positive".into()));
        }
        if self.eval.episodes == 0 {
            return Err(Error::Config("eval.episodes must be positive".into()));
        }
        if !self.intervention.saturation.is_finite() {
            return Err(Error::Config("intervention.saturation must be finite".into()));
        }
        Ok(())
    }

    /// Hash of everything that influences results; the output location and
    /// seed list are left out since each artifact records its own seed.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = None;
        c.seeds.clear();
        sha256_hex(serde_json::to_string(&c).expect("config serialises").as_bytes())
    }
}
