//! End-to-end stages over run directories: train, detect, intervene,
//! evaluate, render and sweep.

use std::path::{Path, PathBuf};

use modnet_core::env::EnvConfig;
use modnet_core::intervention::{comparison_plan, run_plan_entry, InterventionRow};
use modnet_core::mlp::SpatialMlp;
use modnet_core::modules::{detect_modules, Method, ModularityReport, Partition};
use modnet_core::ppo::{self, EvalStats, UpdateMetrics};
use rayon::prelude::*;

use crate::artifact::{Artifact, Provenance};
use crate::checkpoint::{
    checkpoint_artifact, load_checkpoint, Checkpoint, CheckpointBody, NetworkData, Stage, TraceBody, TraceFile, TRACE,
};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::partition_file::{partition_artifact, PartitionBody, PartitionFile, PARTITION};
use crate::render::{render, Format, Labels, RenderStyle};
use crate::tables::{self, SweepAggregate, SweepRun};

/// Directory holding every artifact of one (config, seed) run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunDir(pub PathBuf);

impl RunDir {
    pub fn new(root: &Path, cfg: &RunConfig, seed: u64) -> Self {
        Self(root.join(format!("{}-{}", cfg.env.kind, &cfg.hash()[..12])).join(format!("seed-{seed}")))
    }

    pub fn path(&self) -> &Path {
        &self.0
    }

    pub fn config(&self) -> PathBuf {
        self.0.join("config.json")
    }

    pub fn metrics(&self) -> PathBuf {
        self.0.join("metrics.csv")
    }

    pub fn checkpoint(&self, stage: Stage) -> PathBuf {
        self.0.join(format!("checkpoint-{}.json", stage.name()))
    }
}

/// Files derived from a checkpoint sit next to it, named after its stage.
fn sibling(ck_path: &Path, stem: &str, ext: &str) -> PathBuf {
    let dir = ck_path.parent().unwrap_or(Path::new("."));
    let base = ck_path.file_stem().and_then(|s| s.to_str()).unwrap_or("checkpoint");
    let stage = base.strip_prefix("checkpoint-").unwrap_or(base);
    dir.join(format!("{stem}-{stage}.{ext}"))
}

pub fn trace_path(ck_path: &Path) -> PathBuf {
    sibling(ck_path, "trace", "json")
}

pub fn partition_path(ck_path: &Path, method: Method) -> PathBuf {
    sibling(ck_path, &format!("partition-{}", method.name()), "json")
}

pub fn interventions_path(ck_path: &Path, method: &str) -> PathBuf {
    sibling(ck_path, &format!("interventions-{method}"), "csv")
}

#[derive(Debug, Clone)]
pub struct TrainRun {
    pub dir: RunDir,
    /// Raw, pruned and fine-tuned, in that order.
    pub checkpoints: Vec<Checkpoint>,
    /// True when existing artifacts were loaded instead of training.
    pub reused: bool,
}

impl TrainRun {
    pub fn get(&self, stage: Stage) -> &Checkpoint {
        &self.checkpoints[stage as usize]
    }

    pub fn net(&self, stage: Stage) -> Result<SpatialMlp> {
        self.get(stage).body.network.to_net()
    }
}

fn load_run(dir: &RunDir, cfg: &RunConfig, seed: u64) -> Option<TrainRun> {
    let hash = cfg.hash();
    let mut parent = String::new();
    let mut checkpoints = Vec::new();
    for stage in Stage::ALL {
        let ck = Checkpoint::load(&dir.checkpoint(stage), crate::checkpoint::CHECKPOINT).ok()?;
        let p = &ck.provenance;
        if p.config_hash != hash || p.seed != seed || p.parent != parent || ck.body.stage != stage {
            return None;
        }
        parent = ck.hash.clone();
        checkpoints.push(ck);
    }
    dir.metrics().exists().then(|| TrainRun { dir: dir.clone(), checkpoints, reused: true })
}

/// Trains one seed of `cfg` under `root` and writes the three checkpoints,
/// the metrics log and the resolved config. With `reuse`, a complete run
/// with the same config hash and seed is loaded instead.
pub fn train_run(
    cfg: &RunConfig,
    seed: u64,
    root: &Path,
    reuse: bool,
    on_update: &mut dyn FnMut(&UpdateMetrics),
) -> Result<TrainRun> {
    cfg.validate()?;
    let dir = RunDir::new(root, cfg, seed);
    if reuse {
        if let Some(run) = load_run(&dir, cfg, seed) {
            return Ok(run);
        }
    }
    let env = cfg.env_config()?;
    let tc = cfg.train_config(seed)?;
    let reg = cfg.reg_config()?;
    let out = ppo::train(&env, &tc, &reg, on_update)?;

    let hash = cfg.hash();
    let phase1 = tc.updates(tc.train_frames) as u64 * tc.batch_size() as u64;
    let total = out.metrics.last().map_or(phase1, |m| m.frames);
    let mut parent = String::new();
    let mut checkpoints = Vec::new();
    for (stage, net, frames) in [
        (Stage::Raw, &out.raw, phase1),
        (Stage::Pruned, &out.pruned, phase1),
        (Stage::Finetuned, &out.finetuned, total),
    ] {
        let body = CheckpointBody {
            env: cfg.env.kind.clone(),
            mask_opponent: cfg.env.mask_opponent,
            pong: cfg.env.pong.clone(),
            lambda_cc: cfg.reg.lambda,
            d_s: cfg.reg.d_s,
            seed,
            frames,
            stage,
            network: NetworkData::from_net(net),
        };
        let ck = checkpoint_artifact(body, &hash, &parent);
        ck.save(&dir.checkpoint(stage))?;
        parent = ck.hash.clone();
        checkpoints.push(ck);
    }
    let prov = Provenance { config_hash: hash, seed, parent };
    tables::write_text(&dir.metrics(), &tables::metrics_csv(&prov, &out.metrics)?)?;
    tables::write_text(&dir.config(), &cfg.to_json())?;
    Ok(TrainRun { dir, checkpoints, reused: false })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DetectOptions {
    pub method: Method,
    pub trace_episodes: usize,
    pub trace_seed: u64,
    pub detect_seed: u64,
}

impl DetectOptions {
    pub fn from_config(cfg: &RunConfig) -> Result<Self> {
        Ok(Self {
            method: cfg.method()?,
            trace_episodes: cfg.detection.trace_episodes,
            trace_seed: cfg.detection.trace_seed,
            detect_seed: cfg.detection.detect_seed,
        })
    }
}

#[derive(Debug, Clone)]
pub struct Detection {
    pub file: PartitionFile,
    pub partition: Partition,
    pub report: ModularityReport,
    pub trace: TraceFile,
    pub trace_reused: bool,
}

/// Loads the cached trace for `ck` when it was collected from this exact
/// checkpoint with the same episode count and seed, otherwise collects and
/// stores a fresh one.
pub fn load_or_collect_trace(
    ck: &Checkpoint,
    net: &SpatialMlp,
    path: &Path,
    episodes: usize,
    seed: u64,
) -> Result<(TraceFile, bool)> {
    if path.exists() {
        let t = TraceFile::load(path, TRACE)?;
        if t.provenance.parent == ck.hash && t.body.episodes == episodes && t.body.episode_seed == seed {
            return Ok((t, true));
        }
    }
    let env = ck.body.env_config()?;
    let trace = ppo::collect_trace(net, &env, episodes, seed)?;
    let prov = Provenance { config_hash: ck.provenance.config_hash.clone(), seed, parent: ck.hash.clone() };
    let file = Artifact::new(TRACE, prov, TraceBody::from_trace(&trace));
    file.save_compact(path)?;
    Ok((file, false))
}

/// Detects modules in the checkpoint at `ck_path`, writing the trace and
/// partition files next to it.
pub fn detect(ck_path: &Path, opts: &DetectOptions) -> Result<Detection> {
    let (ck, net) = load_checkpoint(ck_path)?;
    detect_loaded(&ck, &net, ck_path, opts)
}

pub fn detect_loaded(ck: &Checkpoint, net: &SpatialMlp, ck_path: &Path, opts: &DetectOptions) -> Result<Detection> {
    let (trace, trace_reused) =
        load_or_collect_trace(ck, net, &trace_path(ck_path), opts.trace_episodes, opts.trace_seed)?;
    let (partition, report) =
        detect_modules(net, &trace.body.to_trace(ck.short_hash())?, opts.method, opts.detect_seed)?;
    let body = PartitionBody::new(opts.method, opts.detect_seed, &ck.hash, &partition, &report);
    let prov = Provenance {
        config_hash: ck.provenance.config_hash.clone(),
        seed: opts.detect_seed,
        parent: trace.hash.clone(),
    };
    let file = partition_artifact(body, prov);
    file.save(&partition_path(ck_path, opts.method))?;
    Ok(Detection { file, partition, report, trace, trace_reused })
}

/// Fails unless `pf` was detected on exactly this checkpoint.
pub fn check_chain(ck: &Checkpoint, pf: &PartitionFile) -> Result<()> {
    if pf.body.checkpoint != ck.hash {
        return Err(Error::Stale {
            what: "partition".into(),
            expected: ck.hash.clone(),
            found: pf.body.checkpoint.clone(),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterventionOptions {
    pub episodes: usize,
    pub seed: u64,
    pub incident: bool,
    pub saturation: f64,
}

impl InterventionOptions {
    pub fn from_config(cfg: &RunConfig) -> Self {
        let i = &cfg.intervention;
        Self { episodes: i.episodes, seed: i.seed, incident: i.incident, saturation: i.saturation }
    }
}

/// Baseline plus saturation and negation of every community. Rows are
/// evaluated in parallel; each row is itself sequential, so the result does
/// not depend on the thread count.
pub fn intervene_loaded(
    env: &EnvConfig,
    net: &SpatialMlp,
    partition: &Partition,
    opts: &InterventionOptions,
) -> Result<Vec<InterventionRow>> {
    let plan: Vec<_> = comparison_plan(partition, opts.incident)
        .into_iter()
        .map(|s| s.map(|s| modnet_core::intervention::InterventionSpec { saturation: opts.saturation, ..s }))
        .collect();
    plan.par_iter()
        .map(|spec| Ok(run_plan_entry(net, partition, spec.as_ref(), env, opts.episodes, opts.seed)?))
        .collect()
}

/// Runs the comparison for a checkpoint and partition file and writes the
/// CSV next to the checkpoint. Returns the rows and the CSV path.
pub fn intervene(
    ck_path: &Path,
    partition_path: &Path,
    opts: &InterventionOptions,
) -> Result<(Vec<InterventionRow>, PathBuf)> {
    let (ck, net) = load_checkpoint(ck_path)?;
    let pf = PartitionFile::load(partition_path, PARTITION)?;
    check_chain(&ck, &pf)?;
    let partition = pf.body.partition()?;
    let rows = intervene_loaded(&ck.body.env_config()?, &net, &partition, opts)?;
    let prov = Provenance { config_hash: ck.provenance.config_hash.clone(), seed: opts.seed, parent: pf.hash.clone() };
    let out = interventions_path(ck_path, &pf.body.method);
    tables::write_text(&out, &tables::intervention_csv(&prov, &rows)?)?;
    Ok((rows, out))
}

pub fn eval(ck_path: &Path, episodes: usize, seed: u64) -> Result<EvalStats> {
    let (ck, net) = load_checkpoint(ck_path)?;
    Ok(ppo::evaluate(&net, &ck.body.env_config()?, episodes, seed)?)
}

/// Renders a checkpoint, optionally coloured by a partition detected on it.
/// The file name is built from the content hashes, so identical inputs
/// always land in the same file.
pub fn render_checkpoint(
    ck_path: &Path,
    partition_path: Option<&Path>,
    style: &RenderStyle,
    format: Format,
    out_dir: &Path,
) -> Result<PathBuf> {
    let (ck, net) = load_checkpoint(ck_path)?;
    let pf = partition_path.map(|p| PartitionFile::load(p, PARTITION)).transpose()?;
    let partition = match &pf {
        Some(pf) => {
            check_chain(&ck, pf)?;
            Some(pf.body.partition()?)
        }
        None => None,
    };
    let kind = ck.body.env_kind()?;
    let labels = Labels {
        inputs: kind.feature_names(ck.body.mask_opponent).iter().map(|s| s.to_string()).collect(),
        outputs: kind.action_names().iter().map(|s| s.to_string()).collect(),
    };
    let mut comment = format!(
        "checkpoint={} config_hash={} seed={} stage={}",
        ck.hash,
        ck.provenance.config_hash,
        ck.provenance.seed,
        ck.body.stage.name()
    );
    let mut name = format!("{}-{}", ck.body.stage.name(), ck.short_hash());
    if let Some(pf) = &pf {
        comment.push_str(&format!(" partition={} method={}", pf.hash, pf.body.method));
        name.push_str(&format!("-{}", pf.short_hash()));
    }
    let bytes = render(&net, partition.as_ref(), style, &labels, format, &comment)?;
    let path = out_dir.join(format!("{name}.{}", format.extension()));
    std::fs::create_dir_all(out_dir).map_err(crate::error::io(out_dir))?;
    std::fs::write(&path, bytes).map_err(crate::error::io(&path))?;
    Ok(path)
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub runs: Vec<SweepRun>,
    pub aggregates: Vec<SweepAggregate>,
    pub dir: PathBuf,
}

fn sweep_one(cfg: &RunConfig, seed: u64, root: &Path, reuse: bool) -> Result<SweepRun> {
    let run = train_run(cfg, seed, root, reuse, &mut |_| {})?;
    let ck_path = run.dir.checkpoint(Stage::Finetuned);
    let ck = run.get(Stage::Finetuned);
    let net = run.net(Stage::Finetuned)?;
    let det = detect_loaded(ck, &net, &ck_path, &DetectOptions::from_config(cfg)?)?;
    let stats = ppo::evaluate(&net, &cfg.env_config()?, cfg.eval.episodes, cfg.eval.seed)?;
    Ok(SweepRun {
        lambda: cfg.reg.lambda,
        seed,
        status: "ok".into(),
        mean_return: stats.mean_return,
        isolation: det.report.isolation,
        ari: det.report.ari,
        q: det.report.q,
        sparsity_frac: net.sparsity(),
        communities: det.report.communities as f64,
    })
}

/// Full pipeline for every (lambda, seed) pair. A failing run is recorded
/// with its error and the sweep carries on.
pub fn sweep(template: &RunConfig, lambdas: &[f64], seeds: &[u64], root: &Path, reuse: bool) -> Result<SweepOutcome> {
    template.validate()?;
    if lambdas.is_empty() || seeds.is_empty() {
        return Err(Error::Config("sweep needs at least one lambda and one seed".into()));
    }
    let jobs: Vec<(RunConfig, u64)> = lambdas
        .iter()
        .flat_map(|&l| {
            let mut c = template.clone();
            c.reg.lambda = l;
            seeds.iter().map(move |&s| (c.clone(), s))
        })
        .collect();
    for (c, _) in &jobs {
        c.validate()?;
    }
    let runs: Vec<SweepRun> = jobs
        .par_iter()
        .map(|(c, s)| {
            let r = sweep_one(c, *s, root, reuse).unwrap_or_else(|e| SweepRun {
                lambda: c.reg.lambda,
                seed: *s,
                status: format!("error: {e}"),
                mean_return: f64::NAN,
                isolation: f64::NAN,
                ari: f64::NAN,
                q: f64::NAN,
                sparsity_frac: f64::NAN,
                communities: f64::NAN,
            });
            eprintln!("sweep: lambda={} seed={} {}", r.lambda, r.seed, r.status);
            r
        })
        .collect();
    let aggregates = tables::aggregate(&runs);

    let key = serde_json::to_string(&(template.hash(), lambdas, seeds)).expect("sweep key serialises");
    let key = crate::artifact::sha256_hex(key.as_bytes());
    let dir = root.join(format!("sweep-{}", &key[..12]));
    let prov = Provenance { config_hash: template.hash(), seed: seeds[0], parent: String::new() };
    tables::write_text(&dir.join("runs.csv"), &tables::sweep_runs_csv(&prov, &runs)?)?;
    tables::write_text(&dir.join("sweep.csv"), &tables::sweep_csv(&prov, &aggregates)?)?;
    Ok(SweepOutcome { runs, aggregates, dir })
}
