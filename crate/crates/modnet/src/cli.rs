//! Command-line front end.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use modnet_core::modules::Method;

use crate::checkpoint::{load_checkpoint, Stage};
use crate::config::RunConfig;
use crate::pipeline::{self, DetectOptions, InterventionOptions, RunDir};
use crate::render::{Format, RenderStyle};
use crate::tables;

#[derive(Debug, Parser)]
#[command(name = "modnet", version, about = "Train, prune and dissect modular policy networks")]
pub struct Cli {
    /// Worker threads for sweeps and intervention comparisons (1 = sequential).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train, prune and fine-tune one run per seed.
    Train(TrainArgs),
    /// Detect modules in a checkpoint and score them.
    Detect(DetectArgs),
    /// Saturate and negate every detected module and tabulate behaviour.
    Intervene(IntervenArgs),
    /// Full pipeline over a grid of connection-cost strengths and seeds.
    Sweep(SweepArgs),
    /// Draw checkpoints as SVG or DOT.
    Render(RenderArgs),
    /// Greedy evaluation of a checkpoint.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// JSON run configuration.
    #[arg(long, conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Built-in configuration, e.g. desk-do or full-g2k.
    #[arg(long)]
    pub preset: Option<String>,
    #[command(flatten)]
    pub overrides: Overrides,
}

/// Per-field overrides applied on top of the configuration.
#[derive(Debug, Default, Args)]
pub struct Overrides {
    #[arg(long, help_heading = "Environment")]
    pub mask_opponent: bool,

    #[arg(long, value_delimiter = ',', help_heading = "Training")]
    pub hidden: Option<Vec<usize>>,
    #[arg(long, help_heading = "Training")]
    pub train_frames: Option<u64>,
    #[arg(long, help_heading = "Training")]
    pub finetune_frames: Option<u64>,
    #[arg(long, help_heading = "Training")]
    pub num_envs: Option<usize>,
    #[arg(long, help_heading = "Training")]
    pub steps_per_env: Option<usize>,
    #[arg(long, help_heading = "Training")]
    pub minibatches: Option<usize>,
    #[arg(long, help_heading = "Training")]
    pub epochs: Option<usize>,
    #[arg(long, help_heading = "Training")]
    pub lr: Option<f64>,
    #[arg(long, help_heading = "Training")]
    pub adam_eps: Option<f64>,
    #[arg(long, help_heading = "Training")]
    pub max_grad_norm: Option<f64>,
    #[arg(long, help_heading = "Training")]
    pub gamma: Option<f64>,
    #[arg(long, help_heading = "Training")]
    pub gae_lambda: Option<f64>,
    #[arg(long, help_heading = "Training")]
    pub clip_eps: Option<f64>,
    #[arg(long, help_heading = "Training")]
    pub ent_coef: Option<f64>,
    #[arg(long, help_heading = "Training")]
    pub vf_coef: Option<f64>,
    #[arg(long, help_heading = "Training")]
    pub prune_fraction: Option<f64>,

    /// Connection-cost strength.
    #[arg(long, help_heading = "Regulariser")]
    pub lambda: Option<f64>,
    #[arg(long, help_heading = "Regulariser")]
    pub d_s: Option<f64>,
    /// log or l1.
    #[arg(long, help_heading = "Regulariser")]
    pub penalty: Option<String>,
    #[arg(long, help_heading = "Regulariser")]
    pub window_start: Option<f64>,
    #[arg(long, help_heading = "Regulariser")]
    pub window_end: Option<f64>,
    #[arg(long, help_heading = "Regulariser")]
    pub top_k: Option<usize>,
    #[arg(long, help_heading = "Regulariser")]
    pub swap_interval: Option<usize>,
    /// Count every connection as length 1.
    #[arg(long, help_heading = "Regulariser")]
    pub no_distance: bool,
    #[arg(long, help_heading = "Regulariser")]
    pub no_relocation: bool,

    /// louvain, internal, ft or ft_internal.
    #[arg(long, help_heading = "Detection")]
    pub method: Option<String>,
    #[arg(long, help_heading = "Detection")]
    pub trace_episodes: Option<usize>,
    #[arg(long, help_heading = "Detection")]
    pub trace_seed: Option<u64>,
    #[arg(long, help_heading = "Detection")]
    pub detect_seed: Option<u64>,

    #[arg(long, help_heading = "Interventions")]
    pub episodes: Option<usize>,
    #[arg(long, help_heading = "Interventions")]
    pub intervention_seed: Option<u64>,
    #[arg(long, help_heading = "Interventions")]
    pub saturation: Option<f64>,
    /// Also edit weights with only one endpoint in the module.
    #[arg(long, help_heading = "Interventions")]
    pub incident: bool,

    #[arg(long, help_heading = "Evaluation")]
    pub eval_episodes: Option<usize>,
    #[arg(long, help_heading = "Evaluation")]
    pub eval_seed: Option<u64>,
}

macro_rules! set {
    ($src:expr => $dst:expr) => {
        if let Some(v) = $src.clone() {
            $dst = v;
        }
    };
}

impl Overrides {
    pub fn apply(&self, c: &mut RunConfig) {
        if self.mask_opponent {
            c.env.mask_opponent = true;
        }
        let t = &mut c.train;
        set!(self.hidden => t.hidden);
        set!(self.train_frames => t.train_frames);
        set!(self.finetune_frames => t.finetune_frames);
        set!(self.num_envs => t.num_envs);
        set!(self.steps_per_env => t.steps_per_env);
        set!(self.minibatches => t.minibatches);
        set!(self.epochs => t.epochs);
        set!(self.lr => t.learning_rate);
        set!(self.adam_eps => t.adam_eps);
        set!(self.max_grad_norm => t.max_grad_norm);
        set!(self.gamma => t.gamma);
        set!(self.gae_lambda => t.gae_lambda);
        set!(self.clip_eps => t.clip_eps);
        set!(self.ent_coef => t.ent_coef);
        set!(self.vf_coef => t.vf_coef);
        set!(self.prune_fraction => t.prune_fraction);
        let r = &mut c.reg;
        set!(self.lambda => r.lambda);
        set!(self.d_s => r.d_s);
        set!(self.penalty => r.penalty);
        set!(self.window_start => r.window[0]);
        set!(self.window_end => r.window[1]);
        set!(self.top_k => r.top_k);
        set!(self.swap_interval => r.swap_interval);
        if self.no_distance {
            r.distance_weighted = false;
        }
        if self.no_relocation {
            r.relocation = false;
        }
        let d = &mut c.detection;
        set!(self.method => d.method);
        set!(self.trace_episodes => d.trace_episodes);
        set!(self.trace_seed => d.trace_seed);
        set!(self.detect_seed => d.detect_seed);
        let i = &mut c.intervention;
        set!(self.episodes => i.episodes);
        set!(self.intervention_seed => i.seed);
        set!(self.saturation => i.saturation);
        if self.incident {
            i.incident = true;
        }
        set!(self.eval_episodes => c.eval.episodes);
        set!(self.eval_seed => c.eval.seed);
    }
}

impl ConfigArgs {
    /// The selected configuration with overrides applied, or `fallback`
    /// when neither a file nor a preset is given.
    pub fn resolve(&self, fallback: Option<RunConfig>) -> anyhow::Result<RunConfig> {
        let mut c = match (&self.config, &self.preset, fallback) {
            (Some(p), _, _) => RunConfig::load(p)?,
            (None, Some(name), _) => RunConfig::preset(name)?,
            (None, None, Some(c)) => c,
            (None, None, None) => bail!("one of --config or --preset is required"),
        };
        self.overrides.apply(&mut c);
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Args)]
pub struct OutArgs {
    /// Output root; falls back to the config's output_dir, then ./runs.
    #[arg(long, env = "MODNET_OUT")]
    pub out: Option<PathBuf>,
    /// Load finished runs with the same config hash and seed instead of retraining.
    #[arg(long)]
    pub reuse: bool,
}

impl OutArgs {
    fn root(&self, cfg: &RunConfig) -> PathBuf {
        self.out.clone().or_else(|| cfg.output_dir.as_ref().map(PathBuf::from)).unwrap_or_else(|| "runs".into())
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[command(flatten)]
    pub out: OutArgs,
    /// Seeds to train; defaults to the config's seed list.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// Updates between progress lines on stderr (0 = silent).
    #[arg(long, default_value_t = 10)]
    pub log_every: usize,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct IntervenArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub partition: PathBuf,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[command(flatten)]
    pub out: OutArgs,
    #[arg(long, value_delimiter = ',', required = true)]
    pub lambdas: Vec<f64>,
    /// Defaults to the config's seed list.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    /// Checkpoints to draw.
    #[arg(long, required_unless_present = "run")]
    pub checkpoint: Vec<PathBuf>,
    /// Run directory; draws its raw, pruned and fine-tuned checkpoints.
    #[arg(long)]
    pub run: Option<PathBuf>,
    /// Partition to colour neurons by; applies to checkpoints it was detected on.
    #[arg(long)]
    pub partition: Option<PathBuf>,
    #[arg(long, default_value = "svg")]
    pub format: String,
    /// Defaults to the directory of each checkpoint.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub width: Option<f64>,
    #[arg(long)]
    pub height: Option<f64>,
    #[arg(long)]
    pub line_scale: Option<f64>,
    #[arg(long)]
    pub node_radius: Option<f64>,
    #[arg(long)]
    pub no_labels: bool,
}

fn checkpoint_defaults(path: &Path) -> anyhow::Result<RunConfig> {
    let (ck, _) = load_checkpoint(path).with_context(|| format!("loading checkpoint {}", path.display()))?;
    let mut c = RunConfig::for_env(ck.body.env_kind()?);
    c.env.mask_opponent = ck.body.mask_opponent;
    c.env.pong = ck.body.pong.clone();
    Ok(c)
}

fn train(a: &TrainArgs) -> anyhow::Result<()> {
    let cfg = a.config.resolve(None)?;
    let root = a.out.root(&cfg);
    let seeds = a.seeds.clone().unwrap_or_else(|| cfg.seeds.clone());
    for seed in seeds {
        let every = a.log_every;
        let mut log = |m: &modnet_core::ppo::UpdateMetrics| {
            if every > 0 && (m.update + 1).is_multiple_of(every) {
                eprintln!(
                    "seed {seed} update {:>5} frames {:>9} {:<8} return {:>7.3} lambda {:.4} sparsity {:.3}",
                    m.update + 1,
                    m.frames,
                    m.phase.name(),
                    m.mean_return,
                    m.lambda,
                    m.sparsity_frac
                );
            }
        };
        let run = pipeline::train_run(&cfg, seed, &root, a.out.reuse, &mut log)?;
        let ft = run.get(Stage::Finetuned);
        println!(
            "{} seed={seed} {} checkpoint={}",
            run.dir.path().display(),
            if run.reused { "reused" } else { "trained" },
            ft.short_hash()
        );
    }
    Ok(())
}

fn detect(a: &DetectArgs) -> anyhow::Result<()> {
    let cfg = a.config.resolve(Some(checkpoint_defaults(&a.checkpoint)?))?;
    let det = pipeline::detect(&a.checkpoint, &DetectOptions::from_config(&cfg)?)?;
    let method = Method::from_name(&det.file.body.method).expect("written by detect");
    println!("{}", pipeline::partition_path(&a.checkpoint, method).display());
    println!("{}", serde_json::to_string_pretty(&det.file.body.report)?);
    Ok(())
}

fn intervene(a: &IntervenArgs) -> anyhow::Result<()> {
    let cfg = a.config.resolve(Some(checkpoint_defaults(&a.checkpoint)?))?;
    let (rows, path) = pipeline::intervene(&a.checkpoint, &a.partition, &InterventionOptions::from_config(&cfg))?;
    println!("{}", path.display());
    let prov = crate::artifact::Provenance { config_hash: String::new(), seed: 0, parent: String::new() };
    let csv = tables::intervention_csv(&prov, &rows)?;
    print!("{}", csv.split_once('\n').map_or("", |(_, rest)| rest));
    Ok(())
}

fn eval(a: &EvalArgs) -> anyhow::Result<()> {
    let cfg = a.config.resolve(Some(checkpoint_defaults(&a.checkpoint)?))?;
    let s = pipeline::eval(&a.checkpoint, cfg.eval.episodes, cfg.eval.seed)?;
    let json = serde_json::json!({
        "episodes": s.episodes,
        "mean_return": s.mean_return,
        "success_rate": s.success_rate,
        "mean_length": s.mean_length,
    });
    println!("{}", serde_json::to_string_pretty(&json)?);
    Ok(())
}

fn sweep(a: &SweepArgs) -> anyhow::Result<()> {
    let cfg = a.config.resolve(None)?;
    let seeds = a.seeds.clone().unwrap_or_else(|| cfg.seeds.clone());
    let out = pipeline::sweep(&cfg, &a.lambdas, &seeds, &a.out.root(&cfg), a.out.reuse)?;
    println!("{}", out.dir.display());
    print!("{}", std::fs::read_to_string(out.dir.join("sweep.csv"))?);
    let failed = out.runs.iter().filter(|r| !r.ok()).count();
    if failed > 0 {
        bail!("{failed} of {} runs failed; see runs.csv", out.runs.len());
    }
    Ok(())
}

fn render(a: &RenderArgs) -> anyhow::Result<()> {
    let format: Format = a.format.parse()?;
    let mut style = RenderStyle::default();
    set!(a.width => style.width);
    set!(a.height => style.height);
    set!(a.line_scale => style.line_scale);
    set!(a.node_radius => style.node_radius);
    if a.no_labels {
        style.input_labels = false;
        style.output_labels = false;
    }
    let mut cks = a.checkpoint.clone();
    if let Some(run) = &a.run {
        let dir = RunDir(run.clone());
        cks.extend(Stage::ALL.iter().map(|&s| dir.checkpoint(s)));
    }
    let pf = a
        .partition
        .as_ref()
        .map(|p| crate::partition_file::PartitionFile::load(p, crate::partition_file::PARTITION))
        .transpose()?;
    for ck_path in &cks {
        let (ck, _) = load_checkpoint(ck_path)?;
        let overlay = match &pf {
            Some(pf) if pf.body.checkpoint == ck.hash => a.partition.as_deref(),
            _ => None,
        };
        let out_dir = a.out_dir.clone().unwrap_or_else(|| ck_path.parent().unwrap_or(Path::new(".")).to_path_buf());
        let path = pipeline::render_checkpoint(ck_path, overlay, &style, format, &out_dir)?;
        println!("{}", path.display());
    }
    if let Some(pf) = &pf {
        if !cks.iter().any(|p| load_checkpoint(p).map(|(ck, _)| ck.hash == pf.body.checkpoint).unwrap_or(false)) {
            bail!("partition {} was not detected on any of the given checkpoints", pf.short_hash());
        }
    }
    Ok(())
}

pub fn run<I, T>(args: I) -> anyhow::Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            e.print()?;
            return Ok(());
        }
        Err(e) => return Err(e.into()),
    };
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring the thread pool")?;
    }
    match &cli.command {
        Command::Train(a) => train(a),
        Command::Detect(a) => detect(a),
        Command::Intervene(a) => intervene(a),
        Command::Sweep(a) => sweep(a),
        Command::Render(a) => render(a),
        Command::Eval(a) => eval(a),
    }
}
