use std::path::Path;

use modnet::checkpoint::Stage;
use modnet::config::RunConfig;
use modnet::pipeline::{self, DetectOptions, InterventionOptions, TrainRun};
use modnet::render::{Format, RenderStyle};
use modnet::tables::read_provenance;
use modnet::Error;

fn tiny() -> RunConfig {
    let mut c = RunConfig::preset("desk-do").unwrap();
    c.reg.lambda = 0.05;
    c.train.train_frames = 8 * 2048;
    c.train.finetune_frames = 4 * 2048;
    c.detection.trace_episodes = 30;
    c.intervention.episodes = 40;
    c.eval.episodes = 20;
    c
}

fn train(root: &Path) -> TrainRun {
    pipeline::train_run(&tiny(), 3, root, false, &mut |_| {}).unwrap()
}

#[test]
fn train_writes_chained_checkpoints_and_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let run = train(dir.path());
    assert!(!run.reused);
    let [raw, pruned, ft] = [Stage::Raw, Stage::Pruned, Stage::Finetuned].map(|s| run.get(s).clone());
    assert_eq!(raw.provenance.parent, "");
    assert_eq!(pruned.provenance.parent, raw.hash);
    assert_eq!(ft.provenance.parent, pruned.hash);
    assert_eq!(ft.body.frames, 12 * 2048);

    let metrics = std::fs::read_to_string(run.dir.metrics()).unwrap();
    let prov = read_provenance(&metrics).unwrap();
    assert_eq!((prov.seed, prov.parent.as_str()), (3, ft.hash.as_str()));
    assert_eq!(metrics.lines().count(), 2 + 12);
    let saved = RunConfig::load(&run.dir.config()).unwrap();
    assert_eq!(saved.hash(), tiny().hash());

    let again = pipeline::train_run(&tiny(), 3, dir.path(), true, &mut |_| panic!("retrained")).unwrap();
    assert!(again.reused);
    assert_eq!(again.get(Stage::Finetuned).hash, ft.hash);
}

#[test]
fn detect_reuses_trace_and_intervene_writes_all_rows() {
    let dir = tempfile::tempdir().unwrap();
    let run = train(dir.path());
    let ck = run.dir.checkpoint(Stage::Finetuned);
    let opts = DetectOptions::from_config(&tiny()).unwrap();
    let first = pipeline::detect(&ck, &opts).unwrap();
    assert!(!first.trace_reused);
    assert_eq!(first.file.body.checkpoint, run.get(Stage::Finetuned).hash);
    assert_eq!(first.file.provenance.parent, first.trace.hash);

    let second = pipeline::detect(&ck, &opts).unwrap();
    assert!(second.trace_reused);
    assert_eq!(second.file.hash, first.file.hash);
    let more = pipeline::detect(&ck, &DetectOptions { trace_episodes: 31, ..opts }).unwrap();
    assert!(!more.trace_reused);

    let part = pipeline::partition_path(&ck, opts.method);
    let (rows, csv) = pipeline::intervene(&ck, &part, &InterventionOptions::from_config(&tiny())).unwrap();
    let k = first.partition.community_count();
    assert_eq!(rows.len(), 1 + 2 * k);
    let text = std::fs::read_to_string(&csv).unwrap();
    let prov = read_provenance(&text).unwrap();
    assert_eq!(
        prov.parent,
        modnet::partition_file::PartitionFile::load(&part, modnet::partition_file::PARTITION).unwrap().hash
    );
    assert_eq!(
        text.lines().nth(1).unwrap(),
        "community,mode,group,freq_pct,failure_pct,success_pct,continue_pct,mean_return"
    );
    // Two axis groups per row.
    assert_eq!(text.lines().count(), 2 + 2 * rows.len());
}

#[test]
fn intervene_rejects_partition_from_another_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let run = train(dir.path());
    let pruned = run.dir.checkpoint(Stage::Pruned);
    let opts = DetectOptions::from_config(&tiny()).unwrap();
    pipeline::detect(&pruned, &opts).unwrap();
    let err = pipeline::intervene(
        &run.dir.checkpoint(Stage::Finetuned),
        &pipeline::partition_path(&pruned, opts.method),
        &InterventionOptions::from_config(&tiny()),
    )
    .unwrap_err();
    assert!(matches!(err, Error::Stale { .. }), "{err}");
}

#[test]
fn edited_checkpoint_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let run = train(dir.path());
    let ck = run.dir.checkpoint(Stage::Finetuned);
    let text = std::fs::read_to_string(&ck).unwrap().replacen("\"seed\": 3", "\"seed\": 4", 1);
    std::fs::write(&ck, text).unwrap();
    let err = pipeline::eval(&ck, 5, 0).unwrap_err();
    assert!(matches!(err, Error::Corrupt { .. }), "{err}");
}

#[test]
fn render_is_deterministic_and_named_by_hash() {
    let dir = tempfile::tempdir().unwrap();
    let run = train(dir.path());
    let ck = run.dir.checkpoint(Stage::Finetuned);
    let opts = DetectOptions::from_config(&tiny()).unwrap();
    pipeline::detect(&ck, &opts).unwrap();
    let part = pipeline::partition_path(&ck, opts.method);
    let out = dir.path().join("figs");
    let a = pipeline::render_checkpoint(&ck, Some(&part), &RenderStyle::default(), Format::Svg, &out).unwrap();
    let bytes = std::fs::read(&a).unwrap();
    let b = pipeline::render_checkpoint(&ck, Some(&part), &RenderStyle::default(), Format::Svg, &out).unwrap();
    assert_eq!(a, b);
    assert_eq!(std::fs::read(&b).unwrap(), bytes);
    let name = a.file_name().unwrap().to_string_lossy().into_owned();
    assert!(name.starts_with("finetuned-") && name.ends_with(".svg"), "{name}");
    let svg = String::from_utf8(bytes).unwrap();
    assert!(svg.starts_with("<?xml") && svg.contains("<line") && svg.contains("<circle"));

    let dot = pipeline::render_checkpoint(&ck, None, &RenderStyle::default(), Format::Dot, &out).unwrap();
    let dot = std::fs::read_to_string(dot).unwrap();
    assert!(dot.starts_with("/*") && dot.contains("graph network {") && dot.contains("pos=\""));
}

#[test]
fn sweep_aggregates_per_lambda() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = tiny();
    c.train.train_frames = 4 * 2048;
    c.train.finetune_frames = 2 * 2048;
    let out = pipeline::sweep(&c, &[0.0, 0.1], &[0, 1], dir.path(), false).unwrap();
    assert_eq!(out.runs.len(), 4);
    assert!(out.runs.iter().all(|r| r.ok()), "{:?}", out.runs);
    assert_eq!(out.aggregates.len(), 2);
    assert!(out.aggregates.iter().all(|a| a.runs == 2 && a.failed == 0));
    let csv = std::fs::read_to_string(out.dir.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2 + 2);
    let runs = std::fs::read_to_string(out.dir.join("runs.csv")).unwrap();
    assert_eq!(runs.lines().count(), 2 + 4);
}
