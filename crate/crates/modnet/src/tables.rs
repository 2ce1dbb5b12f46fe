//! CSV outputs: training metrics, intervention comparisons and sweeps.
//!
//! Each file starts with one `#` line naming the config hash, seed and
//! parent artifact hash it was produced from.

use std::fs;
use std::path::Path;

use modnet_core::intervention::InterventionRow;
use modnet_core::ppo::UpdateMetrics;
use serde::Serialize;

use crate::artifact::Provenance;
use crate::error::{io, Error, Result};

pub fn provenance_line(p: &Provenance) -> String {
    format!("# config_hash={} seed={} parent={}\n", p.config_hash, p.seed, p.parent)
}

/// Parses the header line written by [`provenance_line`].
pub fn read_provenance(text: &str) -> Option<Provenance> {
    let line = text.lines().next()?.strip_prefix("# ")?;
    let mut fields = line.split(' ').map(|kv| kv.split_once('='));
    let mut next = |key: &str| match fields.next() {
        Some(Some((k, v))) if k == key => Some(v.to_string()),
        _ => None,
    };
    let config_hash = next("config_hash")?;
    let seed = next("seed")?.parse().ok()?;
    let parent = next("parent")?;
    Some(Provenance { config_hash, seed, parent })
}

fn to_csv<R: Serialize>(prov: &Provenance, rows: impl IntoIterator<Item = R>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let body = w.into_inner().map_err(|e| Error::Invalid(e.to_string()))?;
    Ok(provenance_line(prov) + &String::from_utf8(body).expect("csv output is utf-8"))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io(dir))?;
    }
    fs::write(path, text).map_err(io(path))
}

#[derive(Debug, Serialize)]
struct MetricsRow {
    update: usize,
    frames: u64,
    mean_return: f64,
    loss_total: f64,
    loss_cc: f64,
    lambda: f64,
    sparsity_frac: f64,
}

pub fn metrics_csv(prov: &Provenance, rows: &[UpdateMetrics]) -> Result<String> {
    to_csv(
        prov,
        rows.iter().map(|m| MetricsRow {
            update: m.update,
            frames: m.frames,
            mean_return: m.mean_return,
            loss_total: m.loss_total,
            loss_cc: m.loss_cc,
            lambda: m.lambda,
            sparsity_frac: m.sparsity_frac,
        }),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InterventionCsvRow {
    /// Empty for the baseline.
    pub community: String,
    pub mode: String,
    pub group: String,
    pub freq_pct: f64,
    pub failure_pct: f64,
    pub success_pct: f64,
    pub continue_pct: f64,
    pub mean_return: f64,
}

pub fn intervention_rows(rows: &[InterventionRow]) -> Vec<InterventionCsvRow> {
    let mut out = Vec::new();
    for row in rows {
        let (community, mode) = match row.target {
            Some((c, m)) => (c.to_string(), m.name().to_string()),
            None => (String::new(), "baseline".to_string()),
        };
        for g in &row.report.groups {
            out.push(InterventionCsvRow {
                community: community.clone(),
                mode: mode.clone(),
                group: g.group.label().into(),
                freq_pct: g.freq_pct,
                failure_pct: g.failure_pct,
                success_pct: g.success_pct,
                continue_pct: g.continue_pct,
                mean_return: row.report.mean_return,
            });
        }
    }
    out
}

pub fn intervention_csv(prov: &Provenance, rows: &[InterventionRow]) -> Result<String> {
    to_csv(prov, intervention_rows(rows))
}

/// Outcome of one (lambda, seed) sweep run; metrics are NaN when it failed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRun {
    pub lambda: f64,
    pub seed: u64,
    pub status: String,
    pub mean_return: f64,
    pub isolation: f64,
    pub ari: f64,
    pub q: f64,
    pub sparsity_frac: f64,
    pub communities: f64,
}

impl SweepRun {
    pub fn ok(&self) -> bool {
        self.status == "ok"
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepAggregate {
    pub lambda: f64,
    pub runs: usize,
    pub failed: usize,
    pub mean_return: f64,
    pub std_return: f64,
    pub mean_isolation: f64,
    pub std_isolation: f64,
    pub mean_ari: f64,
    pub std_ari: f64,
    pub mean_sparsity: f64,
    pub std_sparsity: f64,
}

/// Mean and sample standard deviation; the deviation is 0 for one value
/// and both are NaN for none.
pub fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() == 1 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// One row per distinct lambda, in first-appearance order, over the
/// successful runs.
pub fn aggregate(runs: &[SweepRun]) -> Vec<SweepAggregate> {
    let mut lambdas: Vec<f64> = Vec::new();
    for r in runs {
        if !lambdas.iter().any(|l| l.to_bits() == r.lambda.to_bits()) {
            lambdas.push(r.lambda);
        }
    }
    lambdas
        .into_iter()
        .map(|lambda| {
            let all: Vec<&SweepRun> = runs.iter().filter(|r| r.lambda.to_bits() == lambda.to_bits()).collect();
            let ok: Vec<&SweepRun> = all.iter().copied().filter(|r| r.ok()).collect();
            let col = |f: fn(&SweepRun) -> f64| mean_std(&ok.iter().map(|r| f(r)).collect::<Vec<_>>());
            let (mean_return, std_return) = col(|r| r.mean_return);
            let (mean_isolation, std_isolation) = col(|r| r.isolation);
            let (mean_ari, std_ari) = col(|r| r.ari);
            let (mean_sparsity, std_sparsity) = col(|r| r.sparsity_frac);
            SweepAggregate {
                lambda,
                runs: all.len(),
                failed: all.len() - ok.len(),
                mean_return,
                std_return,
                mean_isolation,
                std_isolation,
                mean_ari,
                std_ari,
                mean_sparsity,
                std_sparsity,
            }
        })
        .collect()
}

pub fn sweep_runs_csv(prov: &Provenance, runs: &[SweepRun]) -> Result<String> {
    to_csv(prov, runs)
}

pub fn sweep_csv(prov: &Provenance, rows: &[SweepAggregate]) -> Result<String> {
    to_csv(prov, rows)
}
