use alloc::vec;
use alloc::vec::Vec;

use super::graph::{functional_graph, structural_graph, WeightedGraph};
use super::louvain::{internal_louvain, louvain, modularity_q};
use super::metrics::{ari_common, isolation};
use super::partition::Partition;
use crate::mlp::{ActivationTrace, NeuronId, SpatialMlp};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ModularityReport {
    /// I(P).
    pub isolation: f64,
    /// ARI between the partition and the functional partition.
    pub ari: f64,
    /// Modularity of the partition on the structural graph.
    pub q: f64,
    /// `isolation + ari`.
    pub score: f64,
    /// I(C) per community label.
    pub per_community: Vec<f64>,
    pub communities: usize,
}

/// Scores `partition` against the structural graph of `net` and `functional`.
pub fn modularity_report(
    net: &SpatialMlp,
    structural: &WeightedGraph,
    partition: &Partition,
    functional: &Partition,
) -> Result<ModularityReport> {
    let (iso, per) = isolation(net, partition);
    let a = ari_common(partition, functional);
    Ok(ModularityReport {
        isolation: iso,
        ari: a,
        q: modularity_q(structural, partition)?,
        score: iso + a,
        per_community: per,
        communities: partition.community_count(),
    })
}

/// Pairs of communities joined by at least one live weight, `a < b`.
fn adjacent_pairs(net: &SpatialMlp, p: &Partition) -> Vec<(usize, usize)> {
    let k = p.community_count();
    let mut adj = vec![false; k * k];
    for l in 0..net.depth() {
        let cols = net.sizes()[l + 1];
        for (idx, &live) in net.weight_mask(l).iter().enumerate() {
            if !live {
                continue;
            }
            let a = p.label_of(NeuronId::new(l, idx / cols));
            let b = p.label_of(NeuronId::new(l + 1, idx % cols));
            if let (Some(a), Some(b)) = (a, b) {
                if a != b {
                    adj[a.min(b) * k + a.max(b)] = true;
                }
            }
        }
    }
    let mut out = Vec::new();
    for a in 0..k {
        for b in a + 1..k {
            if adj[a * k + b] {
                out.push((a, b));
            }
        }
    }
    out
}

fn score(net: &SpatialMlp, p: &Partition, functional: &Partition) -> f64 {
    isolation(net, p).0 + ari_common(p, functional)
}

/// Greedily merges the adjacent pair of modules that most increases
/// `I(P) + ARI(P, functional)` until no merge strictly improves it.
pub fn finetune_partition(
    net: &SpatialMlp,
    structural: &Partition,
    functional: &Partition,
) -> Result<(Partition, ModularityReport)> {
    let (graph, _) = structural_graph(net)?;
    let mut current = structural.clone();
    let mut best_score = score(net, &current, functional);
    loop {
        let mut best: Option<(Partition, f64)> = None;
        for (a, b) in adjacent_pairs(net, &current) {
            let cand = current.merge(a, b)?;
            let s = score(net, &cand, functional);
            if best.as_ref().is_none_or(|x| s > x.1) {
                best = Some((cand, s));
            }
        }
        match best {
            Some((cand, s)) if s > best_score => {
                current = cand;
                best_score = s;
            }
            _ => break,
        }
    }
    let report = modularity_report(net, &graph, &current, functional)?;
    Ok((current, report))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Louvain,
    Internal,
    Ft,
    FtInternal,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Louvain, Method::Internal, Method::Ft, Method::FtInternal];

    pub fn name(self) -> &'static str {
        match self {
            Method::Louvain => "louvain",
            Method::Internal => "internal",
            Method::Ft => "ft",
            Method::FtInternal => "ft_internal",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == s)
    }

    fn internal(self) -> bool {
        matches!(self, Method::Internal | Method::FtInternal)
    }

    fn finetuned(self) -> bool {
        matches!(self, Method::Ft | Method::FtInternal)
    }
}

/// Structural partition of `net` by `method`, scored against the functional
/// partition computed the same way from `trace`.
pub fn detect_modules(
    net: &SpatialMlp,
    trace: &ActivationTrace,
    method: Method,
    seed: u64,
) -> Result<(Partition, ModularityReport)> {
    if trace.sizes != net.sizes() {
        return Err(Error::DimensionMismatch { expected: net.neuron_count(), got: trace.cols() });
    }
    let (gs, unassigned) = structural_graph(net)?;
    let gf = functional_graph(trace)?.subgraph(|n| gs.index_of(n).is_some());
    let (ps, pf) = if method.internal() {
        let inputs =
            |g: &WeightedGraph| -> Vec<NeuronId> { g.nodes().iter().copied().filter(|n| n.layer == 0).collect() };
        (internal_louvain(&gs, &inputs(&gs), seed)?, internal_louvain(&gf, &inputs(&gf), seed)?)
    } else {
        (louvain(&gs, seed), louvain(&gf, seed))
    };
    let (partition, report) = if method.finetuned() {
        finetune_partition(net, &ps, &pf)?
    } else {
        let r = modularity_report(net, &gs, &ps, &pf)?;
        (ps, r)
    };
    let mut all_unassigned = unassigned;
    all_unassigned.extend_from_slice(partition.unassigned());
    let partition = Partition::new(partition.nodes().to_vec(), partition.labels().to_vec(), all_unassigned)?;
    Ok((partition, report))
}
