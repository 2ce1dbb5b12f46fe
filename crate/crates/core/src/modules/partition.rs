use alloc::vec;
use alloc::vec::Vec;

use crate::mlp::NeuronId;
use crate::{Error, Result};

/// Assignment of neurons to communities.
///
/// Nodes are kept sorted and labels are renumbered by first appearance, so
/// equal partitions compare equal regardless of how they were built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    nodes: Vec<NeuronId>,
    labels: Vec<usize>,
    count: usize,
    unassigned: Vec<NeuronId>,
}

impl Partition {
    pub fn new(nodes: Vec<NeuronId>, labels: Vec<usize>, mut unassigned: Vec<NeuronId>) -> Result<Self> {
        if nodes.len() != labels.len() {
            return Err(Error::DimensionMismatch { expected: nodes.len(), got: labels.len() });
        }
        let mut pairs: Vec<(NeuronId, usize)> = nodes.into_iter().zip(labels).collect();
        pairs.sort_unstable_by_key(|p| p.0);
        unassigned.sort_unstable();
        unassigned.dedup();
        if pairs.windows(2).any(|w| w[0].0 == w[1].0) || pairs.iter().any(|p| unassigned.binary_search(&p.0).is_ok()) {
            return Err(Error::NodeSetMismatch);
        }
        let (nodes, raw): (Vec<NeuronId>, Vec<usize>) = pairs.into_iter().unzip();
        let (labels, count) = renumber(&raw);
        Ok(Self { nodes, labels, count, unassigned })
    }

    /// Every node in one community.
    pub fn single(nodes: Vec<NeuronId>) -> Self {
        let labels = vec![0; nodes.len()];
        Self::new(nodes, labels, Vec::new()).expect("distinct nodes")
    }

    pub fn nodes(&self) -> &[NeuronId] {
        &self.nodes
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn unassigned(&self) -> &[NeuronId] {
        &self.unassigned
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn community_count(&self) -> usize {
        self.count
    }

    pub fn label_of(&self, id: NeuronId) -> Option<usize> {
        self.nodes.binary_search(&id).ok().map(|i| self.labels[i])
    }

    pub fn members(&self, label: usize) -> Vec<NeuronId> {
        self.nodes.iter().zip(&self.labels).filter(|p| *p.1 == label).map(|p| *p.0).collect()
    }

    pub fn communities(&self) -> Vec<Vec<NeuronId>> {
        let mut out = vec![Vec::new(); self.count];
        for (&n, &l) in self.nodes.iter().zip(&self.labels) {
            out[l].push(n);
        }
        out
    }

    /// Keeps only nodes for which `keep` holds; dropped nodes are discarded,
    /// not marked unassigned.
    pub fn restrict(&self, keep: impl Fn(NeuronId) -> bool) -> Self {
        let (nodes, labels): (Vec<NeuronId>, Vec<usize>) =
            self.nodes.iter().zip(&self.labels).filter(|p| keep(*p.0)).map(|(n, l)| (*n, *l)).unzip();
        let unassigned = self.unassigned.iter().copied().filter(|&n| keep(n)).collect();
        Self::new(nodes, labels, unassigned).expect("subset of a valid partition")
    }

    /// Moves every node of community `b` into community `a`.
    pub fn merge(&self, a: usize, b: usize) -> Result<Self> {
        for c in [a, b] {
            if c >= self.count {
                return Err(Error::UnknownCommunity(c));
            }
        }
        let labels = self.labels.iter().map(|&l| if l == b { a } else { l }).collect();
        Self::new(self.nodes.clone(), labels, self.unassigned.clone())
    }
}

/// Relabels to `0..k` in order of first appearance.
pub(crate) fn renumber(raw: &[usize]) -> (Vec<usize>, usize) {
    let mut map: Vec<(usize, usize)> = Vec::new();
    let mut out = Vec::with_capacity(raw.len());
    for &r in raw {
        let l = match map.iter().find(|m| m.0 == r) {
            Some(m) => m.1,
            None => {
                map.push((r, map.len()));
                map.len() - 1
            }
        };
        out.push(l);
    }
    (out, map.len())
}
