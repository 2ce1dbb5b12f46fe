use alloc::vec;
use alloc::vec::Vec;

use crate::mlp::{ActivationTrace, NeuronId, SpatialMlp};
use crate::regularizer::weighted_degree;
use crate::{Error, Result};

/// Undirected graph over neurons with a dense symmetric adjacency matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    nodes: Vec<NeuronId>,
    adj: Vec<f64>,
    degrees: Vec<f64>,
    total: f64,
}

impl WeightedGraph {
    /// Builds a graph from a row-major `n x n` adjacency. The matrix must be
    /// symmetric, non-negative and have a zero diagonal.
    pub fn from_dense(nodes: Vec<NeuronId>, adj: Vec<f64>) -> Result<Self> {
        let n = nodes.len();
        if adj.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, got: adj.len() });
        }
        for i in 0..n {
            if adj[i * n + i] != 0.0 {
                return Err(Error::Config("adjacency diagonal must be zero".into()));
            }
            for j in 0..i {
                let w = adj[i * n + j];
                if !(w >= 0.0 && w.is_finite()) || w != adj[j * n + i] {
                    return Err(Error::Config("adjacency must be symmetric, finite and non-negative".into()));
                }
            }
        }
        let mut sorted = nodes.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("duplicate graph node".into()));
        }
        let degrees: Vec<f64> = adj.chunks_exact(n.max(1)).take(n).map(|r| r.iter().sum()).collect();
        let total = degrees.iter().sum::<f64>() / 2.0;
        Ok(Self { nodes, adj, degrees, total })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[NeuronId] {
        &self.nodes
    }

    pub fn index_of(&self, id: NeuronId) -> Option<usize> {
        self.nodes.iter().position(|&n| n == id)
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.adj[i * self.len() + j]
    }

    pub fn adjacency(&self) -> &[f64] {
        &self.adj
    }

    /// Weighted degree `k_i`.
    pub fn degree(&self, i: usize) -> f64 {
        self.degrees[i]
    }

    /// Total edge weight `m`.
    pub fn total_weight(&self) -> f64 {
        self.total
    }

    /// Induced subgraph on the nodes for which `keep` holds, in the same order.
    pub fn subgraph(&self, keep: impl Fn(NeuronId) -> bool) -> Self {
        let idx: Vec<usize> = (0..self.len()).filter(|&i| keep(self.nodes[i])).collect();
        let k = idx.len();
        let mut adj = vec![0.0; k * k];
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                adj[a * k + b] = self.weight(i, j);
            }
        }
        let nodes = idx.iter().map(|&i| self.nodes[i]).collect();
        Self::from_dense(nodes, adj).expect("induced subgraph of a valid graph")
    }
}

/// Structural graph with `|w|` edges. Live neurons with no live incident
/// weight are left out and returned separately.
pub fn structural_graph(net: &SpatialMlp) -> Result<(WeightedGraph, Vec<NeuronId>)> {
    let mut nodes = Vec::new();
    let mut unassigned = Vec::new();
    for id in net.neurons() {
        if !net.is_neuron_live(id) {
            continue;
        }
        if weighted_degree(net, id) > 0.0 {
            nodes.push(id);
        } else {
            unassigned.push(id);
        }
    }
    if nodes.is_empty() {
        return Err(Error::FullyMasked);
    }
    let n = nodes.len();
    let pos = |id: NeuronId| nodes.binary_search(&id).ok();
    let mut adj = vec![0.0; n * n];
    for l in 0..net.depth() {
        let cols = net.sizes()[l + 1];
        for (k, &w) in net.weights(l).iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let (Some(a), Some(b)) = (pos(NeuronId::new(l, k / cols)), pos(NeuronId::new(l + 1, k % cols))) else {
                continue;
            };
            adj[a * n + b] = w.abs();
            adj[b * n + a] = w.abs();
        }
    }
    Ok((WeightedGraph::from_dense(nodes, adj)?, unassigned))
}

/// Pearson correlations between every pair of traced neurons.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub ids: Vec<NeuronId>,
    /// Row-major, symmetric, clamped to `[-1, 1]`.
    pub r: Vec<f64>,
    /// Neurons whose activation never varies; their correlations are 0.
    pub constant: Vec<bool>,
}

impl CorrelationMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.r[i * self.ids.len() + j]
    }
}

pub fn correlation_matrix(trace: &ActivationTrace) -> Result<CorrelationMatrix> {
    let t = trace.rows();
    if t < 2 {
        return Err(Error::TooFewSamples(t));
    }
    let n = trace.cols();
    let mut centred = vec![0.0; t * n];
    let mut norms = vec![0.0; n];
    let mut constant = vec![false; n];
    for c in 0..n {
        let mean = (0..t).map(|k| trace.data[k * n + c]).sum::<f64>() / t as f64;
        let mut ss = 0.0;
        for k in 0..t {
            let v = trace.data[k * n + c] - mean;
            centred[c * t + k] = v;
            ss += v * v;
        }
        let scale = mean.abs().max(1.0);
        constant[c] = ss <= 1e-24 * t as f64 * scale * scale;
        norms[c] = libm::sqrt(ss);
    }
    let mut r = vec![0.0; n * n];
    for i in 0..n {
        if constant[i] {
            continue;
        }
        r[i * n + i] = 1.0;
        let xi = &centred[i * t..(i + 1) * t];
        for j in 0..i {
            if constant[j] {
                continue;
            }
            let xj = &centred[j * t..(j + 1) * t];
            let dot: f64 = xi.iter().zip(xj).map(|(a, b)| a * b).sum();
            let v = (dot / (norms[i] * norms[j])).clamp(-1.0, 1.0);
            r[i * n + j] = v;
            r[j * n + i] = v;
        }
    }
    Ok(CorrelationMatrix { ids: trace.column_ids(), r, constant })
}

/// Complete graph with `|r_ij|` edges and a zero diagonal.
pub fn functional_graph(trace: &ActivationTrace) -> Result<WeightedGraph> {
    let corr = correlation_matrix(trace)?;
    let n = corr.ids.len();
    let mut adj: Vec<f64> = corr.r.iter().map(|v| v.abs()).collect();
    for i in 0..n {
        adj[i * n + i] = 0.0;
    }
    WeightedGraph::from_dense(corr.ids, adj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlp::{Activation, InitScheme, TraceSource};

    #[test]
    fn diagonal_net_gives_two_components() {
        let mut net = SpatialMlp::new(&[2, 2], Activation::Tanh, InitScheme::Zeros, 0).unwrap();
        net.set_weight(0, 0, 0, -0.7);
        net.set_weight(0, 1, 1, 0.4);
        let (g, un) = structural_graph(&net).unwrap();
        assert!(un.is_empty());
        assert_eq!(g.len(), 4);
        let a = g.index_of(NeuronId::new(0, 0)).unwrap();
        let b = g.index_of(NeuronId::new(1, 0)).unwrap();
        assert_eq!(g.weight(a, b), 0.7);
        assert_eq!(g.weight(b, a), 0.7);
        assert!((g.total_weight() - 1.1).abs() < 1e-15);
        let c = g.index_of(NeuronId::new(0, 1)).unwrap();
        assert_eq!(g.weight(a, c), 0.0);
    }

    #[test]
    fn zero_degree_neurons_are_unassigned() {
        let mut net = SpatialMlp::new(&[2, 2], Activation::Tanh, InitScheme::Zeros, 0).unwrap();
        net.set_weight(0, 0, 0, 1.0);
        let (g, un) = structural_graph(&net).unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(un, [NeuronId::new(0, 1), NeuronId::new(1, 1)]);
        let empty = SpatialMlp::new(&[2, 2], Activation::Tanh, InitScheme::Zeros, 0).unwrap();
        assert_eq!(structural_graph(&empty), Err(Error::FullyMasked));
    }

    fn trace(cols: &[&[f64]]) -> ActivationTrace {
        let mut t = ActivationTrace::new([cols.len()].to_vec(), TraceSource::default());
        for k in 0..cols[0].len() {
            let row: Vec<f64> = cols.iter().map(|c| c[k]).collect();
            t.push_row(&row);
        }
        t
    }

    #[test]
    fn pearson_examples() {
        let x = [0.3, -1.0, 2.5, 0.7, 0.1];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 3.0).collect();
        let z: Vec<f64> = x.iter().map(|v| -v).collect();
        let k = [0.25; 5];
        let c = correlation_matrix(&trace(&[&x, &y, &z, &k])).unwrap();
        assert!((c.get(0, 1) - 1.0).abs() < 1e-12);
        assert!((c.get(0, 2) + 1.0).abs() < 1e-12);
        assert_eq!(c.get(0, 0), 1.0);
        assert!(c.constant[3] && !c.constant[0]);
        assert!((0..4).all(|j| c.get(3, j) == 0.0));

        let g = functional_graph(&trace(&[&x, &y, &z, &k])).unwrap();
        assert_eq!(g.weight(0, 0), 0.0);
        assert!((g.weight(0, 2) - 1.0).abs() < 1e-12);
        assert_eq!(g.degree(3), 0.0);
    }

    #[test]
    fn correlation_needs_two_samples() {
        assert_eq!(correlation_matrix(&trace(&[&[1.0]])), Err(Error::TooFewSamples(1)));
    }

    #[test]
    fn rejects_asymmetric_adjacency() {
        let nodes = [NeuronId::new(0, 0), NeuronId::new(0, 1)].to_vec();
        assert!(WeightedGraph::from_dense(nodes.clone(), [0.0, 1.0, 2.0, 0.0].to_vec()).is_err());
        assert!(WeightedGraph::from_dense(nodes, [0.0, -1.0, -1.0, 0.0].to_vec()).is_err());
    }
}
