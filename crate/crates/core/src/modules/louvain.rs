use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use super::graph::WeightedGraph;
use super::partition::{renumber, Partition};
use crate::mlp::NeuronId;
use crate::{rng, Error, Result};

/// Newman modularity of `partition` on `graph`.
pub fn modularity_q(graph: &WeightedGraph, partition: &Partition) -> Result<f64> {
    let labels = aligned_labels(graph, partition)?;
    if graph.total_weight() <= 0.0 {
        return Err(Error::EmptyGraph);
    }
    Ok(q_of_labels(graph.adjacency(), graph.len(), &labels))
}

/// Labels of `graph`'s nodes in graph order; every node must be assigned.
fn aligned_labels(graph: &WeightedGraph, partition: &Partition) -> Result<Vec<usize>> {
    if partition.len() != graph.len() {
        return Err(Error::NodeSetMismatch);
    }
    graph.nodes().iter().map(|&n| partition.label_of(n).ok_or(Error::NodeSetMismatch)).collect()
}

pub(crate) fn q_of_labels(adj: &[f64], n: usize, labels: &[usize]) -> f64 {
    let k = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut inside = vec![0.0; k];
    let mut tot = vec![0.0; k];
    let mut two_m = 0.0;
    for i in 0..n {
        for j in 0..n {
            let w = adj[i * n + j];
            two_m += w;
            tot[labels[i]] += w;
            if labels[i] == labels[j] {
                inside[labels[i]] += w;
            }
        }
    }
    if two_m <= 0.0 {
        return 0.0;
    }
    inside.iter().zip(&tot).map(|(a, t)| a / two_m - (t / two_m) * (t / two_m)).sum()
}

/// Local-move phase on a (possibly aggregated, self-looped) graph starting
/// from `comm`. Returns the final communities and whether anything moved.
fn local_moves(adj: &[f64], n: usize, two_m: f64, mut comm: Vec<usize>, rng: &mut ChaCha8Rng) -> (Vec<usize>, bool) {
    let deg: Vec<f64> = (0..n).map(|i| adj[i * n..(i + 1) * n].iter().sum()).collect();
    let mut tot = vec![0.0; n];
    for i in 0..n {
        tot[comm[i]] += deg[i];
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut link = vec![0.0; n];
    let mut touched: Vec<usize> = Vec::new();
    let mut any = false;
    loop {
        let mut moved = false;
        for &i in &order {
            let ci = comm[i];
            touched.clear();
            for j in 0..n {
                let w = adj[i * n + j];
                if j != i && w > 0.0 {
                    if link[comm[j]] == 0.0 {
                        touched.push(comm[j]);
                    }
                    link[comm[j]] += w;
                }
            }
            tot[ci] -= deg[i];
            let gain = |c: usize, link: &[f64], tot: &[f64]| link[c] - tot[c] * deg[i] / two_m;
            let tol = 1e-12 * deg[i];
            let mut best = ci;
            let mut best_gain = gain(ci, &link, &tot);
            touched.sort_unstable();
            for &c in &touched {
                if c == ci {
                    continue;
                }
                let g = gain(c, &link, &tot);
                if g > best_gain + tol {
                    best = c;
                    best_gain = g;
                }
            }
            tot[best] += deg[i];
            if best != ci {
                comm[i] = best;
                moved = true;
                any = true;
            }
            for &c in &touched {
                link[c] = 0.0;
            }
        }
        if !moved {
            break;
        }
    }
    (comm, any)
}

/// One multi-level pass: local moves from `init`, aggregate, repeat until
/// the top level is stable.
fn multilevel(adj: &[f64], n: usize, two_m: f64, init: Vec<usize>, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut membership: Vec<usize> = (0..n).collect();
    let mut level = adj.to_vec();
    let mut size = n;
    let mut start = init;
    loop {
        let (comm, moved) = local_moves(&level, size, two_m, start, rng);
        let (labels, k) = renumber(&comm);
        if !moved && k == size {
            break;
        }
        for m in membership.iter_mut() {
            *m = labels[*m];
        }
        let mut agg = vec![0.0; k * k];
        for i in 0..size {
            for j in 0..size {
                agg[labels[i] * k + labels[j]] += level[i * size + j];
            }
        }
        level = agg;
        size = k;
        start = (0..k).collect();
        if k == 1 {
            break;
        }
    }
    membership
}

/// Independent Louvain runs, each with its own visit order.
const RESTARTS: u64 = 10;

/// Multi-level Louvain on a dense adjacency; returns raw labels per node.
/// Each restart is refined by further passes seeded with its own result
/// until modularity stops improving, and the best restart is then
/// perturbed by moving single nodes into neighbouring communities and
/// re-running a pass from there, keeping strict improvements.
pub(crate) fn louvain_labels(adj: &[f64], n: usize, seed: u64) -> Vec<usize> {
    let two_m: f64 = adj.iter().sum();
    if n == 0 || two_m <= 0.0 {
        return (0..n).collect();
    }
    let tol = 1e-12;
    let mut best: Option<(Vec<usize>, f64)> = None;
    for r in 0..RESTARTS {
        let mut rng = rng::stream(seed, 0x4c6f_7576_0000 + r);
        let mut m = multilevel(adj, n, two_m, (0..n).collect(), &mut rng);
        let mut q = q_of_labels(adj, n, &m);
        loop {
            let next = multilevel(adj, n, two_m, m.clone(), &mut rng);
            let qn = q_of_labels(adj, n, &next);
            if qn > q + tol {
                m = next;
                q = qn;
            } else {
                break;
            }
        }
        if best.as_ref().is_none_or(|b| q > b.1 + tol) {
            best = Some((m, q));
        }
    }
    let (mut m, mut q) = best.expect("at least one restart");
    let mut rng = rng::stream(seed, 0x4c6f_7576_ffff);
    'perturb: loop {
        for i in 0..n {
            let mut targets: Vec<usize> =
                (0..n).filter(|&j| adj[i * n + j] > 0.0 && m[j] != m[i]).map(|j| m[j]).collect();
            targets.sort_unstable();
            targets.dedup();
            for c in targets {
                let mut init = m.clone();
                init[i] = c;
                let next = multilevel(adj, n, two_m, init, &mut rng);
                let qn = q_of_labels(adj, n, &next);
                if qn > q + tol {
                    m = next;
                    q = qn;
                    continue 'perturb;
                }
            }
        }
        break;
    }
    if q < 0.0 {
        return vec![0; n];
    }
    m
}

/// Louvain with seeded restarts and node visit orders.
pub fn louvain(graph: &WeightedGraph, seed: u64) -> Partition {
    let labels = louvain_labels(graph.adjacency(), graph.len(), seed);
    Partition::new(graph.nodes().to_vec(), labels, Vec::new()).expect("graph nodes are distinct")
}

/// Louvain on the graph without `inputs`, after which every input joins the
/// community it has the most edge weight into (lowest label on ties).
/// Inputs with no edge into any community are unassigned.
pub fn internal_louvain(graph: &WeightedGraph, inputs: &[NeuronId], seed: u64) -> Result<Partition> {
    for &id in inputs {
        if graph.index_of(id).is_none() {
            return Err(Error::UnknownNeuron(id));
        }
    }
    let inner = graph.subgraph(|n| !inputs.contains(&n));
    let base = louvain(&inner, seed);
    let mut nodes = base.nodes().to_vec();
    let mut labels = base.labels().to_vec();
    let mut unassigned = Vec::new();
    let k = base.community_count();
    for &id in inputs {
        let i = graph.index_of(id).expect("checked above");
        let mut sums = vec![0.0; k];
        for (j, &other) in graph.nodes().iter().enumerate() {
            if let Some(l) = base.label_of(other) {
                sums[l] += graph.weight(i, j);
            }
        }
        let mut best: Option<(usize, f64)> = None;
        for (l, &s) in sums.iter().enumerate() {
            if s > 0.0 && best.is_none_or(|b| s > b.1) {
                best = Some((l, s));
            }
        }
        match best {
            Some((l, _)) => {
                nodes.push(id);
                labels.push(l);
            }
            None => unassigned.push(id),
        }
    }
    Partition::new(nodes, labels, unassigned)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn graph(n: usize, edges: &[(usize, usize, f64)]) -> WeightedGraph {
        let mut adj = vec![0.0; n * n];
        for &(a, b, w) in edges {
            adj[a * n + b] = w;
            adj[b * n + a] = w;
        }
        WeightedGraph::from_dense((0..n).map(|i| NeuronId::new(1, i)).collect(), adj).unwrap()
    }

    fn cliques() -> WeightedGraph {
        let mut e = Vec::new();
        for base in [0, 4] {
            for a in 0..4 {
                for b in a + 1..4 {
                    e.push((base + a, base + b, 1.0));
                }
            }
        }
        graph(8, &e)
    }

    #[test]
    fn single_community_has_zero_q() {
        let g = graph(4, &[(0, 1, 1.0), (1, 2, 2.0), (2, 3, 0.5), (0, 3, 1.5)]);
        let p = Partition::single(g.nodes().to_vec());
        assert!(modularity_q(&g, &p).unwrap().abs() < 1e-15);
    }

    #[test]
    fn two_cliques_are_found() {
        let g = cliques();
        for seed in 0..10 {
            let p = louvain(&g, seed);
            assert_eq!(p.labels(), &[0, 0, 0, 0, 1, 1, 1, 1]);
            assert!((modularity_q(&g, &p).unwrap() - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn single_edge_joins_endpoints() {
        let g = graph(2, &[(0, 1, 0.3)]);
        assert_eq!(louvain(&g, 1).community_count(), 1);
    }

    #[test]
    fn empty_graph_q_is_an_error() {
        let g = graph(2, &[]);
        let p = louvain(&g, 0);
        assert_eq!(p.community_count(), 2);
        assert_eq!(modularity_q(&g, &p), Err(Error::EmptyGraph));
    }

    #[test]
    fn inputs_attach_to_strongest_community() {
        // Nodes 0..4 form a clique, 4..8 another; node 8 leans to the first,
        // node 9 touches nothing.
        let mut e = Vec::new();
        for base in [0, 4] {
            for a in 0..4 {
                for b in a + 1..4 {
                    e.push((base + a, base + b, 1.0));
                }
            }
        }
        e.push((8, 0, 0.6));
        e.push((8, 5, 0.4));
        let g = graph(10, &e);
        let inputs = [NeuronId::new(1, 8), NeuronId::new(1, 9)];
        let p = internal_louvain(&g, &inputs, 3).unwrap();
        assert_eq!(p.label_of(inputs[0]), p.label_of(NeuronId::new(1, 0)));
        assert_eq!(p.unassigned(), &[inputs[1]]);
        let inner = louvain(&g.subgraph(|n| !inputs.contains(&n)), 3);
        assert_eq!(p.restrict(|n| !inputs.contains(&n)), inner);
    }
}
