use alloc::vec;
use alloc::vec::Vec;

use super::partition::Partition;
use crate::mlp::{NeuronId, SpatialMlp};
use crate::{Error, Result};

/// Internal and external live weight mass of every community.
fn weight_mass(net: &SpatialMlp, partition: &Partition) -> (Vec<f64>, Vec<f64>) {
    let k = partition.community_count();
    let (mut int, mut ext) = (vec![0.0; k], vec![0.0; k]);
    for l in 0..net.depth() {
        let cols = net.sizes()[l + 1];
        for (idx, &w) in net.weights(l).iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let a = partition.label_of(NeuronId::new(l, idx / cols));
            let b = partition.label_of(NeuronId::new(l + 1, idx % cols));
            match (a, b) {
                (Some(a), Some(b)) if a == b => int[a] += w.abs(),
                (a, b) => {
                    for c in [a, b].into_iter().flatten() {
                        ext[c] += w.abs();
                    }
                }
            }
        }
    }
    (int, ext)
}

/// Isolation of the partition and of each community. A community with no
/// incident weight scores 0; a single-community partition scores 0 overall.
pub fn isolation(net: &SpatialMlp, partition: &Partition) -> (f64, Vec<f64>) {
    let (int, ext) = weight_mass(net, partition);
    let per: Vec<f64> = int.iter().zip(&ext).map(|(&i, &e)| if i + e > 0.0 { i / (i + e) } else { 0.0 }).collect();
    let overall = if per.len() <= 1 { 0.0 } else { per.iter().sum::<f64>() / per.len() as f64 };
    (overall, per)
}

#[inline]
fn pairs(n: usize) -> f64 {
    let n = n as f64;
    n * (n - 1.0) / 2.0
}

/// Adjusted Rand index (Hubert-Arabie). Both partitions must cover the same
/// nodes. Returns 1 when both partitions are trivial in the same way.
pub fn ari(p1: &Partition, p2: &Partition) -> Result<f64> {
    if p1.nodes() != p2.nodes() {
        return Err(Error::NodeSetMismatch);
    }
    let (k1, k2) = (p1.community_count(), p2.community_count());
    let mut table = vec![0usize; k1 * k2];
    for (&a, &b) in p1.labels().iter().zip(p2.labels()) {
        table[a * k2 + b] += 1;
    }
    let mut rows = vec![0usize; k1];
    let mut cols = vec![0usize; k2];
    for a in 0..k1 {
        for b in 0..k2 {
            rows[a] += table[a * k2 + b];
            cols[b] += table[a * k2 + b];
        }
    }
    let index: f64 = table.iter().map(|&c| pairs(c)).sum();
    let sr: f64 = rows.iter().map(|&c| pairs(c)).sum();
    let sc: f64 = cols.iter().map(|&c| pairs(c)).sum();
    let total = pairs(p1.len());
    if total == 0.0 {
        return Ok(1.0);
    }
    let expected = sr * sc / total;
    let max = (sr + sc) / 2.0;
    if max == expected {
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}

/// ARI over the nodes assigned in both partitions.
pub fn ari_common(p1: &Partition, p2: &Partition) -> f64 {
    let a = p1.restrict(|n| p2.label_of(n).is_some());
    let b = p2.restrict(|n| p1.label_of(n).is_some());
    ari(&a, &b).expect("restricted to common nodes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlp::{Activation, InitScheme};

    fn part(labels: &[usize]) -> Partition {
        Partition::new((0..labels.len()).map(|i| NeuronId::new(0, i)).collect(), labels.to_vec(), Vec::new()).unwrap()
    }

    #[test]
    fn ari_examples() {
        let p1 = part(&[0, 0, 0, 1, 1]);
        let p2 = part(&[0, 0, 1, 1, 1]);
        assert!((ari(&p1, &p2).unwrap() - 1.0 / 6.0).abs() < 1e-12);
        assert_eq!(ari(&p1, &p2).unwrap(), ari(&p2, &p1).unwrap());
        assert_eq!(ari(&p1, &p1).unwrap(), 1.0);
        assert_eq!(ari(&p1, &part(&[1, 1, 1, 0, 0])).unwrap(), 1.0);
        assert_eq!(ari(&p1, &part(&[0, 0, 0, 1])), Err(Error::NodeSetMismatch));
    }

    #[test]
    fn ari_common_ignores_unassigned() {
        let a = part(&[0, 0, 1, 1]);
        let b = Partition::new(
            (0..3).map(|i| NeuronId::new(0, i)).collect(),
            [5, 5, 6].to_vec(),
            [NeuronId::new(0, 3)].to_vec(),
        )
        .unwrap();
        assert_eq!(ari_common(&a, &b), 1.0);
    }

    fn two_block_net() -> SpatialMlp {
        // Inputs 0,1 feed hidden 0,1 respectively; hidden feed outputs the same way.
        let mut net = SpatialMlp::new(&[2, 2, 2], Activation::Tanh, InitScheme::Zeros, 0).unwrap();
        for l in 0..2 {
            net.set_weight(l, 0, 0, 1.0);
            net.set_weight(l, 1, 1, -2.0);
        }
        net
    }

    #[test]
    fn isolation_examples() {
        let net = two_block_net();
        let ids: Vec<NeuronId> = net.neurons().collect();
        let single = Partition::single(ids.clone());
        assert_eq!(isolation(&net, &single).0, 0.0);
        let blocks = Partition::new(ids.clone(), ids.iter().map(|n| n.index).collect(), Vec::new()).unwrap();
        let (i, per) = isolation(&net, &blocks);
        assert_eq!(i, 1.0);
        assert_eq!(per, [1.0, 1.0]);

        // W_int = 3, W_ext = 1.
        let mut net = SpatialMlp::new(&[1, 2, 1], Activation::Tanh, InitScheme::Zeros, 0).unwrap();
        net.set_weight(0, 0, 0, 1.0);
        net.set_weight(1, 0, 0, 2.0);
        net.set_weight(0, 0, 1, 1.0);
        let ids: Vec<NeuronId> = net.neurons().collect();
        let p = Partition::new(
            ids.clone(),
            ids.iter().map(|n| usize::from(*n == NeuronId::new(1, 1))).collect(),
            Vec::new(),
        )
        .unwrap();
        let (_, per) = isolation(&net, &p);
        assert!((per[0] - 0.75).abs() < 1e-15);
        assert_eq!(per[1], 0.0);
    }
}
