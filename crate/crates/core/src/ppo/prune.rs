use alloc::vec::Vec;

use crate::mlp::{NeuronId, SpatialMlp};
use crate::regularizer::weighted_degree;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PruneReport {
    pub masked_weights: usize,
    pub total_weights: usize,
    pub masked_neurons: usize,
    /// Fraction of all weights masked after pruning.
    pub sparsity: f64,
}

/// Magnitude pruning relative to each layer's maximum.
///
/// A weight is masked when `|w| < fraction * max |w|` of its weight layer. A
/// hidden neuron is then masked when its weighted degree falls below
/// `fraction` times the largest degree in its layer. Input and output
/// neurons are never removed.
pub fn prune(net: &mut SpatialMlp, fraction: f64) -> PruneReport {
    let before = net.live_weight_count();
    for l in 0..net.depth() {
        let max = net.weights(l).iter().fold(0.0f64, |m, w| m.max(w.abs()));
        if max == 0.0 {
            continue;
        }
        let threshold = fraction * max;
        let cols = net.sizes()[l + 1];
        let doomed: Vec<usize> =
            net.weights(l).iter().enumerate().filter(|(_, w)| w.abs() < threshold).map(|(k, _)| k).collect();
        for k in doomed {
            net.mask_weight(l, k / cols, k % cols);
        }
    }
    let mut masked_neurons = 0;
    let layers = net.sizes().len();
    for layer in 1..layers - 1 {
        let degrees: Vec<f64> =
            (0..net.sizes()[layer]).map(|i| weighted_degree(net, NeuronId::new(layer, i))).collect();
        let max = degrees.iter().copied().fold(0.0, f64::max);
        if max == 0.0 {
            continue;
        }
        for (i, &d) in degrees.iter().enumerate() {
            let id = NeuronId::new(layer, i);
            if d < fraction * max && net.is_neuron_live(id) {
                net.mask_neuron(id);
                masked_neurons += 1;
            }
        }
    }
    let after = net.live_weight_count();
    PruneReport {
        masked_weights: before - after,
        total_weights: net.weight_count(),
        masked_neurons,
        sparsity: net.sparsity(),
    }
}
