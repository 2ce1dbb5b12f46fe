//! Distance-weighted connection cost and neuron relocation.
//!
//! Each weight `w` between neurons at distance `d` pays
//! `ln((d - d_s) |w| + 1)` (or `(d - d_s) |w|` for the L1 variant), and the
//! sum is scaled by `lambda`. Relocation greedily swaps the x-coordinates of
//! high-degree neurons to shorten their heaviest connections.

use alloc::vec::Vec;

use crate::mlp::{Gradients, NeuronId, SpatialMlp};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Penalty {
    Log,
    L1,
}

impl Penalty {
    pub fn name(self) -> &'static str {
        match self {
            Penalty::Log => "log",
            Penalty::L1 => "l1",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "log" => Some(Penalty::Log),
            "l1" => Some(Penalty::L1),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegConfig {
    /// Target regularisation strength.
    pub lambda: f64,
    pub d_s: f64,
    pub penalty: Penalty,
    /// When false every weight length counts as 1.
    pub distance_weighted: bool,
    /// Fractions of training over which lambda ramps from 0 to its target.
    pub window: (f64, f64),
    /// Number of highest-degree neurons per layer considered for swaps.
    pub top_k: usize,
    /// Relocation runs every `swap_interval` updates.
    pub swap_interval: usize,
    pub relocation: bool,
}

impl Default for RegConfig {
    fn default() -> Self {
        Self {
            lambda: 0.0,
            d_s: 0.95,
            penalty: Penalty::Log,
            distance_weighted: true,
            window: (0.2, 0.3),
            top_k: 10,
            swap_interval: 2,
            relocation: true,
        }
    }
}

impl RegConfig {
    pub fn with_lambda(lambda: f64) -> Self {
        Self { lambda, ..Self::default() }
    }

    /// Plain PPO: no cost and no relocation.
    pub fn vanilla() -> Self {
        Self { lambda: 0.0, relocation: false, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad("lambda must be finite and >= 0");
        }
        if !(self.d_s < 1.0) {
            return bad("d_s must be < 1");
        }
        let (s, e) = self.window;
        if !(0.0 <= s && s <= e && e <= 1.0) {
            return bad("schedule window must satisfy 0 <= start <= end <= 1");
        }
        if self.swap_interval == 0 {
            return bad("swap_interval must be >= 1");
        }
        Ok(())
    }

    #[inline]
    fn scale(&self, d: f64) -> f64 {
        if self.distance_weighted {
            d - self.d_s
        } else {
            1.0
        }
    }

    #[inline]
    fn term(&self, d: f64, w: f64) -> f64 {
        let s = self.scale(d) * w.abs();
        match self.penalty {
            Penalty::Log => libm::log1p(s),
            Penalty::L1 => s,
        }
    }
}

#[inline]
fn length(dx: f64) -> f64 {
    // Adjacent layers are one unit apart vertically.
    libm::sqrt(dx * dx + 1.0)
}

/// Euclidean distance between neurons in adjacent layers.
pub fn neuron_distance(net: &SpatialMlp, a: NeuronId, b: NeuronId) -> Result<f64> {
    for id in [a, b] {
        if !net.contains(id) {
            return Err(Error::UnknownNeuron(id));
        }
    }
    if b.layer != a.layer + 1 {
        return Err(Error::NotAdjacent { a, b });
    }
    Ok(length(net.x(b) - net.x(a)))
}

/// Unscaled cost summed over one weight layer.
fn layer_sum(net: &SpatialMlp, cfg: &RegConfig, l: usize) -> Result<f64> {
    let (xa, xb) = (net.xs(l), net.xs(l + 1));
    let cols = xb.len();
    let mut total = 0.0;
    for (i, row) in net.weights(l).chunks_exact(cols).enumerate() {
        for (j, &w) in row.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let d = length(xb[j] - xa[i]);
            let s = cfg.scale(d) * w.abs();
            if s <= -1.0 {
                return Err(Error::CostDomain(s));
            }
            total += cfg.term(d, w);
        }
    }
    Ok(total)
}

/// Connection cost with the target `lambda` from `cfg`.
pub fn connection_cost(net: &SpatialMlp, cfg: &RegConfig) -> Result<f64> {
    connection_cost_with(net, cfg, cfg.lambda)
}

pub fn connection_cost_with(net: &SpatialMlp, cfg: &RegConfig, lambda: f64) -> Result<f64> {
    let mut total = 0.0;
    for l in 0..net.depth() {
        total += layer_sum(net, cfg, l)?;
    }
    Ok(lambda * total)
}

/// Adds `d(lambda * cost)/dw` into `grads`. The subgradient at `w = 0` is 0.
pub fn add_cost_gradient(net: &SpatialMlp, cfg: &RegConfig, lambda: f64, grads: &mut Gradients) {
    if lambda == 0.0 {
        return;
    }
    for l in 0..net.depth() {
        let (xa, xb) = (net.xs(l), net.xs(l + 1));
        let cols = xb.len();
        let g = &mut grads.weights[l];
        for (i, row) in net.weights(l).chunks_exact(cols).enumerate() {
            for (j, &w) in row.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                let s = cfg.scale(length(xb[j] - xa[i]));
                let sign = w.signum();
                g[i * cols + j] += lambda
                    * match cfg.penalty {
                        Penalty::Log => s * sign / (s * w.abs() + 1.0),
                        Penalty::L1 => s * sign,
                    };
            }
        }
    }
}

/// Lambda at `step` of `total`: 0 before the window, the target after it,
/// linear in between.
pub fn schedule_lambda(step: usize, total: usize, cfg: &RegConfig) -> f64 {
    if total == 0 {
        return cfg.lambda;
    }
    let p = step as f64 / total as f64;
    let (s, e) = cfg.window;
    if p < s {
        0.0
    } else if p >= e {
        cfg.lambda
    } else {
        cfg.lambda * (p - s) / (e - s)
    }
}

/// Sum of absolute incident weights, both incoming and outgoing.
pub fn weighted_degree(net: &SpatialMlp, n: NeuronId) -> f64 {
    let sizes = net.sizes();
    let mut total = 0.0;
    if n.layer > 0 {
        let cols = sizes[n.layer];
        total += net.weights(n.layer - 1).iter().skip(n.index).step_by(cols).map(|w| w.abs()).sum::<f64>();
    }
    if n.layer + 1 < sizes.len() {
        let cols = sizes[n.layer + 1];
        total += net.weights(n.layer)[n.index * cols..(n.index + 1) * cols].iter().map(|w| w.abs()).sum::<f64>();
    }
    total
}

/// Unscaled cost of every weight touching neurons `a` or `b` of `layer`.
fn local_cost(net: &SpatialMlp, cfg: &RegConfig, layer: usize, a: usize, b: usize) -> f64 {
    let sizes = net.sizes();
    let xs = net.xs(layer);
    let mut total = 0.0;
    if layer > 0 {
        let xp = net.xs(layer - 1);
        let cols = sizes[layer];
        let w = net.weights(layer - 1);
        for (i, &x_in) in xp.iter().enumerate() {
            for n in [a, b] {
                let v = w[i * cols + n];
                if v != 0.0 {
                    total += cfg.term(length(xs[n] - x_in), v);
                }
            }
        }
    }
    if layer + 1 < sizes.len() {
        let xn = net.xs(layer + 1);
        let cols = sizes[layer + 1];
        let w = net.weights(layer);
        for n in [a, b] {
            for (j, &x_out) in xn.iter().enumerate() {
                let v = w[n * cols + j];
                if v != 0.0 {
                    total += cfg.term(length(x_out - xs[n]), v);
                }
            }
        }
    }
    total
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RelocationStats {
    pub candidates: usize,
    pub swaps: usize,
}

/// Greedy in-layer swapping of the `top_k` highest-degree neurons of every
/// layer, input to output. Only coordinates change and the unscaled cost
/// never increases.
pub fn relocate_neurons(net: &mut SpatialMlp, cfg: &RegConfig) -> RelocationStats {
    let mut stats = RelocationStats::default();
    if cfg.top_k == 0 {
        return stats;
    }
    for layer in 0..net.sizes().len() {
        let n = net.sizes()[layer];
        let mut order: Vec<(usize, f64)> = (0..n).map(|i| (i, weighted_degree(net, NeuronId::new(layer, i)))).collect();
        // Stable sort keeps lower indices first on ties.
        order.sort_by(|a, b| b.1.total_cmp(&a.1));
        for &(c, _) in order.iter().take(cfg.top_k) {
            stats.candidates += 1;
            let mut best: Option<usize> = None;
            let mut best_delta = 0.0;
            for i in 0..n {
                if i == c {
                    continue;
                }
                let before = local_cost(net, cfg, layer, c, i);
                net.swap_x(layer, c, i);
                let after = local_cost(net, cfg, layer, c, i);
                net.swap_x(layer, c, i);
                let delta = after - before;
                let tol = 1e-12 * (1.0 + before.abs());
                if delta < best_delta - tol {
                    best_delta = delta;
                    best = Some(i);
                }
            }
            if let Some(i) = best {
                net.swap_x(layer, c, i);
                stats.swaps += 1;
            }
        }
    }
    stats
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlp::{Activation, InitScheme};

    fn zeros(sizes: &[usize]) -> SpatialMlp {
        SpatialMlp::new(sizes, Activation::Tanh, InitScheme::Zeros, 0).unwrap()
    }

    #[test]
    fn distances() {
        let mut net = zeros(&[2, 2]);
        let a = NeuronId::new(0, 0);
        assert_eq!(neuron_distance(&net, a, NeuronId::new(1, 0)).unwrap(), 1.0);
        let mut parts = net.to_parts();
        parts.xs = [[0.0, 0.3].to_vec(), [1.0, 0.7].to_vec()].to_vec();
        net = SpatialMlp::from_parts(parts).unwrap();
        assert!((neuron_distance(&net, a, NeuronId::new(1, 0)).unwrap() - core::f64::consts::SQRT_2).abs() < 1e-15);
        // sqrt(0.16 + 1) = 1.0770329614269007...
        let d = neuron_distance(&net, NeuronId::new(0, 1), NeuronId::new(1, 1)).unwrap();
        assert!((d - 1.077_032_961_426_900_7).abs() < 1e-15);
        assert!(matches!(neuron_distance(&net, a, NeuronId::new(0, 1)), Err(Error::NotAdjacent { .. })));
        assert!(matches!(neuron_distance(&net, a, NeuronId::new(1, 5)), Err(Error::UnknownNeuron(_))));
    }

    #[test]
    fn cost_values() {
        let mut net = zeros(&[1, 1]);
        let cfg = RegConfig::with_lambda(0.1);
        assert_eq!(connection_cost(&net, &cfg).unwrap(), 0.0);
        net.set_weight(0, 0, 0, 2.0);
        // 0.1 * ln(0.05 * 2 + 1) = 0.009531017980432486
        let c = connection_cost(&net, &cfg).unwrap();
        assert!((c - 0.009_531_017_980_432_486).abs() < 1e-15);

        let l1 = RegConfig { penalty: Penalty::L1, ..cfg };
        let base = connection_cost(&net, &l1).unwrap();
        net.set_weight(0, 0, 0, 4.0);
        assert!((connection_cost(&net, &l1).unwrap() - 2.0 * base).abs() < 1e-15);
        assert!(connection_cost(&net, &cfg).unwrap() < 2.0 * c);

        let flat = RegConfig { distance_weighted: false, ..cfg };
        assert!((connection_cost(&net, &flat).unwrap() - 0.1 * libm::log(5.0)).abs() < 1e-15);
    }

    #[test]
    fn cost_domain_guard() {
        let mut net = zeros(&[1, 1]);
        net.set_weight(0, 0, 0, 100.0);
        let cfg = RegConfig { d_s: 1.5, ..RegConfig::with_lambda(1.0) };
        assert!(matches!(connection_cost(&net, &cfg), Err(Error::CostDomain(_))));
    }

    #[test]
    fn log_gradient_at_one_is_half() {
        // d/dw ln(|w| + 1) at w = 1 with unit scale.
        let mut net = zeros(&[1, 1]);
        net.set_weight(0, 0, 0, 1.0);
        let cfg = RegConfig { distance_weighted: false, ..RegConfig::with_lambda(1.0) };
        let mut g = Gradients::zeros(&net);
        add_cost_gradient(&net, &cfg, 1.0, &mut g);
        assert_eq!(g.weights[0][0], 0.5);
    }

    #[test]
    fn schedule() {
        let cfg = RegConfig::with_lambda(0.1);
        assert_eq!(schedule_lambda(10, 100, &cfg), 0.0);
        assert!((schedule_lambda(25, 100, &cfg) - 0.05).abs() < 1e-15);
        assert_eq!(schedule_lambda(30, 100, &cfg), 0.1);
        assert_eq!(schedule_lambda(50, 100, &cfg), 0.1);
        assert_eq!(schedule_lambda(0, 100, &cfg), 0.0);
    }

    #[test]
    fn degrees() {
        let mut net = zeros(&[2, 1, 1]);
        assert_eq!(weighted_degree(&net, NeuronId::new(1, 0)), 0.0);
        net.set_weight(0, 0, 0, 0.5);
        net.set_weight(0, 1, 0, -0.5);
        net.set_weight(1, 0, 0, 1.0);
        assert_eq!(weighted_degree(&net, NeuronId::new(1, 0)), 2.0);
        assert_eq!(weighted_degree(&net, NeuronId::new(0, 1)), 0.5);
        assert_eq!(weighted_degree(&net, NeuronId::new(2, 0)), 1.0);
    }

    #[test]
    fn relocation_with_zero_k_is_identity() {
        let mut net = SpatialMlp::new(&[3, 4, 2], Activation::Tanh, InitScheme::actor(), 3).unwrap();
        let before = net.clone();
        let cfg = RegConfig { top_k: 0, ..RegConfig::with_lambda(0.1) };
        assert_eq!(relocate_neurons(&mut net, &cfg).swaps, 0);
        assert_eq!(net, before);
    }

    #[test]
    fn symmetric_net_is_left_alone() {
        let mut net = zeros(&[2, 2]);
        net.set_weight(0, 0, 0, 1.0);
        net.set_weight(0, 1, 1, 1.0);
        let before = net.clone();
        relocate_neurons(&mut net, &RegConfig::with_lambda(0.1));
        assert_eq!(net, before);
    }
}
