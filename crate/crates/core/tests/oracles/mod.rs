//! Independent reference computations shared by the integration tests and
//! the acceptance suite.
#![allow(dead_code)]

use modnet_core::mlp::Gradients;
use modnet_core::mlp::{Activation, InitScheme, NeuronId, SpatialMlp};
use modnet_core::modules::{Partition, WeightedGraph};
use modnet_core::ppo::policy::log_softmax;
use modnet_core::ppo::{minibatch_loss, LossCoefs, Minibatch};
use modnet_core::regularizer::{add_cost_gradient, connection_cost_with, relocate_neurons, Penalty, RegConfig};
use modnet_core::rng;
use rand::Rng;

/// ARI from explicit pair counting over all `n choose 2` pairs.
pub fn ari_pairs(a: &[usize], b: &[usize]) -> f64 {
    let (mut ss, mut sd, mut ds, mut dd) = (0f64, 0f64, 0f64, 0f64);
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            match (a[i] == a[j], b[i] == b[j]) {
                (true, true) => ss += 1.0,
                (true, false) => sd += 1.0,
                (false, true) => ds += 1.0,
                (false, false) => dd += 1.0,
            }
        }
    }
    let den = (ss + sd) * (sd + dd) + (ss + ds) * (ds + dd);
    if den == 0.0 {
        1.0
    } else {
        2.0 * (ss * dd - sd * ds) / den
    }
}

/// Modularity straight from its definition, summing over all ordered pairs.
pub fn modularity(adj: &[f64], n: usize, labels: &[usize]) -> f64 {
    let k: Vec<f64> = (0..n).map(|i| (0..n).map(|j| adj[i * n + j]).sum()).collect();
    let two_m: f64 = k.iter().sum();
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if labels[i] == labels[j] {
                q += adj[i * n + j] - k[i] * k[j] / two_m;
            }
        }
    }
    q / two_m
}

/// Best modularity over every set partition of `n` nodes, enumerated as
/// restricted growth strings.
pub fn exhaustive_best_q(adj: &[f64], n: usize) -> (f64, Vec<usize>) {
    let mut labels = vec![0usize; n];
    let mut best = (f64::NEG_INFINITY, labels.clone());
    fn rec(pos: usize, max: usize, labels: &mut Vec<usize>, adj: &[f64], best: &mut (f64, Vec<usize>)) {
        let n = labels.len();
        if pos == n {
            let q = modularity(adj, n, labels);
            if q > best.0 {
                *best = (q, labels.clone());
            }
            return;
        }
        for l in 0..=max + 1 {
            labels[pos] = l;
            rec(pos + 1, max.max(l), labels, adj, best);
        }
    }
    if n == 1 {
        return (modularity(adj, 1, &labels), labels);
    }
    rec(1, 0, &mut labels, adj, &mut best);
    best
}

pub fn node_ids(n: usize) -> Vec<NeuronId> {
    (0..n).map(|i| NeuronId::new(0, i)).collect()
}

/// Symmetric random graph with at least one edge.
pub fn random_graph(seed: u64, n: usize, density: f64) -> Vec<f64> {
    let mut r = rng::stream(seed, 0x6772);
    loop {
        let mut adj = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..i {
                if r.gen_bool(density) {
                    let w = r.gen_range(0.05..1.0);
                    adj[i * n + j] = w;
                    adj[j * n + i] = w;
                }
            }
        }
        if adj.iter().any(|&w| w > 0.0) {
            return adj;
        }
    }
}

pub fn graph(adj: Vec<f64>, n: usize) -> WeightedGraph {
    WeightedGraph::from_dense(node_ids(n), adj).unwrap()
}

pub fn partition(labels: &[usize]) -> Partition {
    Partition::new(node_ids(labels.len()), labels.to_vec(), Vec::new()).unwrap()
}

/// Random small network with non-zero biases and some masked weights.
pub fn random_net(seed: u64, act: Activation) -> SpatialMlp {
    let mut r = rng::stream(seed, 0x6e65);
    let depth = r.gen_range(1..=3);
    let mut sizes = vec![r.gen_range(2..=5)];
    for _ in 0..depth {
        sizes.push(r.gen_range(2..=5));
    }
    let mut net = SpatialMlp::new(&sizes, act, InitScheme::actor(), seed).unwrap();
    for l in 0..net.depth() {
        let cols = sizes[l + 1];
        for k in 0..net.weights(l).len() {
            let (i, j) = (k / cols, k % cols);
            if r.gen_bool(0.15) {
                net.mask_weight(l, i, j);
            } else {
                // Keep magnitudes away from the kink at zero.
                let v: f64 = r.gen_range(0.05..1.0) * if r.gen_bool(0.5) { 1.0 } else { -1.0 };
                net.set_weight(l, i, j, v);
            }
        }
    }
    for id in net.neurons().collect::<Vec<_>>() {
        if id.layer > 0 {
            net.set_bias(id, r.gen_range(-0.5..0.5));
        }
    }
    for layer in 0..sizes.len() {
        for _ in 0..sizes[layer] {
            let (a, b) = (r.gen_range(0..sizes[layer]), r.gen_range(0..sizes[layer]));
            net.swap_x(layer, a, b);
        }
    }
    net
}

fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-3)
}

/// Largest relative error between `grads` and central differences of `f`
/// over every live parameter of `net`. `f` sees a perturbed copy.
pub fn max_fd_error(net: &SpatialMlp, grads: &Gradients, f: &dyn Fn(&SpatialMlp) -> f64, biases: bool) -> f64 {
    let h = 1e-6;
    let mut worst = 0f64;
    for l in 0..net.depth() {
        let cols = net.sizes()[l + 1];
        for k in 0..net.weights(l).len() {
            let (i, j) = (k / cols, k % cols);
            if !net.is_weight_live(l, i, j) {
                assert_eq!(grads.weights[l][k], 0.0, "masked weight has a gradient");
                continue;
            }
            let w = net.weight(l, i, j);
            let (mut p, mut m) = (net.clone(), net.clone());
            p.set_weight(l, i, j, w + h);
            m.set_weight(l, i, j, w - h);
            worst = worst.max(rel_err(grads.weights[l][k], (f(&p) - f(&m)) / (2.0 * h)));
        }
        if biases {
            for k in 0..cols {
                let id = NeuronId::new(l + 1, k);
                let b = net.biases(l + 1)[k];
                let (mut p, mut m) = (net.clone(), net.clone());
                p.set_bias(id, b + h);
                m.set_bias(id, b - h);
                worst = worst.max(rel_err(grads.biases[l][k], (f(&p) - f(&m)) / (2.0 * h)));
            }
        }
    }
    worst
}

/// Relative error of the distance-weighted log connection cost gradient.
pub fn cost_gradient_error(seed: u64) -> f64 {
    let net = random_net(seed, Activation::Tanh);
    let cfg = RegConfig { lambda: 0.37, ..RegConfig::default() };
    let mut g = Gradients::zeros(&net);
    add_cost_gradient(&net, &cfg, cfg.lambda, &mut g);
    g.apply_mask(&net);
    max_fd_error(&net, &g, &|n| connection_cost_with(n, &cfg, cfg.lambda).unwrap(), false)
}

/// Relative error of the plain `sum ln(|w| + 1)` sparsity term gradient.
pub fn sparsity_gradient_error(seed: u64) -> f64 {
    let net = random_net(seed, Activation::Relu);
    let cfg = RegConfig { lambda: 1.3, distance_weighted: false, penalty: Penalty::Log, ..RegConfig::default() };
    let mut g = Gradients::zeros(&net);
    add_cost_gradient(&net, &cfg, cfg.lambda, &mut g);
    g.apply_mask(&net);
    max_fd_error(&net, &g, &|n| connection_cost_with(n, &cfg, cfg.lambda).unwrap(), false)
}

/// Relative error of the full minibatch loss gradient (surrogate, value,
/// entropy and connection cost) for both actor and critic. Old
/// log-probabilities sit close to the current ones so no sample is near
/// a clipping boundary.
pub fn loss_gradient_error(seed: u64) -> f64 {
    let mut r = rng::stream(seed, 0x6c6f);
    let actor = random_net(seed, Activation::Tanh);
    let mut sizes = actor.sizes().to_vec();
    *sizes.last_mut().unwrap() = 1;
    let critic = {
        let mut c = SpatialMlp::new(&sizes, Activation::Tanh, InitScheme::critic(), seed ^ 1).unwrap();
        for id in c.neurons().collect::<Vec<_>>() {
            c.set_bias(id, r.gen_range(-0.3..0.3));
        }
        c
    };
    let obs_len = actor.input_len();
    let n = r.gen_range(3..8);
    let actions = actor.output_len();
    let mut mb = Minibatch {
        obs_len,
        obs: (0..n * obs_len).map(|_| r.gen_range(-1.0..1.0)).collect(),
        actions: (0..n).map(|_| r.gen_range(0..actions)).collect(),
        old_log_probs: Vec::new(),
        advantages: (0..n).map(|_| r.gen_range(-1.5..1.5)).collect(),
        returns: (0..n).map(|_| r.gen_range(-1.0..1.0)).collect(),
    };
    let mut logp = vec![0.0; actions];
    for k in 0..n {
        let logits = actor.forward(&mb.obs[k * obs_len..(k + 1) * obs_len]).unwrap();
        log_softmax(&logits, &mut logp);
        mb.old_log_probs.push(logp[mb.actions[k]] + r.gen_range(-0.05..0.05));
    }
    let coefs = LossCoefs { clip_eps: 0.2, ent_coef: 0.05, vf_coef: 0.5 };
    let reg = RegConfig::with_lambda(0.02);
    let (mut ga, mut gc) = (Gradients::zeros(&actor), Gradients::zeros(&critic));
    minibatch_loss(&actor, &critic, &mb, &coefs, &reg, reg.lambda, Some((&mut ga, &mut gc))).unwrap();
    let total =
        |a: &SpatialMlp, c: &SpatialMlp| minibatch_loss(a, c, &mb, &coefs, &reg, reg.lambda, None).unwrap().total;
    let ea = max_fd_error(&actor, &ga, &|a| total(a, &critic), true);
    let ec = max_fd_error(&critic, &gc, &|c| total(&actor, c), true);
    ea.max(ec)
}

/// Unscaled connection cost before and after one relocation pass on a
/// random network.
pub fn relocation_trial(seed: u64) -> (f64, f64) {
    let mut net = random_net(seed, Activation::Tanh);
    let cfg = RegConfig { top_k: 1 + (seed as usize % 4), ..RegConfig::default() };
    let before = connection_cost_with(&net, &cfg, 1.0).unwrap();
    relocate_neurons(&mut net, &cfg);
    (before, connection_cost_with(&net, &cfg, 1.0).unwrap())
}

/// 2-2-1 network whose first layer is wired crosswise.
pub fn crossed_net() -> SpatialMlp {
    let mut net = SpatialMlp::new(&[2, 2, 1], Activation::Tanh, InitScheme::Zeros, 0).unwrap();
    net.set_weight(0, 0, 1, 1.0);
    net.set_weight(0, 1, 0, 1.0);
    net.set_weight(1, 0, 0, 0.5);
    net.set_weight(1, 1, 0, 0.5);
    net
}

/// Minimum unscaled cost over every arrangement of coordinates within
/// each layer.
pub fn exhaustive_min_cost(net: &SpatialMlp, cfg: &RegConfig) -> f64 {
    fn perms(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in perms(n - 1) {
            for pos in 0..=p.len() {
                let mut q = p.clone();
                q.insert(pos, n - 1);
                out.push(q);
            }
        }
        out
    }
    fn rec(layer: usize, net: &SpatialMlp, cfg: &RegConfig, best: &mut f64) {
        if layer == net.sizes().len() {
            *best = best.min(connection_cost_with(net, cfg, 1.0).unwrap());
            return;
        }
        let xs = net.xs(layer).to_vec();
        for p in perms(xs.len()) {
            let mut m = net.clone();
            // Realise permutation `p` with swaps.
            let mut cur: Vec<usize> = (0..xs.len()).collect();
            for (i, &want) in p.iter().enumerate() {
                let at = cur.iter().position(|&c| c == want).unwrap();
                if at != i {
                    m.swap_x(layer, i, at);
                    cur.swap(i, at);
                }
            }
            rec(layer + 1, &m, cfg, best);
        }
    }
    let mut best = f64::INFINITY;
    rec(0, net, cfg, &mut best);
    best
}
