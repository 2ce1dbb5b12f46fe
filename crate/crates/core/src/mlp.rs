//! Feed-forward networks embedded in the plane.
//!
//! Neuron `i` of layer `l` sits at `(x, l)`. The x-coordinates start on the
//! uniform grid `i / n_l` and are only ever permuted within a layer, so they
//! affect the connection cost but never the forward pass.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NeuronId {
    pub layer: usize,
    pub index: usize,
}

impl NeuronId {
    pub const fn new(layer: usize, index: usize) -> Self {
        Self { layer, index }
    }
}

impl fmt::Display for NeuronId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.layer, self.index)
    }
}

impl core::str::FromStr for NeuronId {
    type Err = ();

    fn from_str(s: &str) -> core::result::Result<Self, ()> {
        let (l, i) = s.split_once(':').ok_or(())?;
        Ok(Self { layer: l.trim().parse().map_err(|_| ())?, index: i.trim().parse().map_err(|_| ())? })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    Tanh,
    Relu,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "tanh" => Some(Activation::Tanh),
            "relu" => Some(Activation::Relu),
            _ => None,
        }
    }

    #[inline]
    fn apply(self, v: f64) -> f64 {
        match self {
            Activation::Tanh => libm::tanh(v),
            Activation::Relu => v.max(0.0),
        }
    }

    /// Derivative expressed through the pre- and post-activation values.
    #[inline]
    fn derivative(self, pre: f64, post: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - post * post,
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitScheme {
    /// Orthogonal weights scaled by `hidden_gain`, with the last layer
    /// scaled by `output_gain`. Biases start at zero.
    Orthogonal {
        hidden_gain: f64,
        output_gain: f64,
    },
    Zeros,
}

impl InitScheme {
    pub fn actor() -> Self {
        InitScheme::Orthogonal { hidden_gain: core::f64::consts::SQRT_2, output_gain: 0.01 }
    }

    pub fn critic() -> Self {
        InitScheme::Orthogonal { hidden_gain: core::f64::consts::SQRT_2, output_gain: 1.0 }
    }
}

/// Every field of a network, for persistence and reconstruction.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParts {
    pub sizes: Vec<usize>,
    pub activation: Activation,
    /// Row-major `n_l x n_{l+1}` matrix per weight layer.
    pub weights: Vec<Vec<f64>>,
    /// Biases of neuron layer `l + 1`, per weight layer `l`.
    pub biases: Vec<Vec<f64>>,
    pub xs: Vec<Vec<f64>>,
    /// `true` where a weight is live.
    pub weight_mask: Vec<Vec<bool>>,
    /// `true` where a neuron is live.
    pub neuron_mask: Vec<Vec<bool>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpatialMlp {
    sizes: Vec<usize>,
    activation: Activation,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
    xs: Vec<Vec<f64>>,
    weight_mask: Vec<Vec<bool>>,
    neuron_mask: Vec<Vec<bool>>,
}

fn orthogonal<R: Rng + ?Sized>(rows: usize, cols: usize, gain: f64, rng: &mut R) -> Vec<f64> {
    // Orthonormalise the columns of a tall Gaussian matrix; transpose when wide.
    let (tall, short) = if rows >= cols { (rows, cols) } else { (cols, rows) };
    let mut q: Vec<Vec<f64>> = (0..short).map(|_| (0..tall).map(|_| rng.sample(StandardNormal)).collect()).collect();
    for c in 0..short {
        for p in 0..c {
            let dot: f64 = (0..tall).map(|r| q[c][r] * q[p][r]).sum();
            for r in 0..tall {
                let v = q[p][r];
                q[c][r] -= dot * v;
            }
        }
        let norm = libm::sqrt(q[c].iter().map(|v| v * v).sum::<f64>());
        for v in &mut q[c] {
            *v /= norm;
        }
    }
    let mut out = vec![0.0; rows * cols];
    for i in 0..rows {
        for j in 0..cols {
            out[i * cols + j] = gain * if rows >= cols { q[j][i] } else { q[i][j] };
        }
    }
    out
}

impl SpatialMlp {
    pub fn new(sizes: &[usize], activation: Activation, scheme: InitScheme, seed: u64) -> Result<Self> {
        if sizes.len() < 2 {
            return Err(Error::TooFewLayers(sizes.len()));
        }
        if let Some(l) = sizes.iter().position(|&n| n == 0) {
            return Err(Error::EmptyLayer(l));
        }
        let mut rng = crate::rng::stream(seed, 0x696e_6974);
        let last = sizes.len() - 2;
        let weights = (0..=last)
            .map(|l| {
                let (r, c) = (sizes[l], sizes[l + 1]);
                match scheme {
                    InitScheme::Orthogonal { hidden_gain, output_gain } => {
                        let gain = if l == last { output_gain } else { hidden_gain };
                        orthogonal(r, c, gain, &mut rng)
                    }
                    InitScheme::Zeros => vec![0.0; r * c],
                }
            })
            .collect();
        Ok(Self {
            sizes: sizes.to_vec(),
            activation,
            weights,
            biases: sizes[1..].iter().map(|&n| vec![0.0; n]).collect(),
            xs: sizes.iter().map(|&n| (0..n).map(|i| i as f64 / n as f64).collect()).collect(),
            weight_mask: (0..=last).map(|l| vec![true; sizes[l] * sizes[l + 1]]).collect(),
            neuron_mask: sizes.iter().map(|&n| vec![true; n]).collect(),
        })
    }

    /// Rebuilds a network, checking every shape and the zero-on-mask rule.
    pub fn from_parts(parts: MlpParts) -> Result<Self> {
        let MlpParts { sizes, activation, weights, biases, xs, weight_mask, neuron_mask } = parts;
        if sizes.len() < 2 {
            return Err(Error::TooFewLayers(sizes.len()));
        }
        if let Some(l) = sizes.iter().position(|&n| n == 0) {
            return Err(Error::EmptyLayer(l));
        }
        let check = |expected: usize, got: usize| {
            if expected == got {
                Ok(())
            } else {
                Err(Error::DimensionMismatch { expected, got })
            }
        };
        let wl = sizes.len() - 1;
        check(wl, weights.len())?;
        check(wl, biases.len())?;
        check(wl, weight_mask.len())?;
        check(sizes.len(), xs.len())?;
        check(sizes.len(), neuron_mask.len())?;
        for l in 0..wl {
            check(sizes[l] * sizes[l + 1], weights[l].len())?;
            check(sizes[l] * sizes[l + 1], weight_mask[l].len())?;
            check(sizes[l + 1], biases[l].len())?;
        }
        for (l, &n) in sizes.iter().enumerate() {
            check(n, xs[l].len())?;
            check(n, neuron_mask[l].len())?;
        }
        let mut net = Self { sizes, activation, weights, biases, xs, weight_mask, neuron_mask };
        net.enforce_masks();
        Ok(net)
    }

    pub fn into_parts(self) -> MlpParts {
        MlpParts {
            sizes: self.sizes,
            activation: self.activation,
            weights: self.weights,
            biases: self.biases,
            xs: self.xs,
            weight_mask: self.weight_mask,
            neuron_mask: self.neuron_mask,
        }
    }

    pub fn to_parts(&self) -> MlpParts {
        self.clone().into_parts()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    /// Number of weight layers.
    pub fn depth(&self) -> usize {
        self.sizes.len() - 1
    }

    pub fn input_len(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_len(&self) -> usize {
        self.sizes[self.sizes.len() - 1]
    }

    pub fn neuron_count(&self) -> usize {
        self.sizes.iter().sum()
    }

    pub fn neurons(&self) -> impl Iterator<Item = NeuronId> + '_ {
        self.sizes.iter().enumerate().flat_map(|(l, &n)| (0..n).map(move |i| NeuronId::new(l, i)))
    }

    /// Column offset of each layer in a flattened per-neuron vector.
    pub fn layer_offsets(&self) -> Vec<usize> {
        let mut acc = 0;
        self.sizes
            .iter()
            .map(|&n| {
                let o = acc;
                acc += n;
                o
            })
            .collect()
    }

    pub fn contains(&self, id: NeuronId) -> bool {
        id.layer < self.sizes.len() && id.index < self.sizes[id.layer]
    }

    /// Row-major weights of weight layer `l` (`n_l x n_{l+1}`).
    pub fn weights(&self, l: usize) -> &[f64] {
        &self.weights[l]
    }

    pub fn weight(&self, l: usize, i: usize, j: usize) -> f64 {
        self.weights[l][i * self.sizes[l + 1] + j]
    }

    /// Sets a weight; writes to masked weights are dropped.
    pub fn set_weight(&mut self, l: usize, i: usize, j: usize, value: f64) {
        let k = i * self.sizes[l + 1] + j;
        if self.weight_mask[l][k] {
            self.weights[l][k] = value;
        }
    }

    pub fn is_weight_live(&self, l: usize, i: usize, j: usize) -> bool {
        self.weight_mask[l][i * self.sizes[l + 1] + j]
    }

    pub fn weight_mask(&self, l: usize) -> &[bool] {
        &self.weight_mask[l]
    }

    /// Biases of neuron layer `layer` (must be >= 1).
    pub fn biases(&self, layer: usize) -> &[f64] {
        &self.biases[layer - 1]
    }

    pub fn set_bias(&mut self, id: NeuronId, value: f64) {
        if id.layer > 0 && self.neuron_mask[id.layer][id.index] {
            self.biases[id.layer - 1][id.index] = value;
        }
    }

    pub fn is_neuron_live(&self, id: NeuronId) -> bool {
        self.neuron_mask[id.layer][id.index]
    }

    pub fn xs(&self, layer: usize) -> &[f64] {
        &self.xs[layer]
    }

    pub fn x(&self, id: NeuronId) -> f64 {
        self.xs[id.layer][id.index]
    }

    pub fn swap_x(&mut self, layer: usize, a: usize, b: usize) {
        self.xs[layer].swap(a, b);
    }

    pub(crate) fn params_mut(&mut self) -> (&mut [Vec<f64>], &mut [Vec<f64>]) {
        (&mut self.weights, &mut self.biases)
    }

    pub fn mask_weight(&mut self, l: usize, i: usize, j: usize) {
        let k = i * self.sizes[l + 1] + j;
        self.weight_mask[l][k] = false;
        self.weights[l][k] = 0.0;
    }

    /// Removes a neuron together with every incident weight and its bias.
    pub fn mask_neuron(&mut self, id: NeuronId) {
        self.neuron_mask[id.layer][id.index] = false;
        self.enforce_masks();
    }

    pub(crate) fn enforce_masks(&mut self) {
        for l in 0..self.depth() {
            let (rows, cols) = (self.sizes[l], self.sizes[l + 1]);
            for i in 0..rows {
                for j in 0..cols {
                    let k = i * cols + j;
                    if !self.neuron_mask[l][i] || !self.neuron_mask[l + 1][j] {
                        self.weight_mask[l][k] = false;
                    }
                    if !self.weight_mask[l][k] {
                        self.weights[l][k] = 0.0;
                    }
                }
            }
            for j in 0..cols {
                if !self.neuron_mask[l + 1][j] {
                    self.biases[l][j] = 0.0;
                }
            }
        }
    }

    pub fn weight_count(&self) -> usize {
        self.weights.iter().map(Vec::len).sum()
    }

    pub fn live_weight_count(&self) -> usize {
        self.weight_mask.iter().map(|m| m.iter().filter(|&&b| b).count()).sum()
    }

    /// Live weights plus the biases of live non-input neurons.
    pub fn live_param_count(&self) -> usize {
        let biases: usize = self.neuron_mask[1..].iter().map(|m| m.iter().filter(|&&b| b).count()).sum();
        self.live_weight_count() + biases
    }

    /// Fraction of weights that are masked.
    pub fn sparsity(&self) -> f64 {
        1.0 - self.live_weight_count() as f64 / self.weight_count() as f64
    }

    pub fn forward(&self, obs: &[f64]) -> Result<Vec<f64>> {
        let mut cache = ForwardCache::new(self);
        self.forward_cached(obs, &mut cache)?;
        Ok(cache.logits().to_vec())
    }

    /// Forward pass that also returns every neuron's activation in
    /// [`ActivationTrace`] column order: inputs, post-nonlinearity hidden
    /// values, then output logits.
    pub fn forward_record(&self, obs: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut cache = ForwardCache::new(self);
        self.forward_cached(obs, &mut cache)?;
        let acts: Vec<f64> = cache.post.iter().flatten().copied().collect();
        Ok((cache.logits().to_vec(), acts))
    }

    pub fn forward_cached(&self, obs: &[f64], cache: &mut ForwardCache) -> Result<()> {
        if obs.len() != self.sizes[0] {
            return Err(Error::DimensionMismatch { expected: self.sizes[0], got: obs.len() });
        }
        cache.post[0].copy_from_slice(obs);
        let depth = self.depth();
        for l in 0..depth {
            let cols = self.sizes[l + 1];
            let (lower, upper) = cache.post.split_at_mut(l + 1);
            let input = &lower[l];
            let pre = &mut cache.pre[l];
            pre.copy_from_slice(&self.biases[l]);
            let w = &self.weights[l];
            for (i, &a) in input.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let row = &w[i * cols..(i + 1) * cols];
                for (p, &wij) in pre.iter_mut().zip(row) {
                    *p += a * wij;
                }
            }
            let out = &mut upper[0];
            if l + 1 == depth {
                out.copy_from_slice(pre);
            } else {
                for (o, &p) in out.iter_mut().zip(pre.iter()) {
                    *o = self.activation.apply(p);
                }
            }
        }
        Ok(())
    }

    /// Accumulates parameter gradients for one sample given `dL/dlogits`.
    pub fn backward(&self, cache: &ForwardCache, dlogits: &[f64], grads: &mut Gradients) {
        let depth = self.depth();
        let mut delta: Vec<f64> = dlogits.to_vec();
        let mut next: Vec<f64> = Vec::new();
        for l in (0..depth).rev() {
            let cols = self.sizes[l + 1];
            let input = &cache.post[l];
            let gw = &mut grads.weights[l];
            for (i, &a) in input.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let row = &mut gw[i * cols..(i + 1) * cols];
                for (g, &d) in row.iter_mut().zip(&delta) {
                    *g += a * d;
                }
            }
            for (g, &d) in grads.biases[l].iter_mut().zip(&delta) {
                *g += d;
            }
            if l == 0 {
                break;
            }
            let w = &self.weights[l];
            next.clear();
            next.extend((0..self.sizes[l]).map(|i| {
                let row = &w[i * cols..(i + 1) * cols];
                let s: f64 = row.iter().zip(&delta).map(|(a, b)| a * b).sum();
                s * self.activation.derivative(cache.pre[l - 1][i], cache.post[l][i])
            }));
            core::mem::swap(&mut delta, &mut next);
        }
    }
}

/// Scratch space for a forward pass, reused by [`SpatialMlp::backward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Pre-activations of layers `1..=L`.
    pre: Vec<Vec<f64>>,
    /// Activations of layers `0..=L` (inputs, hidden outputs, logits).
    post: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn new(net: &SpatialMlp) -> Self {
        Self {
            pre: net.sizes[1..].iter().map(|&n| vec![0.0; n]).collect(),
            post: net.sizes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn logits(&self) -> &[f64] {
        &self.post[self.post.len() - 1]
    }

    pub fn activations(&self, layer: usize) -> &[f64] {
        &self.post[layer]
    }
}

/// Parameter-shaped gradient buffers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros(net: &SpatialMlp) -> Self {
        Self {
            weights: net.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            biases: net.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    pub fn clear(&mut self) {
        self.weights.iter_mut().chain(self.biases.iter_mut()).for_each(|v| v.fill(0.0));
    }

    pub fn scale(&mut self, k: f64) {
        self.weights.iter_mut().chain(self.biases.iter_mut()).flatten().for_each(|v| *v *= k);
    }

    pub fn norm_sq(&self) -> f64 {
        self.weights.iter().chain(self.biases.iter()).flatten().map(|v| v * v).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().chain(self.biases.iter()).flatten().all(|v| v.is_finite())
    }

    /// Zeroes the gradient of every masked weight and of masked neurons' biases.
    pub fn apply_mask(&mut self, net: &SpatialMlp) {
        for (g, m) in self.weights.iter_mut().zip(&net.weight_mask) {
            for (v, &live) in g.iter_mut().zip(m) {
                if !live {
                    *v = 0.0;
                }
            }
        }
        for (g, m) in self.biases.iter_mut().zip(&net.neuron_mask[1..]) {
            for (v, &live) in g.iter_mut().zip(m) {
                if !live {
                    *v = 0.0;
                }
            }
        }
    }

    /// Flat view over all entries, weights first.
    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.weights.iter().chain(self.biases.iter()).flatten()
    }
}

/// Provenance of an activation trace.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TraceSource {
    pub env: String,
    pub policy_id: String,
    pub seed: u64,
    pub episodes: usize,
}

/// Per-step activations of every neuron, one row per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationTrace {
    pub sizes: Vec<usize>,
    /// Row-major `rows x cols` values.
    pub data: Vec<f64>,
    pub source: TraceSource,
}

impl ActivationTrace {
    pub fn new(sizes: Vec<usize>, source: TraceSource) -> Self {
        Self { sizes, data: Vec::new(), source }
    }

    pub fn cols(&self) -> usize {
        self.sizes.iter().sum()
    }

    pub fn rows(&self) -> usize {
        self.data.len() / self.cols()
    }

    pub fn push_row(&mut self, row: &[f64]) {
        assert_eq!(row.len(), self.cols());
        self.data.extend_from_slice(row);
    }

    pub fn row(&self, t: usize) -> &[f64] {
        let c = self.cols();
        &self.data[t * c..(t + 1) * c]
    }

    /// Neuron identifier of each column.
    pub fn column_ids(&self) -> Vec<NeuronId> {
        self.sizes.iter().enumerate().flat_map(|(l, &n)| (0..n).map(move |i| NeuronId::new(l, i))).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_net(sizes: &[usize], seed: u64) -> SpatialMlp {
        let mut net = SpatialMlp::new(sizes, Activation::Tanh, InitScheme::actor(), seed).unwrap();
        // Non-trivial biases so every path is exercised.
        let mut rng = crate::rng::stream(seed, 77);
        for b in net.biases.iter_mut().flatten() {
            *b = rng.gen_range(-0.5..0.5);
        }
        for w in net.weights.iter_mut().flatten() {
            *w += rng.gen_range(-0.3..0.3);
        }
        net
    }

    #[test]
    fn construction_shapes_and_coordinates() {
        let net = SpatialMlp::new(&[8, 32, 32, 4], Activation::Tanh, InitScheme::actor(), 1).unwrap();
        assert_eq!(net.depth(), 3);
        assert_eq!(net.weights(0).len(), 8 * 32);
        assert_eq!(net.weights(2).len(), 32 * 4);
        assert_eq!(net.xs(0), &[0.0, 0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875]);
        assert_eq!(net.xs(3), &[0.0, 0.25, 0.5, 0.75]);
        assert_eq!(net.xs(1)[5], 5.0 / 32.0);
        assert!(net.biases.iter().flatten().all(|&b| b == 0.0));
        assert_eq!(net, SpatialMlp::new(&[8, 32, 32, 4], Activation::Tanh, InitScheme::actor(), 1).unwrap());
        assert_ne!(net, SpatialMlp::new(&[8, 32, 32, 4], Activation::Tanh, InitScheme::actor(), 2).unwrap());
    }

    #[test]
    fn zero_layer_is_rejected() {
        assert_eq!(SpatialMlp::new(&[8, 0, 4], Activation::Tanh, InitScheme::Zeros, 0), Err(Error::EmptyLayer(1)));
        assert_eq!(SpatialMlp::new(&[8], Activation::Tanh, InitScheme::Zeros, 0), Err(Error::TooFewLayers(1)));
    }

    #[test]
    fn orthogonal_init_has_orthogonal_columns_and_gain() {
        let net = SpatialMlp::new(&[8, 32, 32, 4], Activation::Tanh, InitScheme::actor(), 5).unwrap();
        // 32x32 hidden matrix: W^T W = 2 I.
        let w = net.weights(1);
        for a in 0..32 {
            for b in 0..32 {
                let dot: f64 = (0..32).map(|r| w[r * 32 + a] * w[r * 32 + b]).sum();
                let want = if a == b { 2.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-9);
            }
        }
        // 8x32 input matrix: rows orthogonal.
        let w = net.weights(0);
        for a in 0..8 {
            for b in 0..8 {
                let dot: f64 = (0..32).map(|c| w[a * 32 + c] * w[b * 32 + c]).sum();
                let want = if a == b { 2.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-9);
            }
        }
        let out_norm: f64 = net.weights(2).iter().map(|v| v * v).sum();
        assert!((out_norm - 4.0 * 1e-4).abs() < 1e-12);
    }

    #[test]
    fn zero_network_gives_zero_logits() {
        let net = SpatialMlp::new(&[3, 5, 2], Activation::Tanh, InitScheme::Zeros, 0).unwrap();
        assert_eq!(net.forward(&[1.0, -2.0, 0.5]).unwrap(), [0.0, 0.0]);
    }

    #[test]
    fn identity_like_tanh_net() {
        let mut net = SpatialMlp::new(&[1, 1, 1], Activation::Tanh, InitScheme::Zeros, 0).unwrap();
        net.set_weight(0, 0, 0, 1.0);
        net.set_weight(1, 0, 0, 1.0);
        assert_eq!(net.forward(&[0.0]).unwrap(), [0.0]);
        let y = net.forward(&[0.3]).unwrap()[0];
        assert_eq!(y, libm::tanh(0.3));
    }

    #[test]
    fn forward_is_pure_and_checks_dims() {
        let net = random_net(&[4, 6, 5, 3], 9);
        let x = [0.1, -0.4, 0.9, 0.0];
        let a = net.forward(&x).unwrap();
        let b = net.forward(&x).unwrap();
        assert_eq!(
            a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            b.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
        assert_eq!(net.forward(&[1.0]), Err(Error::DimensionMismatch { expected: 4, got: 1 }));
    }

    #[test]
    fn recorded_activations_follow_column_order() {
        let net = random_net(&[2, 3, 2], 4);
        let (logits, acts) = net.forward_record(&[0.5, -0.5]).unwrap();
        assert_eq!(acts.len(), 7);
        assert_eq!(&acts[..2], &[0.5, -0.5]);
        assert_eq!(&acts[5..], logits.as_slice());
        assert!(acts[2..5].iter().all(|v| v.abs() < 1.0));
    }

    #[test]
    fn masking_zeroes_and_ignores_writes() {
        let mut net = random_net(&[3, 4, 2], 2);
        net.mask_weight(0, 1, 2);
        assert_eq!(net.weight(0, 1, 2), 0.0);
        let before = net.forward(&[0.3, 0.2, 0.1]).unwrap();
        net.set_weight(0, 1, 2, 5.0);
        assert_eq!(net.weight(0, 1, 2), 0.0);
        assert_eq!(net.forward(&[0.3, 0.2, 0.1]).unwrap(), before);

        let once = {
            let mut n = net.clone();
            n.mask_neuron(NeuronId::new(1, 3));
            n
        };
        let mut twice = once.clone();
        twice.mask_neuron(NeuronId::new(1, 3));
        assert_eq!(once, twice);
        assert_eq!(once.biases(1)[3], 0.0);
        assert!((0..3).all(|i| once.weight(0, i, 3) == 0.0 && !once.is_weight_live(0, i, 3)));
        assert!((0..2).all(|j| once.weight(1, 3, j) == 0.0));
    }

    #[test]
    fn coordinates_do_not_affect_forward() {
        let mut net = random_net(&[3, 5, 2], 12);
        let x = [0.2, -0.7, 0.4];
        let before = net.forward(&x).unwrap();
        net.swap_x(1, 0, 4);
        net.swap_x(0, 1, 2);
        assert_eq!(net.forward(&x).unwrap(), before);
    }

    #[test]
    fn masked_gradients_are_zero() {
        let mut net = random_net(&[3, 4, 2], 3);
        net.mask_weight(1, 2, 1);
        net.mask_neuron(NeuronId::new(1, 0));
        let mut cache = ForwardCache::new(&net);
        net.forward_cached(&[0.5, 0.5, -0.5], &mut cache).unwrap();
        let mut g = Gradients::zeros(&net);
        net.backward(&cache, &[1.0, -1.0], &mut g);
        g.apply_mask(&net);
        assert_eq!(g.weights[1][2 * 2 + 1], 0.0);
        assert_eq!(g.biases[0][0], 0.0);
        assert!((0..3).all(|i| g.weights[0][i * 4] == 0.0));
    }

    // Finite-difference oracle for the scalar loss sum_k c_k * logit_k.
    #[test]
    fn backward_matches_central_differences() {
        for seed in 0..10 {
            let net = random_net(&[3, 5, 4, 2], seed);
            let x = [0.3, -0.8, 0.6];
            let c = [0.7, -1.3];
            let loss = |n: &SpatialMlp| -> f64 { n.forward(&x).unwrap().iter().zip(c).map(|(a, b)| a * b).sum() };
            let mut cache = ForwardCache::new(&net);
            net.forward_cached(&x, &mut cache).unwrap();
            let mut g = Gradients::zeros(&net);
            net.backward(&cache, &c, &mut g);
            let h = 1e-5;
            for l in 0..net.depth() {
                for k in 0..net.weights[l].len() {
                    let mut p = net.clone();
                    p.weights[l][k] += h;
                    let mut m = net.clone();
                    m.weights[l][k] -= h;
                    let fd = (loss(&p) - loss(&m)) / (2.0 * h);
                    let an = g.weights[l][k];
                    assert!((fd - an).abs() <= 1e-4 * an.abs().max(1e-3), "w{l}[{k}] {an} vs {fd}");
                }
                for k in 0..net.biases[l].len() {
                    let mut p = net.clone();
                    p.biases[l][k] += h;
                    let mut m = net.clone();
                    m.biases[l][k] -= h;
                    let fd = (loss(&p) - loss(&m)) / (2.0 * h);
                    let an = g.biases[l][k];
                    assert!((fd - an).abs() <= 1e-4 * an.abs().max(1e-3), "b{l}[{k}] {an} vs {fd}");
                }
            }
        }
    }

    #[test]
    fn parts_round_trip_and_validation() {
        let net = random_net(&[3, 4, 2], 6);
        assert_eq!(SpatialMlp::from_parts(net.to_parts()).unwrap(), net);
        let mut parts = net.to_parts();
        parts.weights[0].pop();
        assert!(matches!(SpatialMlp::from_parts(parts), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn neuron_id_text_form() {
        let id = NeuronId::new(2, 17);
        assert_eq!(alloc::format!("{id}"), "2:17");
        assert_eq!("2:17".parse::<NeuronId>(), Ok(id));
        assert!("2-17".parse::<NeuronId>().is_err());
    }
}
