//! Categorical policy helpers over raw logits.

use rand::Rng;

/// Writes `log softmax(logits)` into `out`.
pub fn log_softmax(logits: &[f64], out: &mut [f64]) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logits.iter().map(|&z| libm::exp(z - max)).sum();
    let lse = max + libm::log(sum);
    for (o, &z) in out.iter_mut().zip(logits) {
        *o = z - lse;
    }
}

/// Entropy of the distribution with the given log-probabilities.
pub fn entropy(logp: &[f64]) -> f64 {
    -logp.iter().map(|&l| libm::exp(l) * l).sum::<f64>()
}

/// Index of the largest logit; the lowest index wins ties.
pub fn argmax(logits: &[f64]) -> usize {
    let mut best = 0;
    for (i, &z) in logits.iter().enumerate() {
        if z > logits[best] {
            best = i;
        }
    }
    best
}

/// Samples an action by inverse CDF over `exp(logp)`.
pub fn sample<R: Rng + ?Sized>(logp: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &l) in logp.iter().enumerate() {
        acc += libm::exp(l);
        if u < acc {
            return i;
        }
    }
    logp.len() - 1
}
