use libm::{pow, sqrt};

use crate::mlp::{Gradients, SpatialMlp};

/// Adam with bias correction.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: i32,
    m: Gradients,
    v: Gradients,
}

impl Adam {
    pub fn new(net: &SpatialMlp, lr: f64, eps: f64) -> Self {
        Self { lr, beta1: 0.9, beta2: 0.999, eps, t: 0, m: Gradients::zeros(net), v: Gradients::zeros(net) }
    }

    pub fn step(&mut self, net: &mut SpatialMlp, grads: &Gradients) {
        self.t += 1;
        let c1 = 1.0 - pow(self.beta1, f64::from(self.t));
        let c2 = 1.0 - pow(self.beta2, f64::from(self.t));
        let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.lr, self.eps);
        let (weights, biases) = net.params_mut();
        let params = weights.iter_mut().chain(biases.iter_mut());
        let ms = self.m.weights.iter_mut().chain(self.m.biases.iter_mut());
        let vs = self.v.weights.iter_mut().chain(self.v.biases.iter_mut());
        let gs = grads.weights.iter().chain(grads.biases.iter());
        for (((p, m), v), g) in params.zip(ms).zip(vs).zip(gs) {
            for (((p, m), v), &g) in p.iter_mut().zip(m.iter_mut()).zip(v.iter_mut()).zip(g) {
                *m = b1 * *m + (1.0 - b1) * g;
                *v = b2 * *v + (1.0 - b2) * g * g;
                *p -= lr * (*m / c1) / (sqrt(*v / c2) + eps);
            }
        }
        net.enforce_masks();
    }
}
