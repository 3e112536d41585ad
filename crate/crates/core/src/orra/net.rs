//! Fully connected ReLU network with a linear output layer.
//!
//! Parameters live in one flat vector: for each layer, the `out x in`
//! weight matrix (row-major) followed by the `out` biases.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::rng::SimRng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    sizes: Vec<usize>,
    params: Vec<f64>,
}

/// Post-activation values of every layer but the output, input included.
pub type Activations = Vec<Vec<f64>>;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 8];
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for i in 0..8 {
            acc[i] += x[i] * y[i];
        }
    }
    acc.iter().sum::<f64>() + tail
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

impl Mlp {
    /// He-initialised weights, zero biases.
    pub fn new(sizes: &[usize], rng: &mut SimRng) -> Self {
        assert!(
            sizes.len() >= 2 && sizes.iter().all(|&s| s > 0),
            "bad layer sizes {sizes:?}"
        );
        let mut params = Vec::with_capacity(Self::count(sizes));
        for w in sizes.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let std = (2.0 / fan_in as f64).sqrt();
            params.extend((0..fan_in * fan_out).map(|_| std * rng.sample::<f64, _>(StandardNormal)));
            params.extend(std::iter::repeat_n(0.0, fan_out));
        }
        Self {
            sizes: sizes.to_vec(),
            params,
        }
    }

    pub fn from_params(sizes: &[usize], params: Vec<f64>) -> Option<Self> {
        (params.len() == Self::count(sizes)).then(|| Self {
            sizes: sizes.to_vec(),
            params,
        })
    }

    fn count(sizes: &[usize]) -> usize {
        sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    fn layers(&self) -> usize {
        self.sizes.len() - 1
    }

    /// Offsets of layer `l`'s weights and biases.
    fn offsets(&self, l: usize) -> (usize, usize) {
        let w = Self::count(&self.sizes[..=l]);
        (w, w + self.sizes[l] * self.sizes[l + 1])
    }

    fn dense(&self, l: usize, x: &[f64], relu: bool) -> Vec<f64> {
        let (fan_in, fan_out) = (self.sizes[l], self.sizes[l + 1]);
        let (w, b) = self.offsets(l);
        (0..fan_out)
            .map(|o| {
                let z = self.params[b + o] + dot(&self.params[w + o * fan_in..w + (o + 1) * fan_in], x);
                if relu {
                    z.max(0.0)
                } else {
                    z
                }
            })
            .collect()
    }

    /// Input and hidden activations.
    pub fn hidden(&self, x: &[f64]) -> Activations {
        debug_assert_eq!(x.len(), self.input_dim());
        let mut acts = Vec::with_capacity(self.layers());
        acts.push(x.to_vec());
        for l in 0..self.layers() - 1 {
            let next = self.dense(l, acts.last().unwrap(), true);
            acts.push(next);
        }
        acts
    }

    /// Single output unit from precomputed activations.
    pub fn output_at(&self, acts: &Activations, index: usize) -> f64 {
        let l = self.layers() - 1;
        let fan_in = self.sizes[l];
        let (w, b) = self.offsets(l);
        self.params[b + index] + dot(&self.params[w + index * fan_in..w + (index + 1) * fan_in], &acts[l])
    }

    /// All outputs from precomputed activations.
    pub fn outputs(&self, acts: &Activations) -> Vec<f64> {
        self.dense(self.layers() - 1, &acts[self.layers() - 1], false)
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.outputs(&self.hidden(x))
    }

    /// Accumulates `d loss / d params` into `grad` given sparse output
    /// gradients `(output index, d loss / d output)`.
    pub fn backward(&self, acts: &Activations, out_grads: &[(usize, f64)], grad: &mut [f64]) {
        debug_assert_eq!(grad.len(), self.params.len());
        let last = self.layers() - 1;
        let fan_in = self.sizes[last];
        let (w, b) = self.offsets(last);
        let mut delta = vec![0.0; fan_in];
        for &(o, g) in out_grads {
            let row = w + o * fan_in;
            axpy(g, &acts[last], &mut grad[row..row + fan_in]);
            grad[b + o] += g;
            axpy(g, &self.params[row..row + fan_in], &mut delta);
        }
        for l in (0..last).rev() {
            // ReLU derivative at the layer's output
            for (d, &a) in delta.iter_mut().zip(&acts[l + 1]) {
                if a <= 0.0 {
                    *d = 0.0;
                }
            }
            let (fan_in, fan_out) = (self.sizes[l], self.sizes[l + 1]);
            let (w, b) = self.offsets(l);
            let mut prev = vec![0.0; fan_in];
            for o in 0..fan_out {
                let g = delta[o];
                if g == 0.0 {
                    continue;
                }
                let row = w + o * fan_in;
                axpy(g, &acts[l], &mut grad[row..row + fan_in]);
                grad[b + o] += g;
                if l > 0 {
                    axpy(g, &self.params[row..row + fan_in], &mut prev);
                }
            }
            delta = prev;
        }
    }
}

/// Adam with bias correction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub learn_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(n: usize, learn_rate: f64) -> Self {
        Self {
            learn_rate,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t as i32);
        let c2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            params[i] -= self.learn_rate * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + self.eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    /// Half squared error on the selected outputs.
    fn loss(net: &Mlp, x: &[f64], targets: &[(usize, f64)]) -> f64 {
        let y = net.forward(x);
        targets.iter().map(|&(o, t)| 0.5 * (y[o] - t).powi(2)).sum()
    }

    fn analytic(net: &Mlp, x: &[f64], targets: &[(usize, f64)]) -> Vec<f64> {
        let acts = net.hidden(x);
        let g: Vec<(usize, f64)> = targets.iter().map(|&(o, t)| (o, net.output_at(&acts, o) - t)).collect();
        let mut grad = vec![0.0; net.params().len()];
        net.backward(&acts, &g, &mut grad);
        grad
    }

    fn max_rel_error(net: &Mlp, x: &[f64], targets: &[(usize, f64)]) -> f64 {
        let grad = analytic(net, x, targets);
        let h = 1e-6;
        let mut worst = 0.0f64;
        for (i, &g) in grad.iter().enumerate() {
            let mut plus = net.clone();
            plus.params_mut()[i] += h;
            let mut minus = net.clone();
            minus.params_mut()[i] -= h;
            let fd = (loss(&plus, x, targets) - loss(&minus, x, targets)) / (2.0 * h);
            let denom = fd.abs().max(g.abs()).max(1e-8);
            worst = worst.max((fd - g).abs() / denom);
        }
        worst
    }

    #[test]
    fn four_parameter_gradient_check() {
        // 1 -> 1 -> 1: w1, b1, w2, b2, with the hidden unit active
        let net = Mlp::from_params(&[1, 1, 1], vec![0.8, 0.3, -1.2, 0.5]).unwrap();
        assert!(max_rel_error(&net, &[0.7], &[(0, 2.0)]) <= 1e-4);
    }

    #[test]
    fn deeper_gradient_check() {
        let net = Mlp::new(&[5, 7, 6, 4], &mut rng::stream(3, &[]));
        let x = [0.3, -0.2, 1.0, 0.0, 0.5];
        assert!(max_rel_error(&net, &x, &[(1, 0.4), (3, -1.0)]) <= 1e-4);
    }

    #[test]
    fn partial_and_full_outputs_agree() {
        let net = Mlp::new(&[4, 16, 16, 9], &mut rng::stream(8, &[]));
        let acts = net.hidden(&[1.0, 0.0, 0.0, 1.0]);
        let full = net.outputs(&acts);
        for (i, &y) in full.iter().enumerate() {
            assert!((net.output_at(&acts, i) - y).abs() < 1e-12);
        }
    }

    #[test]
    fn adam_minimises_a_quadratic() {
        let mut p = vec![3.0, -2.0];
        let mut opt = Adam::new(2, 0.05);
        for _ in 0..2000 {
            let g = vec![2.0 * p[0], 2.0 * p[1]];
            opt.step(&mut p, &g);
        }
        assert!(p.iter().all(|x| x.abs() < 1e-3), "{p:?}");
    }
}
