//! Minimal fully-connected network with manual backpropagation.
//!
//! Hidden layers use rectifier activations; the output layer is linear.
//! Gradients are computed analytically and are checked against central
//! finite differences in the test suite. The net also exposes the gradient
//! of the loss with respect to its *inputs*, which the deterministic
//! actor-critic learner needs to push critic gradients through the actor.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::RunRng;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetError {
    #[error("layer sizes must list input and output, got {0} entries")]
    TooFewLayers(usize),
    #[error("input length {got} does not match net input {expected}")]
    BadInput { expected: usize, got: usize },
    #[error("non-finite loss; inputs or targets out of range")]
    NonFiniteLoss,
    #[error("weight shape mismatch at layer {0}")]
    BadShape(usize),
}

/// One dense layer: `out = w * x + b`, weights stored row-major `[out][in]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub w: Vec<f64>,
    pub b: Vec<f64>,
    pub inputs: usize,
    pub outputs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpNet {
    sizes: Vec<usize>,
    layers: Vec<Layer>,
}

/// Per-layer parameter gradients, same shapes as the net.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub layers: Vec<Layer>,
}

impl Gradients {
    pub fn zeros(net: &MlpNet) -> Self {
        Gradients {
            layers: net
                .layers
                .iter()
                .map(|l| Layer {
                    w: vec![0.0; l.w.len()],
                    b: vec![0.0; l.b.len()],
                    inputs: l.inputs,
                    outputs: l.outputs,
                })
                .collect(),
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for l in &mut self.layers {
            for w in &mut l.w {
                *w *= factor;
            }
            for b in &mut l.b {
                *b *= factor;
            }
        }
    }
}

/// Forward-pass cache: post-activation outputs of every layer.
pub struct ForwardCache {
    input: Vec<f64>,
    // activations[k] = output of layer k after its nonlinearity
    activations: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.activations.last().expect("net has at least one layer")
    }
}

impl MlpNet {
    /// Seeded initialization, uniform in `±scale/√fan_in`.
    pub fn init(sizes: &[usize], rng: &mut RunRng, scale: f64) -> Result<Self, NetError> {
        if sizes.len() < 2 {
            return Err(NetError::TooFewLayers(sizes.len()));
        }
        let layers = sizes
            .windows(2)
            .map(|pair| {
                let (n_in, n_out) = (pair[0], pair[1]);
                let bound = scale / (n_in as f64).sqrt();
                Layer {
                    w: (0..n_in * n_out).map(|_| rng.gen_range(-bound..bound)).collect(),
                    b: vec![0.0; n_out],
                    inputs: n_in,
                    outputs: n_out,
                }
            })
            .collect();
        Ok(MlpNet {
            sizes: sizes.to_vec(),
            layers,
        })
    }

    pub fn from_layers(layers: Vec<Layer>) -> Result<Self, NetError> {
        if layers.is_empty() {
            return Err(NetError::TooFewLayers(1));
        }
        let mut sizes = vec![layers[0].inputs];
        for (k, l) in layers.iter().enumerate() {
            if l.w.len() != l.inputs * l.outputs || l.b.len() != l.outputs {
                return Err(NetError::BadShape(k));
            }
            if l.inputs != *sizes.last().unwrap() {
                return Err(NetError::BadShape(k));
            }
            sizes.push(l.outputs);
        }
        Ok(MlpNet { sizes, layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.forward_cached(x).activations.pop().unwrap()
    }

    pub fn forward_cached(&self, x: &[f64]) -> ForwardCache {
        assert_eq!(x.len(), self.input_dim(), "input dimension mismatch");
        let mut activations = Vec::with_capacity(self.layers.len());
        let mut cur = x;
        for (k, layer) in self.layers.iter().enumerate() {
            let last = k + 1 == self.layers.len();
            let mut out = vec![0.0; layer.outputs];
            for (i, o) in out.iter_mut().enumerate() {
                let row = &layer.w[i * layer.inputs..(i + 1) * layer.inputs];
                let mut acc = layer.b[i];
                for (w, xv) in row.iter().zip(cur) {
                    acc += w * xv;
                }
                *o = if last { acc } else { acc.max(0.0) };
            }
            activations.push(out);
            cur = activations.last().unwrap();
        }
        ForwardCache {
            input: x.to_vec(),
            activations,
        }
    }

    /// Backpropagates `grad_out` (dL/d output) through the cached forward
    /// pass, accumulating parameter gradients into `grads` and returning
    /// dL/d input.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        grad_out: &[f64],
        grads: &mut Gradients,
    ) -> Vec<f64> {
        let mut delta = grad_out.to_vec();
        for k in (0..self.layers.len()).rev() {
            let layer = &self.layers[k];
            let last = k + 1 == self.layers.len();
            // Rectifier gate: the cached post-activation is zero exactly
            // where the unit was inactive.
            if !last {
                for (d, a) in delta.iter_mut().zip(&cache.activations[k]) {
                    if *a <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
            let layer_in: &[f64] = if k == 0 {
                &cache.input
            } else {
                &cache.activations[k - 1]
            };
            let g = &mut grads.layers[k];
            for i in 0..layer.outputs {
                let di = delta[i];
                g.b[i] += di;
                let grow = &mut g.w[i * layer.inputs..(i + 1) * layer.inputs];
                for (gw, xv) in grow.iter_mut().zip(layer_in) {
                    *gw += di * xv;
                }
            }
            let mut prev = vec![0.0; layer.inputs];
            for i in 0..layer.outputs {
                let di = delta[i];
                let row = &layer.w[i * layer.inputs..(i + 1) * layer.inputs];
                for (p, w) in prev.iter_mut().zip(row) {
                    *p += di * w;
                }
            }
            delta = prev;
        }
        delta
    }

    /// Mean squared loss over a batch with per-output masks, plus its
    /// analytic gradients.
    ///
    /// `loss = (1/n) Σ_samples Σ_j mask_j (out_j - target_j)^2`
    pub fn backprop_mse(
        &self,
        batch: &[MseSample<'_>],
    ) -> Result<(f64, Gradients), NetError> {
        let mut grads = Gradients::zeros(self);
        let n = batch.len().max(1) as f64;
        let mut loss = 0.0;
        for sample in batch {
            let cache = self.forward_cached(sample.input);
            let out = cache.output();
            let mut grad_out = vec![0.0; out.len()];
            for j in 0..out.len() {
                let mask = sample.mask.map_or(1.0, |m| m[j]);
                if mask == 0.0 {
                    continue;
                }
                let err = out[j] - sample.target[j];
                loss += mask * err * err / n;
                grad_out[j] = 2.0 * mask * err / n;
            }
            self.backward(&cache, &grad_out, &mut grads);
        }
        if !loss.is_finite() {
            return Err(NetError::NonFiniteLoss);
        }
        Ok((loss, grads))
    }

    pub fn apply_sgd(&mut self, grads: &Gradients, lr: f64) {
        for (l, g) in self.layers.iter_mut().zip(&grads.layers) {
            for (w, gw) in l.w.iter_mut().zip(&g.w) {
                *w -= lr * gw;
            }
            for (b, gb) in l.b.iter_mut().zip(&g.b) {
                *b -= lr * gb;
            }
        }
    }

    pub fn apply_adam(&mut self, grads: &Gradients, lr: f64, state: &mut AdamState) {
        state.step += 1;
        let t = state.step as f64;
        let (b1, b2, eps): (f64, f64, f64) = (0.9, 0.999, 1e-8);
        let corr1 = 1.0 - b1.powf(t);
        let corr2 = 1.0 - b2.powf(t);
        for (k, (l, g)) in self.layers.iter_mut().zip(&grads.layers).enumerate() {
            let mw = &mut state.m[k];
            let vw = &mut state.v[k];
            for (i, (w, gw)) in l.w.iter_mut().zip(&g.w).enumerate() {
                mw.w[i] = b1 * mw.w[i] + (1.0 - b1) * gw;
                vw.w[i] = b2 * vw.w[i] + (1.0 - b2) * gw * gw;
                *w -= lr * (mw.w[i] / corr1) / ((vw.w[i] / corr2).sqrt() + eps);
            }
            for (i, (b, gb)) in l.b.iter_mut().zip(&g.b).enumerate() {
                mw.b[i] = b1 * mw.b[i] + (1.0 - b1) * gb;
                vw.b[i] = b2 * vw.b[i] + (1.0 - b2) * gb * gb;
                *b -= lr * (mw.b[i] / corr1) / ((vw.b[i] / corr2).sqrt() + eps);
            }
        }
    }

    /// Flat view of all parameters, used by the finite-difference tests.
    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    pub fn get_param(&self, idx: usize) -> f64 {
        let mut i = idx;
        for l in &self.layers {
            if i < l.w.len() {
                return l.w[i];
            }
            i -= l.w.len();
            if i < l.b.len() {
                return l.b[i];
            }
            i -= l.b.len();
        }
        panic!("param index {idx} out of range");
    }

    pub fn set_param(&mut self, idx: usize, value: f64) {
        let mut i = idx;
        for l in &mut self.layers {
            if i < l.w.len() {
                l.w[i] = value;
                return;
            }
            i -= l.w.len();
            if i < l.b.len() {
                l.b[i] = value;
                return;
            }
            i -= l.b.len();
        }
        panic!("param index {idx} out of range");
    }

    pub fn grad_param(grads: &Gradients, idx: usize) -> f64 {
        let mut i = idx;
        for l in &grads.layers {
            if i < l.w.len() {
                return l.w[i];
            }
            i -= l.w.len();
            if i < l.b.len() {
                return l.b[i];
            }
            i -= l.b.len();
        }
        panic!("param index {idx} out of range");
    }
}

/// One training sample: an optional mask selects which outputs contribute.
pub struct MseSample<'a> {
    pub input: &'a [f64],
    pub target: &'a [f64],
    pub mask: Option<&'a [f64]>,
}

/// First/second-moment buffers for Adam.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<Layer>,
    v: Vec<Layer>,
    step: u64,
}

impl AdamState {
    pub fn new(net: &MlpNet) -> Self {
        let zeros = |net: &MlpNet| {
            net.layers
                .iter()
                .map(|l| Layer {
                    w: vec![0.0; l.w.len()],
                    b: vec![0.0; l.b.len()],
                    inputs: l.inputs,
                    outputs: l.outputs,
                })
                .collect()
        };
        AdamState {
            m: zeros(net),
            v: zeros(net),
            step: 0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, Stream};

    #[test]
    fn single_linear_layer_closed_form() {
        // One 1x1 linear layer: loss = (w*x - y)^2, dL/dw = 2(wx - y)x.
        let net = MlpNet::from_layers(vec![Layer {
            w: vec![0.7],
            b: vec![0.0],
            inputs: 1,
            outputs: 1,
        }])
        .unwrap();
        let (x, y) = (1.3, 2.0);
        let input = [x];
        let target = [y];
        let (loss, grads) = net
            .backprop_mse(&[MseSample {
                input: &input,
                target: &target,
                mask: None,
            }])
            .unwrap();
        let expected = 2.0 * (0.7 * x - y) * x;
        assert!((MlpNet::grad_param(&grads, 0) - expected).abs() < 1e-12);
        assert!((loss - (0.7 * x - y) * (0.7 * x - y)).abs() < 1e-12);
    }

    #[test]
    fn zero_error_means_zero_gradients() {
        let mut rng = substream(3, Stream::Init);
        let net = MlpNet::init(&[2, 4, 2], &mut rng, 1.0).unwrap();
        let input = [0.4, -0.2];
        let target = net.forward(&input);
        let (loss, grads) = net
            .backprop_mse(&[MseSample {
                input: &input,
                target: &target,
                mask: None,
            }])
            .unwrap();
        assert_eq!(loss, 0.0);
        for k in 0..net.param_count() {
            assert_eq!(MlpNet::grad_param(&grads, k), 0.0);
        }
    }

    #[test]
    fn input_gradient_matches_finite_differences() {
        let mut rng = substream(11, Stream::Init);
        let net = MlpNet::init(&[3, 8, 2], &mut rng, 1.0).unwrap();
        let input = vec![0.3, -0.7, 1.1];
        let target = vec![0.5, -0.5];

        let loss_at = |x: &[f64]| {
            let out = net.forward(x);
            out.iter().zip(&target).map(|(o, t)| (o - t) * (o - t)).sum::<f64>()
        };

        let cache = net.forward_cached(&input);
        let out = cache.output().to_vec();
        let grad_out: Vec<f64> = out.iter().zip(&target).map(|(o, t)| 2.0 * (o - t)).collect();
        let mut grads = Gradients::zeros(&net);
        let gin = net.backward(&cache, &grad_out, &mut grads);

        let h = 1e-5;
        for i in 0..input.len() {
            let mut plus = input.clone();
            let mut minus = input.clone();
            plus[i] += h;
            minus[i] -= h;
            let fd = (loss_at(&plus) - loss_at(&minus)) / (2.0 * h);
            let denom = gin[i].abs().max(fd.abs()).max(1e-7);
            assert!(
                (gin[i] - fd).abs() / denom < 1e-4,
                "input grad {i}: analytic {} vs fd {fd}",
                gin[i]
            );
        }
    }

    #[test]
    fn non_finite_loss_is_reported() {
        let net = MlpNet::from_layers(vec![Layer {
            w: vec![1.0],
            b: vec![0.0],
            inputs: 1,
            outputs: 1,
        }])
        .unwrap();
        let input = [f64::INFINITY];
        let target = [0.0];
        let err = net.backprop_mse(&[MseSample {
            input: &input,
            target: &target,
            mask: None,
        }]);
        assert_eq!(err.unwrap_err(), NetError::NonFiniteLoss);
    }

    #[test]
    fn adam_moves_toward_target() {
        let mut rng = substream(5, Stream::Init);
        let mut net = MlpNet::init(&[1, 8, 1], &mut rng, 1.0).unwrap();
        let mut adam = AdamState::new(&net);
        let input = [0.5];
        let target = [2.0];
        let mut last = f64::INFINITY;
        for _ in 0..500 {
            let (loss, grads) = net
                .backprop_mse(&[MseSample {
                    input: &input,
                    target: &target,
                    mask: None,
                }])
                .unwrap();
            net.apply_adam(&grads, 1e-2, &mut adam);
            last = loss;
        }
        assert!(last < 1e-3, "adam failed to fit a point, loss {last}");
    }
}
