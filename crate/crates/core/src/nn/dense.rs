//! Dense feed-forward networks with hand-rolled backprop.
//!
//! Weights are flat row-major `Vec<f64>` with shape `(out_dim, in_dim)`.
//! Forward passes cache post-activation outputs so a matching backward can
//! recover every local derivative without re-running the network.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{GradientSet, ParamSpec, Parameterized};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Identity,
    Relu,
    Tanh,
    Sigmoid,
    /// Only valid as the terminal activation of a head.
    Softmax,
}

impl Activation {
    /// Applies the activation in place to a pre-activation vector.
    pub fn apply(self, z: &mut [f64]) {
        match self {
            Activation::Identity => {}
            Activation::Relu => {
                for v in z.iter_mut() {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
            }
            Activation::Tanh => {
                for v in z.iter_mut() {
                    *v = v.tanh();
                }
            }
            Activation::Sigmoid => {
                for v in z.iter_mut() {
                    *v = sigmoid(*v);
                }
            }
            Activation::Softmax => {
                // Shift by the max for overflow safety.
                let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let mut sum = 0.0;
                for v in z.iter_mut() {
                    *v = (*v - max).exp();
                    sum += *v;
                }
                for v in z.iter_mut() {
                    *v /= sum;
                }
            }
        }
    }

    /// Converts an output-side gradient into a pre-activation gradient,
    /// given the cached post-activation values `y`.
    fn backprop(self, y: &[f64], d_out: &[f64], d_pre: &mut [f64]) {
        match self {
            Activation::Identity => d_pre.copy_from_slice(d_out),
            Activation::Relu => {
                for ((dp, &g), &yi) in d_pre.iter_mut().zip(d_out).zip(y) {
                    *dp = if yi > 0.0 { g } else { 0.0 };
                }
            }
            Activation::Tanh => {
                for ((dp, &g), &yi) in d_pre.iter_mut().zip(d_out).zip(y) {
                    *dp = g * (1.0 - yi * yi);
                }
            }
            Activation::Sigmoid => {
                for ((dp, &g), &yi) in d_pre.iter_mut().zip(d_out).zip(y) {
                    *dp = g * yi * (1.0 - yi);
                }
            }
            Activation::Softmax => {
                // Full Jacobian: dz_i = y_i * (g_i - sum_j g_j y_j).
                let dot: f64 = d_out.iter().zip(y).map(|(g, yi)| g * yi).sum();
                for ((dp, &g), &yi) in d_pre.iter_mut().zip(d_out).zip(y) {
                    *dp = yi * (g - dot);
                }
            }
        }
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// One affine transform plus activation: `y = act(W x + b)`.
#[derive(Debug, Clone)]
pub struct DenseLayer {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub in_dim: usize,
    pub out_dim: usize,
    pub activation: Activation,
}

impl DenseLayer {
    /// Weights drawn uniformly from `[-1/sqrt(in_dim), +1/sqrt(in_dim)]`,
    /// biases zero.
    pub fn new<R: Rng + ?Sized>(
        in_dim: usize,
        out_dim: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        let limit = 1.0 / (in_dim as f64).sqrt();
        let weights = (0..in_dim * out_dim)
            .map(|_| rng.random_range(-limit..=limit))
            .collect();
        Self {
            weights,
            bias: vec![0.0; out_dim],
            in_dim,
            out_dim,
            activation,
        }
    }

    pub fn zeros(in_dim: usize, out_dim: usize, activation: Activation) -> Self {
        Self {
            weights: vec![0.0; in_dim * out_dim],
            bias: vec![0.0; out_dim],
            in_dim,
            out_dim,
            activation,
        }
    }

    /// `output = act(W input + b)`. Panics on shape mismatch; the panic-free
    /// entry point is [`DenseNet::forward`].
    pub fn forward(&self, input: &[f64], output: &mut [f64]) {
        assert_eq!(input.len(), self.in_dim, "dense layer input width");
        assert_eq!(output.len(), self.out_dim, "dense layer output width");
        for (o, out) in output.iter_mut().enumerate() {
            let row = &self.weights[o * self.in_dim..(o + 1) * self.in_dim];
            let mut sum = self.bias[o];
            for (w, x) in row.iter().zip(input) {
                sum += w * x;
            }
            *out = sum;
        }
        self.activation.apply(output);
    }

    /// Backward for one sample. `output` must be the post-activation values
    /// the matching `forward` produced. Parameter gradients are accumulated
    /// (`+=`) so minibatch loops can sum then average; `d_input` is
    /// overwritten.
    pub fn backward_acc(
        &self,
        input: &[f64],
        output: &[f64],
        d_output: &[f64],
        d_input: &mut [f64],
        d_weights: &mut [f64],
        d_bias: &mut [f64],
    ) {
        assert_eq!(input.len(), self.in_dim);
        assert_eq!(output.len(), self.out_dim);
        assert_eq!(d_output.len(), self.out_dim);
        assert_eq!(d_input.len(), self.in_dim);
        assert_eq!(d_weights.len(), self.weights.len());
        assert_eq!(d_bias.len(), self.out_dim);

        let mut d_pre = vec![0.0; self.out_dim];
        self.activation.backprop(output, d_output, &mut d_pre);

        d_input.fill(0.0);
        for (o, &dz) in d_pre.iter().enumerate() {
            d_bias[o] += dz;
            let row = o * self.in_dim;
            for i in 0..self.in_dim {
                d_weights[row + i] += dz * input[i];
                d_input[i] += self.weights[row + i] * dz;
            }
        }
    }
}

/// A stack of dense layers with compatible widths.
#[derive(Debug, Clone)]
pub struct DenseNet {
    layers: Vec<DenseLayer>,
}

/// Cached intermediates from [`DenseNet::forward`]: the input plus every
/// layer's post-activation output.
#[derive(Debug, Clone)]
pub struct DenseCache {
    input: Vec<f64>,
    activations: Vec<Vec<f64>>,
}

impl DenseCache {
    /// Final network output for this forward pass.
    pub fn output(&self) -> &[f64] {
        self.activations.last().unwrap_or(&self.input)
    }
}

impl DenseNet {
    pub fn from_layers(layers: Vec<DenseLayer>) -> Result<Self> {
        for pair in layers.windows(2) {
            if pair[0].out_dim != pair[1].in_dim {
                return Err(Error::Config(format!(
                    "dense layer widths do not chain: {} -> {}",
                    pair[0].out_dim, pair[1].in_dim
                )));
            }
            if pair[0].activation == Activation::Softmax {
                return Err(Error::Config(
                    "softmax is only valid as a terminal activation".into(),
                ));
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }

    pub fn in_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.in_dim)
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.out_dim)
    }

    pub fn forward(&self, input: &[f64]) -> Result<(Vec<f64>, DenseCache)> {
        if input.len() != self.in_dim() {
            return Err(Error::Config(format!(
                "input width {} does not match first layer width {}",
                input.len(),
                self.in_dim()
            )));
        }
        let mut cache = DenseCache {
            input: input.to_vec(),
            activations: Vec::with_capacity(self.layers.len()),
        };
        let mut current = input;
        for layer in &self.layers {
            let mut out = vec![0.0; layer.out_dim];
            layer.forward(current, &mut out);
            cache.activations.push(out);
            current = cache.activations.last().unwrap();
        }
        Ok((cache.output().to_vec(), cache))
    }

    /// Evaluation-only forward.
    pub fn output(&self, input: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward(input)?.0)
    }

    /// Gradients of a scalar loss w.r.t. every parameter and the input,
    /// given `dL/d(output)`. The cache must come from the matching forward.
    pub fn backward(&self, cache: &DenseCache, output_grad: &[f64]) -> Result<(GradientSet, Vec<f64>)> {
        let mut grads = GradientSet::zeros_like(self);
        let d_input = self.backward_into(cache, output_grad, &mut grads)?;
        Ok((grads, d_input))
    }

    /// Like [`DenseNet::backward`] but accumulates into an existing
    /// [`GradientSet`] so minibatch loops avoid reallocating.
    pub fn backward_into(
        &self,
        cache: &DenseCache,
        output_grad: &[f64],
        grads: &mut GradientSet,
    ) -> Result<Vec<f64>> {
        if cache.activations.len() != self.layers.len()
            || cache.input.len() != self.in_dim()
            || cache
                .activations
                .iter()
                .zip(&self.layers)
                .any(|(a, l)| a.len() != l.out_dim)
        {
            return Err(Error::Contract(
                "forward cache does not match this network".into(),
            ));
        }
        if output_grad.len() != self.out_dim() {
            return Err(Error::Contract(format!(
                "output grad width {} does not match network output {}",
                output_grad.len(),
                self.out_dim()
            )));
        }
        if grads.arrays().len() != 2 * self.layers.len() {
            return Err(Error::Contract("gradient set does not match network".into()));
        }

        let mut d_out = output_grad.to_vec();
        for (k, layer) in self.layers.iter().enumerate().rev() {
            let input = if k == 0 {
                &cache.input
            } else {
                &cache.activations[k - 1]
            };
            let mut d_in = vec![0.0; layer.in_dim];
            let (d_w, d_b) = grads.layer_pair_mut(k);
            layer.backward_acc(input, &cache.activations[k], &d_out, &mut d_in, d_w, d_b);
            d_out = d_in;
        }
        Ok(d_out)
    }
}

impl Parameterized for DenseNet {
    fn param_specs(&self) -> Vec<ParamSpec> {
        let mut specs = Vec::with_capacity(2 * self.layers.len());
        for (k, layer) in self.layers.iter().enumerate() {
            specs.push(ParamSpec::matrix(
                format!("layer{k}.weight"),
                layer.out_dim,
                layer.in_dim,
            ));
            specs.push(ParamSpec::vector(format!("layer{k}.bias"), layer.out_dim));
        }
        specs
    }

    fn param_slices(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weights.as_slice(), l.bias.as_slice()])
            .collect()
    }

    fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weights.as_mut_slice(), l.bias.as_mut_slice()])
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_net(dims: &[usize], acts: &[Activation], seed: u64) -> DenseNet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = dims
            .windows(2)
            .zip(acts)
            .map(|(d, &a)| DenseLayer::new(d[0], d[1], a, &mut rng))
            .collect();
        DenseNet::from_layers(layers).unwrap()
    }

    #[test]
    fn zero_weight_softmax_head_is_uniform() {
        let net = DenseNet::from_layers(vec![DenseLayer::zeros(3, 4, Activation::Softmax)]).unwrap();
        let (out, _) = net.forward(&[0.7, -1.2, 3.0]).unwrap();
        for v in &out {
            assert!((v - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn identity_layer_passes_input_through() {
        let mut layer = DenseLayer::zeros(3, 3, Activation::Identity);
        for i in 0..3 {
            layer.weights[i * 3 + i] = 1.0;
        }
        let net = DenseNet::from_layers(vec![layer]).unwrap();
        let x = [0.25, -4.0, 9.5];
        let (out, _) = net.forward(&x).unwrap();
        assert_eq!(out, x.to_vec());
    }

    // Straight-line re-evaluation of the same weights, written independently
    // of the layer code paths.
    fn naive_eval(net: &DenseNet, input: &[f64]) -> Vec<f64> {
        let mut cur = input.to_vec();
        for layer in net.layers() {
            let mut next = Vec::with_capacity(layer.out_dim);
            for o in 0..layer.out_dim {
                let mut z = layer.bias[o];
                for i in 0..layer.in_dim {
                    z += layer.weights[o * layer.in_dim + i] * cur[i];
                }
                next.push(z);
            }
            match layer.activation {
                Activation::Identity => {}
                Activation::Relu => next.iter_mut().for_each(|v| *v = v.max(0.0)),
                Activation::Tanh => next.iter_mut().for_each(|v| *v = v.tanh()),
                Activation::Sigmoid => next.iter_mut().for_each(|v| *v = 1.0 / (1.0 + (-*v).exp())),
                Activation::Softmax => {
                    let m = next.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    let s: f64 = next.iter().map(|v| (v - m).exp()).sum();
                    next.iter_mut().for_each(|v| *v = (*v - m).exp() / s);
                }
            }
            cur = next;
        }
        cur
    }

    #[test]
    fn forward_matches_independent_reevaluation() {
        let net = random_net(
            &[5, 7, 6, 4],
            &[Activation::Relu, Activation::Tanh, Activation::Softmax],
            42,
        );
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let x: Vec<f64> = (0..5).map(|_| rng.random_range(-2.0..2.0)).collect();
            let (out, _) = net.forward(&x).unwrap();
            let expected = naive_eval(&net, &x);
            for (a, b) in out.iter().zip(&expected) {
                assert!((a - b).abs() < 1e-12, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn softmax_sums_to_one_with_positive_entries() {
        let net = random_net(&[4, 8, 5], &[Activation::Tanh, Activation::Softmax], 3);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let x: Vec<f64> = (0..4).map(|_| rng.random_range(-10.0..10.0)).collect();
            let (out, _) = net.forward(&x).unwrap();
            let sum: f64 = out.iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
            assert!(out.iter().all(|&v| v > 0.0));
        }
    }

    #[test]
    fn zero_output_grad_gives_zero_gradients() {
        let net = random_net(&[4, 6, 3], &[Activation::Tanh, Activation::Identity], 5);
        let (_, cache) = net.forward(&[0.1, 0.2, 0.3, 0.4]).unwrap();
        let (grads, d_in) = net.backward(&cache, &[0.0, 0.0, 0.0]).unwrap();
        assert!(grads.arrays().iter().flatten().all(|&g| g == 0.0));
        assert!(d_in.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn scalar_chain_rule() {
        // y = w * x with w = 2, x = 3; dL/dy = 1 => dL/dw = 3, dL/dx = 2.
        let mut layer = DenseLayer::zeros(1, 1, Activation::Identity);
        layer.weights[0] = 2.0;
        let net = DenseNet::from_layers(vec![layer]).unwrap();
        let (_, cache) = net.forward(&[3.0]).unwrap();
        let (grads, d_in) = net.backward(&cache, &[1.0]).unwrap();
        assert_eq!(grads.arrays()[0][0], 3.0);
        assert_eq!(grads.arrays()[1][0], 1.0);
        assert_eq!(d_in[0], 2.0);
    }

    #[test]
    fn mismatched_cache_is_a_contract_violation() {
        let net_a = random_net(&[3, 4], &[Activation::Tanh], 1);
        let net_b = random_net(&[3, 5], &[Activation::Tanh], 2);
        let (_, cache) = net_a.forward(&[0.1, 0.2, 0.3]).unwrap();
        let err = net_b.backward(&cache, &[0.0; 5]).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
    }

    #[test]
    fn wrong_input_width_is_a_config_error() {
        let net = random_net(&[3, 4], &[Activation::Tanh], 1);
        assert!(matches!(net.forward(&[1.0, 2.0]), Err(Error::Config(_))));
    }

    #[test]
    fn softmax_mid_stack_is_rejected() {
        let layers = vec![
            DenseLayer::zeros(3, 4, Activation::Softmax),
            DenseLayer::zeros(4, 2, Activation::Identity),
        ];
        assert!(matches!(
            DenseNet::from_layers(layers),
            Err(Error::Config(_))
        ));
    }
}
