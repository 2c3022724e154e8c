//! Single-layer LSTM scoring network.
//!
//! Each sequence element is passed through a linear encoder, then a standard
//! LSTM cell (input/forget/output/candidate gates), and the hidden state at
//! every position is mapped to a scalar score through a sigmoid head. The
//! score at position t therefore depends only on elements 1..t.

use rand::Rng;

use crate::error::{Error, Result};
use crate::nn::dense::sigmoid;
use crate::nn::{Activation, DenseLayer, GradientSet, ParamSpec, Parameterized};

/// Gate block order inside the stacked `(4*cells) x *` matrices.
const GATES: usize = 4; // input, forget, output, candidate

#[derive(Debug, Clone)]
pub struct LstmNet {
    encoder: DenseLayer,
    /// `(4*cells) x enc_dim`, gate-major blocks.
    w_input: Vec<f64>,
    /// `(4*cells) x cells`, gate-major blocks.
    w_hidden: Vec<f64>,
    /// `4*cells`; the forget block starts at 1.0.
    bias: Vec<f64>,
    head: DenseLayer,
    cells: usize,
    enc_dim: usize,
}

#[derive(Debug, Clone, Default)]
struct StepCache {
    input: Vec<f64>,
    encoded: Vec<f64>,
    gate_i: Vec<f64>,
    gate_f: Vec<f64>,
    gate_o: Vec<f64>,
    gate_g: Vec<f64>,
    cell: Vec<f64>,
    cell_tanh: Vec<f64>,
    hidden: Vec<f64>,
    score: f64,
}

/// Intermediates for one forward pass over a sequence.
#[derive(Debug, Clone, Default)]
pub struct LstmCache {
    steps: Vec<StepCache>,
}

impl LstmCache {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

impl LstmNet {
    pub fn new<R: Rng + ?Sized>(input_width: usize, enc_dim: usize, cells: usize, rng: &mut R) -> Self {
        let encoder = DenseLayer::new(input_width, enc_dim, Activation::Identity, rng);
        let lim_x = 1.0 / (enc_dim as f64).sqrt();
        let lim_h = 1.0 / (cells as f64).sqrt();
        let w_input = (0..GATES * cells * enc_dim)
            .map(|_| rng.random_range(-lim_x..=lim_x))
            .collect();
        let w_hidden = (0..GATES * cells * cells)
            .map(|_| rng.random_range(-lim_h..=lim_h))
            .collect();
        let mut bias = vec![0.0; GATES * cells];
        // Forget-gate bias starts open.
        bias[cells..2 * cells].fill(1.0);
        let head = DenseLayer::new(cells, 1, Activation::Sigmoid, rng);
        Self {
            encoder,
            w_input,
            w_hidden,
            bias,
            head,
            cells,
            enc_dim,
        }
    }

    pub fn input_width(&self) -> usize {
        self.encoder.in_dim
    }

    /// Overrides the score head's bias (shifts every score toward 0 or 1).
    pub fn set_head_bias(&mut self, bias: f64) {
        self.head.bias[0] = bias;
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    /// Scores for every position, plus the caches backward needs.
    /// An empty sequence yields an empty score list.
    pub fn forward(&self, sequence: &[Vec<f64>]) -> Result<(Vec<f64>, LstmCache)> {
        let c = self.cells;
        let mut cache = LstmCache {
            steps: Vec::with_capacity(sequence.len()),
        };
        let mut hidden = vec![0.0; c];
        let mut cell = vec![0.0; c];

        for element in sequence {
            if element.len() != self.input_width() {
                return Err(Error::Config(format!(
                    "sequence element width {} does not match configured width {}",
                    element.len(),
                    self.input_width()
                )));
            }
            let mut encoded = vec![0.0; self.enc_dim];
            self.encoder.forward(element, &mut encoded);

            // z = W_x * x + W_h * h_prev + b, gate-major.
            let mut z = self.bias.clone();
            for (r, zr) in z.iter_mut().enumerate() {
                let row = &self.w_input[r * self.enc_dim..(r + 1) * self.enc_dim];
                for (w, x) in row.iter().zip(&encoded) {
                    *zr += w * x;
                }
                let row = &self.w_hidden[r * c..(r + 1) * c];
                for (w, h) in row.iter().zip(&hidden) {
                    *zr += w * h;
                }
            }

            let gate_i: Vec<f64> = z[..c].iter().map(|&v| sigmoid(v)).collect();
            let gate_f: Vec<f64> = z[c..2 * c].iter().map(|&v| sigmoid(v)).collect();
            let gate_o: Vec<f64> = z[2 * c..3 * c].iter().map(|&v| sigmoid(v)).collect();
            let gate_g: Vec<f64> = z[3 * c..].iter().map(|&v| v.tanh()).collect();

            let new_cell: Vec<f64> = (0..c)
                .map(|j| gate_f[j] * cell[j] + gate_i[j] * gate_g[j])
                .collect();
            let cell_tanh: Vec<f64> = new_cell.iter().map(|&v| v.tanh()).collect();
            let new_hidden: Vec<f64> = (0..c).map(|j| gate_o[j] * cell_tanh[j]).collect();

            let mut score = [0.0];
            self.head.forward(&new_hidden, &mut score);

            cache.steps.push(StepCache {
                input: element.clone(),
                encoded,
                gate_i,
                gate_f,
                gate_o,
                gate_g,
                cell: new_cell.clone(),
                cell_tanh,
                hidden: new_hidden.clone(),
                score: score[0],
            });
            hidden = new_hidden;
            cell = new_cell;
        }

        let scores = cache.steps.iter().map(|s| s.score).collect();
        Ok((scores, cache))
    }

    /// Evaluation-only scores.
    pub fn scores(&self, sequence: &[Vec<f64>]) -> Result<Vec<f64>> {
        Ok(self.forward(sequence)?.0)
    }

    /// Backprop through time. `score_grads[t]` is `dL/d(score_t)`; gradients
    /// are accumulated into `grads` (caller zeroes or averages).
    pub fn backward_into(
        &self,
        cache: &LstmCache,
        score_grads: &[f64],
        grads: &mut GradientSet,
    ) -> Result<()> {
        if score_grads.len() != cache.steps.len() {
            return Err(Error::Contract(format!(
                "{} score grads for {} cached steps",
                score_grads.len(),
                cache.steps.len()
            )));
        }
        if cache
            .steps
            .iter()
            .any(|s| s.hidden.len() != self.cells || s.encoded.len() != self.enc_dim)
        {
            return Err(Error::Contract("cache does not match this network".into()));
        }
        if !grads.matches(self) {
            return Err(Error::Contract("gradient set does not match network".into()));
        }

        let c = self.cells;
        let e = self.enc_dim;
        let mut d_hidden_next = vec![0.0; c];
        let mut d_cell_next = vec![0.0; c];
        let zeros = vec![0.0; c];

        for t in (0..cache.steps.len()).rev() {
            let step = &cache.steps[t];
            let (prev_hidden, prev_cell) = if t == 0 {
                (&zeros, &zeros)
            } else {
                (&cache.steps[t - 1].hidden, &cache.steps[t - 1].cell)
            };

            // Head: score = sigmoid(w . h + b).
            let s = step.score;
            let d_pre_head = score_grads[t] * s * (1.0 - s);
            {
                let arrays = grads.arrays_mut();
                let (head_w_grad, head_b_grad) = {
                    let (left, right) = arrays.split_at_mut(6);
                    (&mut left[5], &mut right[0])
                };
                for j in 0..c {
                    head_w_grad[j] += d_pre_head * step.hidden[j];
                }
                head_b_grad[0] += d_pre_head;
            }

            let mut d_hidden = vec![0.0; c];
            for j in 0..c {
                d_hidden[j] = d_pre_head * self.head.weights[j] + d_hidden_next[j];
            }

            let mut d_z = vec![0.0; GATES * c];
            let mut d_cell_prev = vec![0.0; c];
            for j in 0..c {
                let d_o = d_hidden[j] * step.cell_tanh[j];
                let d_tc = d_hidden[j] * step.gate_o[j];
                let d_c = d_tc * (1.0 - step.cell_tanh[j] * step.cell_tanh[j]) + d_cell_next[j];
                let d_i = d_c * step.gate_g[j];
                let d_g = d_c * step.gate_i[j];
                let d_f = d_c * prev_cell[j];
                d_cell_prev[j] = d_c * step.gate_f[j];

                d_z[j] = d_i * step.gate_i[j] * (1.0 - step.gate_i[j]);
                d_z[c + j] = d_f * step.gate_f[j] * (1.0 - step.gate_f[j]);
                d_z[2 * c + j] = d_o * step.gate_o[j] * (1.0 - step.gate_o[j]);
                d_z[3 * c + j] = d_g * (1.0 - step.gate_g[j] * step.gate_g[j]);
            }

            let mut d_encoded = vec![0.0; e];
            {
                let arrays = grads.arrays_mut();
                // Array order: enc.w, enc.b, w_input, w_hidden, bias, head.w, head.b.
                for (r, &dz) in d_z.iter().enumerate() {
                    arrays[4][r] += dz;
                    let row = r * e;
                    for i in 0..e {
                        arrays[2][row + i] += dz * step.encoded[i];
                        d_encoded[i] += self.w_input[row + i] * dz;
                    }
                    let row = r * c;
                    for j in 0..c {
                        arrays[3][row + j] += dz * prev_hidden[j];
                    }
                }
            }

            // dL/d(h_prev) via the recurrent weights.
            let mut d_hidden_prev = vec![0.0; c];
            for (r, &dz) in d_z.iter().enumerate() {
                let row = r * c;
                for j in 0..c {
                    d_hidden_prev[j] += self.w_hidden[row + j] * dz;
                }
            }

            // Encoder is linear, so d(pre) = d_encoded.
            {
                let arrays = grads.arrays_mut();
                let (enc_w_grad, enc_b_grad) = {
                    let (left, right) = arrays.split_at_mut(1);
                    (&mut left[0], &mut right[0])
                };
                let mut d_input = vec![0.0; self.encoder.in_dim];
                self.encoder.backward_acc(
                    &step.input,
                    &step.encoded,
                    &d_encoded,
                    &mut d_input,
                    enc_w_grad,
                    enc_b_grad,
                );
            }

            d_hidden_next = d_hidden_prev;
            d_cell_next = d_cell_prev;
        }
        Ok(())
    }

    pub fn backward(&self, cache: &LstmCache, score_grads: &[f64]) -> Result<GradientSet> {
        let mut grads = GradientSet::zeros_like(self);
        self.backward_into(cache, score_grads, &mut grads)?;
        Ok(grads)
    }
}

impl Parameterized for LstmNet {
    fn param_specs(&self) -> Vec<ParamSpec> {
        vec![
            ParamSpec::matrix("encoder.weight", self.enc_dim, self.encoder.in_dim),
            ParamSpec::vector("encoder.bias", self.enc_dim),
            ParamSpec::matrix("lstm.w_input", GATES * self.cells, self.enc_dim),
            ParamSpec::matrix("lstm.w_hidden", GATES * self.cells, self.cells),
            ParamSpec::vector("lstm.bias", GATES * self.cells),
            ParamSpec::matrix("head.weight", 1, self.cells),
            ParamSpec::vector("head.bias", 1),
        ]
    }

    fn param_slices(&self) -> Vec<&[f64]> {
        vec![
            &self.encoder.weights,
            &self.encoder.bias,
            &self.w_input,
            &self.w_hidden,
            &self.bias,
            &self.head.weights,
            &self.head.bias,
        ]
    }

    fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        vec![
            &mut self.encoder.weights,
            &mut self.encoder.bias,
            &mut self.w_input,
            &mut self.w_hidden,
            &mut self.bias,
            &mut self.head.weights,
            &mut self.head.bias,
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::finite_diff_check;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sequence(rng: &mut ChaCha8Rng, len: usize, width: usize) -> Vec<Vec<f64>> {
        (0..len)
            .map(|_| (0..width).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect()
    }

    #[test]
    fn zero_weights_score_half_everywhere() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut net = LstmNet::new(5, 4, 3, &mut rng);
        for slice in net.param_slices_mut() {
            slice.fill(0.0);
        }
        let seq = random_sequence(&mut rng, 6, 5);
        let (scores, _) = net.forward(&seq).unwrap();
        assert_eq!(scores.len(), 6);
        for s in scores {
            assert!((s - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_sequence_yields_empty_scores() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let net = LstmNet::new(5, 4, 3, &mut rng);
        let (scores, cache) = net.forward(&[]).unwrap();
        assert!(scores.is_empty());
        assert!(cache.is_empty());
    }

    #[test]
    fn scores_stay_in_open_unit_interval() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = LstmNet::new(4, 6, 5, &mut rng);
        let seq = random_sequence(&mut rng, 20, 4);
        let scores = net.scores(&seq).unwrap();
        assert!(scores.iter().all(|&s| s > 0.0 && s < 1.0));
    }

    #[test]
    fn prefix_scores_are_invariant_to_suffix() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let net = LstmNet::new(4, 6, 5, &mut rng);
        let seq = random_sequence(&mut rng, 9, 4);
        let full = net.scores(&seq).unwrap();
        for t in 1..=seq.len() {
            let prefix = net.scores(&seq[..t]).unwrap();
            assert_eq!(prefix, full[..t].to_vec());
        }
    }

    #[test]
    fn wrong_element_width_is_a_config_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let net = LstmNet::new(4, 6, 5, &mut rng);
        let seq = vec![vec![0.0; 3]];
        assert!(matches!(net.forward(&seq), Err(Error::Config(_))));
    }

    // BCE through time against central finite differences.
    #[test]
    fn bptt_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut net = LstmNet::new(4, 5, 4, &mut rng);
        let seq = random_sequence(&mut rng, 5, 4);
        let labels: Vec<f64> = (0..5).map(|_| if rng.random_range(0.0..1.0) < 0.5 { 0.0 } else { 1.0 }).collect();

        let bce = |net: &LstmNet| {
            let scores = net.scores(&seq).unwrap();
            scores
                .iter()
                .zip(&labels)
                .map(|(&s, &y)| -(y * s.ln() + (1.0 - y) * (1.0 - s).ln()))
                .sum::<f64>()
                / scores.len() as f64
        };

        let (scores, cache) = net.forward(&seq).unwrap();
        let n = scores.len() as f64;
        let score_grads: Vec<f64> = scores
            .iter()
            .zip(&labels)
            .map(|(&s, &y)| (-(y / s) + (1.0 - y) / (1.0 - s)) / n)
            .collect();
        let analytic = net.backward(&cache, &score_grads).unwrap();

        let err = finite_diff_check(&mut net, &analytic, bce, 1e-4).unwrap();
        assert!(err < 1e-4, "max relative error {err}");
    }

    #[test]
    fn mismatched_score_grads_are_a_contract_violation() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let net = LstmNet::new(4, 5, 4, &mut rng);
        let seq = random_sequence(&mut rng, 3, 4);
        let (_, cache) = net.forward(&seq).unwrap();
        assert!(matches!(
            net.backward(&cache, &[0.0; 2]),
            Err(Error::Contract(_))
        ));
    }
}
