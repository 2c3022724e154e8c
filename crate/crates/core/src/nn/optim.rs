//! Gradient clipping and RMSProp.

use crate::nn::{GradientSet, Parameterized};

/// Scales the whole gradient set so its global L2 norm is at most
/// `max_norm`. Below the cap the set is returned unchanged.
pub fn clip_gradients(mut grads: GradientSet, max_norm: f64) -> GradientSet {
    assert!(max_norm > 0.0, "max_norm must be positive");
    let norm = grads.global_norm();
    if norm > max_norm {
        grads.scale(max_norm / norm);
    }
    grads
}

/// Per-parameter squared-gradient accumulator plus the step hyperparameters.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    accum: Vec<Vec<f64>>,
    pub learning_rate: f64,
    pub decay: f64,
    pub epsilon: f64,
}

impl OptimizerState {
    /// RMSProp with the standard constants: decay 0.9, epsilon 1e-8.
    pub fn new(net: &impl Parameterized, learning_rate: f64) -> Self {
        Self::with_constants(net, learning_rate, 0.9, 1e-8)
    }

    pub fn with_constants(
        net: &impl Parameterized,
        learning_rate: f64,
        decay: f64,
        epsilon: f64,
    ) -> Self {
        assert!(decay > 0.0 && decay < 1.0, "decay must be in (0,1)");
        assert!(epsilon > 0.0, "epsilon must be positive");
        Self {
            accum: net.param_slices().iter().map(|s| vec![0.0; s.len()]).collect(),
            learning_rate,
            decay,
            epsilon,
        }
    }

    pub fn accumulators(&self) -> &[Vec<f64>] {
        &self.accum
    }
}

/// One RMSProp update:
/// `acc <- decay*acc + (1-decay)*g^2`; `p <- p - lr*g/(sqrt(acc)+eps)`.
pub fn rmsprop_step(net: &mut impl Parameterized, grads: &GradientSet, state: &mut OptimizerState) {
    let mut params = net.param_slices_mut();
    assert_eq!(params.len(), grads.arrays().len(), "gradient shape mismatch");
    assert_eq!(params.len(), state.accum.len(), "optimizer shape mismatch");
    for ((param, grad), acc) in params.iter_mut().zip(grads.arrays()).zip(&mut state.accum) {
        assert_eq!(param.len(), grad.len(), "gradient shape mismatch");
        for ((p, &g), a) in param.iter_mut().zip(grad).zip(acc.iter_mut()) {
            *a = state.decay * *a + (1.0 - state.decay) * g * g;
            *p -= state.learning_rate * g / (a.sqrt() + state.epsilon);
        }
    }
}
