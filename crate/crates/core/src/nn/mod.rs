//! Minimal differentiable kernel: dense nets, an LSTM scorer, RMSProp with
//! gradient clipping, a finite-difference gradient checker, and a versioned
//! checkpoint format.

pub mod checkpoint;
pub mod dense;
pub mod gradcheck;
pub mod lstm;
pub mod optim;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use dense::{sigmoid, Activation, DenseCache, DenseLayer, DenseNet};
pub use gradcheck::finite_diff_check;
pub use lstm::{LstmCache, LstmNet};
pub use optim::{clip_gradients, rmsprop_step, OptimizerState};

/// Name and shape of one parameter array.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamSpec {
    pub name: String,
    pub shape: Vec<usize>,
}

impl ParamSpec {
    pub fn matrix(name: impl Into<String>, rows: usize, cols: usize) -> Self {
        Self {
            name: name.into(),
            shape: vec![rows, cols],
        }
    }

    pub fn vector(name: impl Into<String>, len: usize) -> Self {
        Self {
            name: name.into(),
            shape: vec![len],
        }
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A network whose parameters are an ordered list of named flat arrays.
/// The order must be stable; optimizers, clipping, checkpoints, and the
/// gradient checker all address parameters by position.
pub trait Parameterized {
    fn param_specs(&self) -> Vec<ParamSpec>;
    fn param_slices(&self) -> Vec<&[f64]>;
    fn param_slices_mut(&mut self) -> Vec<&mut [f64]>;

    fn param_count(&self) -> usize {
        self.param_slices().iter().map(|s| s.len()).sum()
    }
}

/// One gradient array per parameter array, shape-matched by position.
#[derive(Debug, Clone, Default)]
pub struct GradientSet {
    arrays: Vec<Vec<f64>>,
}

impl GradientSet {
    pub fn zeros_like(net: &impl Parameterized) -> Self {
        Self {
            arrays: net.param_slices().iter().map(|s| vec![0.0; s.len()]).collect(),
        }
    }

    pub fn from_arrays(arrays: Vec<Vec<f64>>) -> Self {
        Self { arrays }
    }

    pub fn arrays(&self) -> &[Vec<f64>] {
        &self.arrays
    }

    pub fn arrays_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.arrays
    }

    pub fn matches(&self, net: &impl Parameterized) -> bool {
        let slices = net.param_slices();
        self.arrays.len() == slices.len()
            && self.arrays.iter().zip(&slices).all(|(a, s)| a.len() == s.len())
    }

    /// Weight/bias gradient pair for dense layer `k` (arrays `2k`, `2k+1`).
    pub(crate) fn layer_pair_mut(&mut self, k: usize) -> (&mut [f64], &mut [f64]) {
        let (left, right) = self.arrays.split_at_mut(2 * k + 1);
        (&mut left[2 * k], &mut right[0])
    }

    pub fn fill(&mut self, value: f64) {
        for a in &mut self.arrays {
            a.fill(value);
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for v in self.arrays.iter_mut().flatten() {
            *v *= factor;
        }
    }

    pub fn add_assign(&mut self, other: &GradientSet) {
        debug_assert_eq!(self.arrays.len(), other.arrays.len());
        for (a, b) in self.arrays.iter_mut().zip(&other.arrays) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    /// L2 norm over the concatenation of every array.
    pub fn global_norm(&self) -> f64 {
        self.arrays
            .iter()
            .flatten()
            .map(|g| g * g)
            .sum::<f64>()
            .sqrt()
    }

    pub fn iter_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.arrays.iter().flatten().copied()
    }
}
