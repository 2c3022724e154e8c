//! Q-network construction, epsilon-greedy action selection, TD targets,
//! and the union-sampled Q-learning update.

use rand::Rng;

use crate::agent::replay::{Experience, ReplayBuffer};
use crate::domain::state::{AGENT_ACTION_COUNT, STATE_DIM};
use crate::error::Result;
use crate::nn::{
    clip_gradients, rmsprop_step, Activation, DenseLayer, DenseNet, GradientSet, OptimizerState,
};

/// One hidden layer of 80 relu units, linear head over the action templates.
pub const Q_HIDDEN: usize = 80;

pub fn new_q_network<R: Rng + ?Sized>(rng: &mut R) -> DenseNet {
    DenseNet::from_layers(vec![
        DenseLayer::new(STATE_DIM, Q_HIDDEN, Activation::Relu, rng),
        DenseLayer::new(Q_HIDDEN, AGENT_ACTION_COUNT, Activation::Identity, rng),
    ])
    .expect("fixed Q architecture chains")
}

/// Shared update hyperparameters.
#[derive(Debug, Clone, Copy)]
pub struct TrainHyper {
    pub gamma: f64,
    pub batch_size: usize,
    pub max_grad_norm: f64,
}

impl Default for TrainHyper {
    fn default() -> Self {
        Self {
            gamma: 0.9,
            batch_size: 16,
            max_grad_norm: 1.0,
        }
    }
}

/// Epsilon-greedy over the Q row; greedy ties break to the lowest index.
/// With `epsilon == 0` this is a pure function of (weights, state) and
/// consumes no randomness.
pub fn select_action<R: Rng + ?Sized>(
    q: &DenseNet,
    state: &[f64],
    epsilon: f64,
    rng: &mut R,
) -> Result<usize> {
    debug_assert!((0.0..=1.0).contains(&epsilon));
    if epsilon > 0.0 && rng.random_range(0.0..1.0) < epsilon {
        return Ok(rng.random_range(0..AGENT_ACTION_COUNT));
    }
    let values = q.output(state)?;
    Ok(argmax(&values))
}

/// Greedy action: pure argmax over the Q row.
pub fn greedy_action(q: &DenseNet, state: &[f64]) -> Result<usize> {
    Ok(argmax(&q.output(state)?))
}

pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// `y_i = r_i` when terminal, else `r_i + gamma * max_a' Q'(s'_i, a')`.
pub fn td_targets(batch: &[&Experience], q_target: &DenseNet, gamma: f64) -> Result<Vec<f64>> {
    debug_assert!((0.0..=1.0).contains(&gamma));
    let mut targets = Vec::with_capacity(batch.len());
    for e in batch {
        let y = if e.terminal || gamma == 0.0 {
            e.reward
        } else {
            let next = q_target.output(&e.next_state)?;
            e.reward + gamma * next.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        };
        targets.push(y);
    }
    Ok(targets)
}

/// A deep value copy; later updates to the live network leave it untouched.
pub fn sync_target(q: &DenseNet) -> DenseNet {
    q.clone()
}

/// One Q-learning minibatch over the union of both buffers (every stored
/// item equally likely). Returns the pre-update mean-squared loss, or
/// `None` when both buffers are empty.
pub fn train_step<R: Rng + ?Sized>(
    q: &mut DenseNet,
    q_target: &DenseNet,
    real: &ReplayBuffer,
    simulated: &ReplayBuffer,
    hyper: &TrainHyper,
    optimizer: &mut OptimizerState,
    rng: &mut R,
) -> Result<Option<f64>> {
    let total = real.len() + simulated.len();
    if total == 0 {
        return Ok(None);
    }
    let batch: Vec<&Experience> = (0..hyper.batch_size)
        .map(|_| {
            let i = rng.random_range(0..total);
            if i < real.len() {
                real.get(i)
            } else {
                simulated.get(i - real.len())
            }
        })
        .collect();

    let mut targets = td_targets(&batch, q_target, hyper.gamma)?;
    // Bootstrapped targets on states far outside the training distribution
    // can run away; no achievable return leaves this range, so clamp.
    let bound = 2.0 * crate::domain::reward::MAX_TURNS as f64;
    for y in &mut targets {
        *y = y.clamp(-bound, bound);
    }

    let mut grads = GradientSet::zeros_like(q);
    let mut loss = 0.0;
    let scale = 1.0 / batch.len() as f64;
    for (e, &y) in batch.iter().zip(&targets) {
        let (values, cache) = q.forward(&e.state)?;
        let diff = values[e.action] - y;
        loss += diff * diff;
        let mut d_out = vec![0.0; values.len()];
        d_out[e.action] = 2.0 * diff * scale;
        q.backward_into(&cache, &d_out, &mut grads)?;
    }
    loss *= scale;

    let clipped = clip_gradients(grads, hyper.max_grad_norm);
    rmsprop_step(q, &clipped, optimizer);
    Ok(Some(loss))
}
