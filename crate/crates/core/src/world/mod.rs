//! The learned world model M(s, a): a multi-task MLP predicting the user's
//! next action template, a normalized reward, and episode termination.
//!
//! State and one-hot action are encoded through linear layers of size 80,
//! concatenated into a shared tanh trunk of size 160, and read out by three
//! heads: softmax over the user-act vocabulary, a tanh reward scalar, and a
//! sigmoid terminal probability. It trains on real experiences only.

use rand::Rng;

use crate::agent::replay::{Experience, ReplayBuffer};
use crate::agent::ExperienceSource;
use crate::agent::TrainHyper;
use crate::domain::acts::DialogueAct;
use crate::domain::goal::UserGoal;
use crate::domain::kb::KnowledgeBase;
use crate::domain::reward::MAX_TURNS;
use crate::domain::state::{UserResponse, AGENT_ACTION_COUNT, STATE_DIM, USER_RESPONSE_COUNT};
use crate::error::{Error, Result};
use crate::nn::{
    clip_gradients, rmsprop_step, Activation, DenseLayer, GradientSet, OptimizerState, ParamSpec,
    Parameterized,
};

pub const ENCODER_DIM: usize = 80;
pub const TRUNK_DIM: usize = 2 * ENCODER_DIM;

/// Rewards are packaged scalars in [-L-1, 2L-1]; dividing by 2L keeps the
/// regression target inside the tanh head's (-1, 1) range.
pub fn normalize_reward(reward: f64) -> f64 {
    reward / (2.0 * MAX_TURNS as f64)
}

pub fn denormalize_reward(normalized: f64) -> f64 {
    normalized * 2.0 * MAX_TURNS as f64
}

#[derive(Debug, Clone)]
pub struct WorldModel {
    state_encoder: DenseLayer,
    action_encoder: DenseLayer,
    trunk: DenseLayer,
    action_head: DenseLayer,
    reward_head: DenseLayer,
    terminal_head: DenseLayer,
}

/// One forward prediction: a distribution over user-act templates, the
/// normalized reward, and the termination probability.
#[derive(Debug, Clone)]
pub struct WorldPrediction {
    pub user_probs: Vec<f64>,
    pub reward: f64,
    pub terminal: f64,
}

/// Cached intermediates for one (s, a) forward.
#[derive(Debug, Clone)]
pub struct WorldCache {
    state: Vec<f64>,
    action_onehot: Vec<f64>,
    enc_state: Vec<f64>,
    enc_action: Vec<f64>,
    concat: Vec<f64>,
    trunk_out: Vec<f64>,
    user_probs: Vec<f64>,
    reward: Vec<f64>,
    terminal: Vec<f64>,
}

/// Per-head output gradients fed to [`WorldModel::backward_into`].
#[derive(Debug, Clone)]
pub struct WorldOutputGrads {
    pub d_user_probs: Vec<f64>,
    pub d_reward: f64,
    pub d_terminal: f64,
}

impl WorldModel {
    pub fn new<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self {
            state_encoder: DenseLayer::new(STATE_DIM, ENCODER_DIM, Activation::Identity, rng),
            action_encoder: DenseLayer::new(
                AGENT_ACTION_COUNT,
                ENCODER_DIM,
                Activation::Identity,
                rng,
            ),
            trunk: DenseLayer::new(TRUNK_DIM, TRUNK_DIM, Activation::Tanh, rng),
            action_head: DenseLayer::new(TRUNK_DIM, USER_RESPONSE_COUNT, Activation::Softmax, rng),
            reward_head: DenseLayer::new(TRUNK_DIM, 1, Activation::Tanh, rng),
            terminal_head: DenseLayer::new(TRUNK_DIM, 1, Activation::Sigmoid, rng),
        }
    }

    pub fn forward(&self, state: &[f64], action: usize) -> Result<(WorldPrediction, WorldCache)> {
        if state.len() != STATE_DIM {
            return Err(Error::Config(format!(
                "state width {} does not match {STATE_DIM}",
                state.len()
            )));
        }
        if action >= AGENT_ACTION_COUNT {
            return Err(Error::Config(format!("action index {action} out of range")));
        }
        let mut action_onehot = vec![0.0; AGENT_ACTION_COUNT];
        action_onehot[action] = 1.0;

        let mut enc_state = vec![0.0; ENCODER_DIM];
        self.state_encoder.forward(state, &mut enc_state);
        let mut enc_action = vec![0.0; ENCODER_DIM];
        self.action_encoder.forward(&action_onehot, &mut enc_action);

        let mut concat = Vec::with_capacity(TRUNK_DIM);
        concat.extend_from_slice(&enc_state);
        concat.extend_from_slice(&enc_action);

        let mut trunk_out = vec![0.0; TRUNK_DIM];
        self.trunk.forward(&concat, &mut trunk_out);

        let mut user_probs = vec![0.0; USER_RESPONSE_COUNT];
        self.action_head.forward(&trunk_out, &mut user_probs);
        let mut reward = [0.0];
        self.reward_head.forward(&trunk_out, &mut reward);
        let mut terminal = [0.0];
        self.terminal_head.forward(&trunk_out, &mut terminal);

        let prediction = WorldPrediction {
            user_probs: user_probs.clone(),
            reward: reward[0],
            terminal: terminal[0],
        };
        let cache = WorldCache {
            state: state.to_vec(),
            action_onehot,
            enc_state,
            enc_action,
            concat,
            trunk_out,
            user_probs,
            reward: reward.to_vec(),
            terminal: terminal.to_vec(),
        };
        Ok((prediction, cache))
    }

    pub fn predict(&self, state: &[f64], action: usize) -> Result<WorldPrediction> {
        Ok(self.forward(state, action)?.0)
    }

    /// Accumulates parameter gradients for one sample given per-head output
    /// gradients.
    pub fn backward_into(
        &self,
        cache: &WorldCache,
        output_grads: &WorldOutputGrads,
        grads: &mut GradientSet,
    ) -> Result<()> {
        if output_grads.d_user_probs.len() != USER_RESPONSE_COUNT {
            return Err(Error::Contract("user-prob gradient width mismatch".into()));
        }
        if !grads.matches(self) {
            return Err(Error::Contract("gradient set does not match model".into()));
        }

        // Array order mirrors param_specs: encoders, trunk, three heads.
        let [sew, seb, aew, aeb, tw, tb, ahw, ahb, rhw, rhb, thw, thb] = grads.arrays_mut() else {
            return Err(Error::Contract("gradient set does not match model".into()));
        };

        let mut d_trunk = vec![0.0; TRUNK_DIM];
        let mut d_tmp = vec![0.0; TRUNK_DIM];
        self.action_head.backward_acc(
            &cache.trunk_out,
            &cache.user_probs,
            &output_grads.d_user_probs,
            &mut d_tmp,
            ahw,
            ahb,
        );
        for (a, b) in d_trunk.iter_mut().zip(&d_tmp) {
            *a += b;
        }
        self.reward_head.backward_acc(
            &cache.trunk_out,
            &cache.reward,
            &[output_grads.d_reward],
            &mut d_tmp,
            rhw,
            rhb,
        );
        for (a, b) in d_trunk.iter_mut().zip(&d_tmp) {
            *a += b;
        }
        self.terminal_head.backward_acc(
            &cache.trunk_out,
            &cache.terminal,
            &[output_grads.d_terminal],
            &mut d_tmp,
            thw,
            thb,
        );
        for (a, b) in d_trunk.iter_mut().zip(&d_tmp) {
            *a += b;
        }

        let mut d_concat = vec![0.0; TRUNK_DIM];
        self.trunk
            .backward_acc(&cache.concat, &cache.trunk_out, &d_trunk, &mut d_concat, tw, tb);

        let mut d_state = vec![0.0; STATE_DIM];
        self.state_encoder.backward_acc(
            &cache.state,
            &cache.enc_state,
            &d_concat[..ENCODER_DIM],
            &mut d_state,
            sew,
            seb,
        );
        let mut d_action = vec![0.0; AGENT_ACTION_COUNT];
        self.action_encoder.backward_acc(
            &cache.action_onehot,
            &cache.enc_action,
            &d_concat[ENCODER_DIM..],
            &mut d_action,
            aew,
            aeb,
        );
        Ok(())
    }

    /// Samples a grounded user response: template from the softmax head,
    /// reward de-normalized, termination from the Bernoulli head.
    pub fn sample_response<R: Rng + ?Sized>(
        &self,
        state: &[f64],
        action: usize,
        rng: &mut R,
        goal: &UserGoal,
        kb: &KnowledgeBase,
        last_agent_act: Option<&DialogueAct>,
    ) -> Result<(DialogueAct, f64, bool, UserResponse)> {
        let prediction = self.predict(state, action)?;
        let template = sample_categorical(&prediction.user_probs, rng);
        let response = UserResponse::from_index(template)
            .ok_or_else(|| Error::Contract("sampled template out of range".into()))?;
        let act = response.ground(goal, kb, last_agent_act);
        let reward = denormalize_reward(prediction.reward);
        let done = rng.random_range(0.0..1.0) < prediction.terminal;
        Ok((act, reward, done, response))
    }
}

pub fn sample_categorical<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random_range(0.0..1.0);
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

impl Parameterized for WorldModel {
    fn param_specs(&self) -> Vec<ParamSpec> {
        vec![
            ParamSpec::matrix("state_encoder.weight", ENCODER_DIM, STATE_DIM),
            ParamSpec::vector("state_encoder.bias", ENCODER_DIM),
            ParamSpec::matrix("action_encoder.weight", ENCODER_DIM, AGENT_ACTION_COUNT),
            ParamSpec::vector("action_encoder.bias", ENCODER_DIM),
            ParamSpec::matrix("trunk.weight", TRUNK_DIM, TRUNK_DIM),
            ParamSpec::vector("trunk.bias", TRUNK_DIM),
            ParamSpec::matrix("action_head.weight", USER_RESPONSE_COUNT, TRUNK_DIM),
            ParamSpec::vector("action_head.bias", USER_RESPONSE_COUNT),
            ParamSpec::matrix("reward_head.weight", 1, TRUNK_DIM),
            ParamSpec::vector("reward_head.bias", 1),
            ParamSpec::matrix("terminal_head.weight", 1, TRUNK_DIM),
            ParamSpec::vector("terminal_head.bias", 1),
        ]
    }

    fn param_slices(&self) -> Vec<&[f64]> {
        vec![
            &self.state_encoder.weights,
            &self.state_encoder.bias,
            &self.action_encoder.weights,
            &self.action_encoder.bias,
            &self.trunk.weights,
            &self.trunk.bias,
            &self.action_head.weights,
            &self.action_head.bias,
            &self.reward_head.weights,
            &self.reward_head.bias,
            &self.terminal_head.weights,
            &self.terminal_head.bias,
        ]
    }

    fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        vec![
            &mut self.state_encoder.weights,
            &mut self.state_encoder.bias,
            &mut self.action_encoder.weights,
            &mut self.action_encoder.bias,
            &mut self.trunk.weights,
            &mut self.trunk.bias,
            &mut self.action_head.weights,
            &mut self.action_head.bias,
            &mut self.reward_head.weights,
            &mut self.reward_head.bias,
            &mut self.terminal_head.weights,
            &mut self.terminal_head.bias,
        ]
    }
}

/// The three pre-update loss components of one training minibatch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorldLosses {
    pub action_ce: f64,
    pub reward_mse: f64,
    pub terminal_bce: f64,
}

/// Computes the equal-weighted multi-task loss and gradients for a batch.
fn batch_loss_and_grads(
    model: &WorldModel,
    batch: &[&Experience],
) -> Result<(WorldLosses, GradientSet)> {
    let mut grads = GradientSet::zeros_like(model);
    let mut losses = WorldLosses {
        action_ce: 0.0,
        reward_mse: 0.0,
        terminal_bce: 0.0,
    };
    let scale = 1.0 / batch.len() as f64;
    for e in batch {
        let (pred, cache) = model.forward(&e.state, e.action)?;
        let target_prob = pred.user_probs[e.user_action].max(f64::MIN_POSITIVE);
        losses.action_ce += -target_prob.ln();

        let reward_target = normalize_reward(e.reward);
        let reward_diff = pred.reward - reward_target;
        losses.reward_mse += reward_diff * reward_diff;

        let terminal_target = if e.terminal { 1.0 } else { 0.0 };
        let t = pred.terminal.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON);
        losses.terminal_bce +=
            -(terminal_target * t.ln() + (1.0 - terminal_target) * (1.0 - t).ln());

        let mut d_probs = vec![0.0; USER_RESPONSE_COUNT];
        d_probs[e.user_action] = -scale / target_prob;
        let output_grads = WorldOutputGrads {
            d_user_probs: d_probs,
            d_reward: 2.0 * reward_diff * scale,
            d_terminal: (-terminal_target / t + (1.0 - terminal_target) / (1.0 - t)) * scale,
        };
        model.backward_into(&cache, &output_grads, &mut grads)?;
    }
    losses.action_ce *= scale;
    losses.reward_mse *= scale;
    losses.terminal_bce *= scale;
    Ok((losses, grads))
}

/// One training minibatch sampled from the real buffer. Returns the
/// pre-update losses, or `None` when the buffer is empty. Simulated buffers
/// are rejected: the world model trains on real experience only.
pub fn train_world_model<R: Rng + ?Sized>(
    model: &mut WorldModel,
    real: &ReplayBuffer,
    hyper: &TrainHyper,
    optimizer: &mut OptimizerState,
    rng: &mut R,
) -> Result<Option<WorldLosses>> {
    if real.source() != ExperienceSource::Real {
        return Err(Error::Contract(
            "world model only trains on the real experience buffer".into(),
        ));
    }
    if real.is_empty() {
        return Ok(None);
    }
    let batch: Vec<&Experience> = (0..hyper.batch_size)
        .map(|_| real.get(rng.random_range(0..real.len())))
        .collect();
    let (losses, grads) = batch_loss_and_grads(model, &batch)?;
    let clipped = clip_gradients(grads, hyper.max_grad_norm);
    rmsprop_step(model, &clipped, optimizer);
    Ok(Some(losses))
}
