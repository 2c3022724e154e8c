//! The switcher: an LSTM that scores how real-like each dialogue turn is,
//! gates the planning loop on the dialogue-level mean score, and filters
//! which simulated turns enter the simulated buffer.
//!
//! Turns are featurized as [state, one-hot action, reward / 2L]; each turn
//! is scored with its in-dialogue history prefix. Training follows the
//! standard discriminator objective: real turns are labeled 1, simulated
//! turns 0, binary cross-entropy minimized with RMSProp under the global
//! clip norm.

use std::collections::VecDeque;

use rand::Rng;

use crate::agent::replay::{Experience, ExperienceSource, ReplayBuffer};
use crate::domain::state::{AGENT_ACTION_COUNT, STATE_DIM};
use crate::error::{Error, Result};
use crate::nn::{clip_gradients, rmsprop_step, GradientSet, LstmNet, OptimizerState};
use crate::world::normalize_reward;

/// Featurized turn width: encoded state, one-hot action, normalized reward.
pub const TURN_FEATURE_DIM: usize = STATE_DIM + AGENT_ACTION_COUNT + 1;

/// Paper sizes: linear encoder to 80, 126 LSTM cells.
pub const SWITCHER_ENCODER_DIM: usize = 80;
pub const SWITCHER_CELLS: usize = 126;

/// The (s, a, r) triple at one dialogue turn. The reward is the packaged
/// transition scalar.
#[derive(Debug, Clone, PartialEq)]
pub struct TurnRecord {
    pub state: Vec<f64>,
    pub action: usize,
    pub reward: f64,
}

impl TurnRecord {
    pub fn from_experience(e: &Experience) -> Self {
        Self {
            state: e.state.clone(),
            action: e.action,
            reward: e.reward,
        }
    }

    fn featurize(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.state.len() + AGENT_ACTION_COUNT + 1);
        v.extend_from_slice(&self.state);
        let mut onehot = vec![0.0; AGENT_ACTION_COUNT];
        if self.action < AGENT_ACTION_COUNT {
            onehot[self.action] = 1.0;
        }
        v.extend_from_slice(&onehot);
        v.push(normalize_reward(self.reward));
        v
    }
}

/// Rising quality bar: permissive early, strict later.
#[derive(Debug, Clone, Copy)]
pub struct ThresholdSchedule {
    pub tau_lo: f64,
    pub tau_hi: f64,
    pub anneal_epochs: usize,
}

impl Default for ThresholdSchedule {
    fn default() -> Self {
        Self {
            tau_lo: 0.3,
            tau_hi: 0.6,
            anneal_epochs: 200,
        }
    }
}

impl ThresholdSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.tau_lo && self.tau_lo <= self.tau_hi && self.tau_hi < 1.0) {
            return Err(Error::Config(format!(
                "threshold schedule must satisfy 0 < lo <= hi < 1, got {} / {}",
                self.tau_lo, self.tau_hi
            )));
        }
        if self.anneal_epochs == 0 {
            return Err(Error::Config("anneal_epochs must be positive".into()));
        }
        Ok(())
    }

    /// tau(e) = lo + (hi - lo) * min(1, e / anneal_epochs).
    pub fn threshold(&self, epoch: usize) -> f64 {
        let ramp = (epoch as f64 / self.anneal_epochs as f64).min(1.0);
        self.tau_lo + (self.tau_hi - self.tau_lo) * ramp
    }
}

#[derive(Debug, Clone)]
pub struct Switcher {
    net: LstmNet,
}

impl Switcher {
    pub fn new<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut net = LstmNet::new(TURN_FEATURE_DIM, SWITCHER_ENCODER_DIM, SWITCHER_CELLS, rng);
        // Skeptical prior: an untrained gate must not wave simulated
        // experience through, so fresh scores start well below any
        // reasonable threshold and rise only once simulated turns actually
        // resemble real ones.
        net.set_head_bias(-2.0);
        Self { net }
    }

    /// Wraps an arbitrary scoring network (reduced sizes in tests).
    pub fn with_network(net: LstmNet) -> Self {
        Self { net }
    }

    pub fn network(&self) -> &LstmNet {
        &self.net
    }

    pub fn network_mut(&mut self) -> &mut LstmNet {
        &mut self.net
    }

    /// Turn-level quality scores; position t sees turns 1..t only.
    pub fn score_turns(&self, dialogue: &[TurnRecord]) -> Result<Vec<f64>> {
        if dialogue.is_empty() {
            return Err(Error::Empty("empty dialogue".into()));
        }
        let seq: Vec<Vec<f64>> = dialogue.iter().map(TurnRecord::featurize).collect();
        self.net.scores(&seq)
    }

    /// Arithmetic mean of the turn scores.
    pub fn score_dialogue(&self, dialogue: &[TurnRecord]) -> Result<f64> {
        let scores = self.score_turns(dialogue)?;
        Ok(scores.iter().sum::<f64>() / scores.len() as f64)
    }

    /// Gates a simulated dialogue: when the dialogue-level score clears
    /// `tau`, exactly the transitions whose turn score clears `tau` enter
    /// the simulated buffer. Returns the stored-turn count.
    pub fn filter_and_store(
        &self,
        dialogue: &[Experience],
        tau: f64,
        buffer: &mut ReplayBuffer,
    ) -> Result<usize> {
        if buffer.source() != ExperienceSource::Simulated {
            return Err(Error::Contract(
                "filtered turns may only enter the simulated buffer".into(),
            ));
        }
        let turns: Vec<TurnRecord> = dialogue.iter().map(TurnRecord::from_experience).collect();
        let scores = self.score_turns(&turns)?;
        let mean = scores.iter().sum::<f64>() / scores.len() as f64;
        if mean < tau {
            return Ok(0);
        }
        let mut stored = 0;
        for (e, &score) in dialogue.iter().zip(&scores) {
            if score >= tau {
                buffer.push(e.clone());
                stored += 1;
            }
        }
        Ok(stored)
    }
}

/// Dialogue-structured storage so training can rebuild each turn's history
/// prefix. Whole dialogues are evicted FIFO once the turn budget overflows.
#[derive(Debug, Clone, Default)]
pub struct DialogueStore {
    capacity_turns: usize,
    dialogues: VecDeque<Vec<TurnRecord>>,
    total_turns: usize,
}

impl DialogueStore {
    pub fn new(capacity_turns: usize) -> Self {
        assert!(capacity_turns > 0);
        Self {
            capacity_turns,
            dialogues: VecDeque::new(),
            total_turns: 0,
        }
    }

    pub fn push_experiences(&mut self, experiences: &[Experience]) {
        if experiences.is_empty() {
            return;
        }
        self.push(experiences.iter().map(TurnRecord::from_experience).collect());
    }

    pub fn push(&mut self, dialogue: Vec<TurnRecord>) {
        if dialogue.is_empty() {
            return;
        }
        self.total_turns += dialogue.len();
        self.dialogues.push_back(dialogue);
        while self.total_turns > self.capacity_turns && self.dialogues.len() > 1 {
            if let Some(old) = self.dialogues.pop_front() {
                self.total_turns -= old.len();
            }
        }
    }

    pub fn len(&self) -> usize {
        self.dialogues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dialogues.is_empty()
    }

    pub fn total_turns(&self) -> usize {
        self.total_turns
    }

    pub fn get(&self, index: usize) -> &[TurnRecord] {
        &self.dialogues[index]
    }
}

/// Switcher training step shape: how many dialogues per class per
/// minibatch.
#[derive(Debug, Clone, Copy)]
pub struct SwitcherHyper {
    pub dialogues_per_class: usize,
    pub max_grad_norm: f64,
}

impl Default for SwitcherHyper {
    fn default() -> Self {
        Self {
            dialogues_per_class: 4,
            max_grad_norm: 1.0,
        }
    }
}

/// One discriminator minibatch: real dialogues labeled 1, simulated 0,
/// every turn scored with its history prefix, classes weighted equally.
/// Returns the pre-update loss, or `None` when either store is empty.
pub fn train_switcher<R: Rng + ?Sized>(
    switcher: &mut Switcher,
    real: &DialogueStore,
    simulated: &DialogueStore,
    hyper: &SwitcherHyper,
    optimizer: &mut OptimizerState,
    rng: &mut R,
) -> Result<Option<f64>> {
    if real.is_empty() || simulated.is_empty() {
        return Ok(None);
    }
    let mut grads = GradientSet::zeros_like(&switcher.net);
    let mut loss = 0.0;
    for (store, label) in [(real, 1.0), (simulated, 0.0)] {
        let picks: Vec<&[TurnRecord]> = (0..hyper.dialogues_per_class)
            .map(|_| store.get(rng.random_range(0..store.len())))
            .collect();
        let class_turns: usize = picks.iter().map(|d| d.len()).sum();
        let class_scale = 0.5 / class_turns as f64;
        for dialogue in picks {
            let seq: Vec<Vec<f64>> = dialogue.iter().map(TurnRecord::featurize).collect();
            let (scores, cache) = switcher.net.forward(&seq)?;
            let mut score_grads = Vec::with_capacity(scores.len());
            for &s in &scores {
                let s = s.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON);
                loss -= class_scale * (label * s.ln() + (1.0 - label) * (1.0 - s).ln());
                score_grads.push(class_scale * (-(label / s) + (1.0 - label) / (1.0 - s)));
            }
            switcher.net.backward_into(&cache, &score_grads, &mut grads)?;
        }
    }
    let clipped = clip_gradients(grads, hyper.max_grad_norm);
    rmsprop_step(&mut switcher.net, &clipped, optimizer);
    Ok(Some(loss))
}

/// Area under the ROC curve by the rank statistic (ties count half).
pub fn auc(positive: &[f64], negative: &[f64]) -> f64 {
    if positive.is_empty() || negative.is_empty() {
        return 0.5;
    }
    let mut wins = 0.0;
    for &p in positive {
        for &n in negative {
            if p > n {
                wins += 1.0;
            } else if p == n {
                wins += 0.5;
            }
        }
    }
    wins / (positive.len() * negative.len()) as f64
}
