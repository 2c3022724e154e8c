//! Run configuration with paper defaults.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::domain::goal::GOAL_CATEGORIES;
use crate::error::{Error, Result};

/// Which agent variant a run trains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VariantKind {
    Dqn,
    /// DQN(K): K real dialogues per epoch, no planning.
    DqnK(u32),
    /// DDQ(K): K-1 unfiltered planning rollouts per epoch.
    DdqK(u32),
    /// Switcher-gated planning with active goal sampling.
    SwitchDdq,
    /// Switcher-gated planning with uniform goal sampling (ablation).
    SuDdq,
}

impl VariantKind {
    pub fn label(&self) -> String {
        match self {
            VariantKind::Dqn => "dqn".to_string(),
            VariantKind::DqnK(k) => format!("dqn({k})"),
            VariantKind::DdqK(k) => format!("ddq({k})"),
            VariantKind::SwitchDdq => "switch-ddq".to_string(),
            VariantKind::SuDdq => "su-ddq".to_string(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            VariantKind::DqnK(k) | VariantKind::DdqK(k) if *k < 2 => Err(Error::Config(format!(
                "variant {} requires K >= 2",
                self.label()
            ))),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for VariantKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for VariantKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let parse_k = |inner: &str| -> Result<u32> {
            inner
                .parse::<u32>()
                .map_err(|_| Error::Config(format!("bad K in variant '{s}'")))
        };
        let kind = match s.as_str() {
            "dqn" => VariantKind::Dqn,
            "switch-ddq" | "switch_ddq" | "switchddq" => VariantKind::SwitchDdq,
            "su-ddq" | "su_ddq" | "suddq" => VariantKind::SuDdq,
            _ => {
                if let Some(inner) = s.strip_prefix("dqn(").and_then(|r| r.strip_suffix(')')) {
                    VariantKind::DqnK(parse_k(inner)?)
                } else if let Some(inner) = s.strip_prefix("ddq(").and_then(|r| r.strip_suffix(')'))
                {
                    VariantKind::DdqK(parse_k(inner)?)
                } else {
                    return Err(Error::Config(format!("unknown variant '{s}'")));
                }
            }
        };
        kind.validate()?;
        Ok(kind)
    }
}

impl Serialize for VariantKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.label())
    }
}

impl<'de> Deserialize<'de> for VariantKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Everything a training experiment needs. Field defaults follow the paper
/// where it speaks (gamma, learning rate, clip norm, buffer sizes, RBS,
/// turn cap, network sizes) and documented decisions elsewhere.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub variants: Vec<VariantKind>,
    pub seeds: Vec<u64>,
    pub max_epochs: usize,
    /// Greedy 50-dialogue test cadence (epochs).
    pub eval_interval: usize,
    pub eval_dialogues: usize,

    pub kb_seed: u64,
    pub kb_rows: usize,
    pub corpus_seed: u64,
    pub corpus_size: usize,

    pub gamma: f64,
    pub learning_rate: f64,
    /// RMSProp denominator constant. The fast-oscillation floor of RMSProp
    /// scales inversely with this; Q-learning runs want it well above the
    /// numerical-noise default.
    pub rmsprop_epsilon: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    /// Minimum agent minibatches per epoch. The effective budget is one
    /// pass over the buffer union (union size / batch size), clamped
    /// between this and `agent_train_step_cap`.
    pub agent_train_steps: usize,
    pub agent_train_step_cap: usize,
    pub world_train_steps: usize,
    /// One-off world-model fit to the RBS buffer before the first epoch.
    pub world_pretrain_steps: usize,
    pub switcher_train_steps: usize,
    pub switcher_dialogues_per_class: usize,
    pub max_grad_norm: f64,

    pub real_buffer_capacity: usize,
    /// Simulated-buffer multiple for the switch variants (2000 x 5).
    pub sim_buffer_multiple: usize,
    pub rbs_dialogues: usize,
    pub max_planning_dialogues: usize,
    pub validation_dialogues: usize,

    /// Fraction of the success terminal the world model's reward estimate
    /// must reach for a simulated booking to count as a success.
    pub sim_success_bar: f64,
    pub tau_lo: f64,
    pub tau_hi: f64,
    pub anneal_epochs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            variants: vec![
                VariantKind::Dqn,
                VariantKind::DqnK(5),
                VariantKind::DdqK(5),
                VariantKind::DdqK(10),
                VariantKind::DdqK(20),
                VariantKind::SwitchDdq,
                VariantKind::SuDdq,
            ],
            seeds: vec![1, 2, 3],
            max_epochs: 300,
            eval_interval: 5,
            eval_dialogues: 50,
            kb_seed: 1013,
            kb_rows: 100,
            corpus_seed: 2027,
            corpus_size: 1024,
            gamma: 0.9,
            learning_rate: 0.001,
            rmsprop_epsilon: 0.01,
            epsilon: 0.1,
            batch_size: 16,
            agent_train_steps: 40,
            agent_train_step_cap: 400,
            world_train_steps: 100,
            world_pretrain_steps: 500,
            switcher_train_steps: 10,
            switcher_dialogues_per_class: 4,
            max_grad_norm: 1.0,
            real_buffer_capacity: 2000,
            sim_buffer_multiple: 5,
            rbs_dialogues: 50,
            max_planning_dialogues: 30,
            validation_dialogues: 16,
            sim_success_bar: 0.5,
            tau_lo: 0.3,
            tau_hi: 0.6,
            anneal_epochs: 200,
        }
    }
}

impl RunConfig {
    /// Rejects out-of-range values with the offending key in the message.
    pub fn validate(&self) -> Result<()> {
        fn req(ok: bool, msg: &str) -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::Config(msg.to_string()))
            }
        }
        req(!self.variants.is_empty(), "variants must not be empty")?;
        for v in &self.variants {
            v.validate()?;
        }
        req(!self.seeds.is_empty(), "seeds must not be empty")?;
        req(self.max_epochs >= 1, "max_epochs must be >= 1")?;
        req(self.eval_interval >= 1, "eval_interval must be >= 1")?;
        req(self.eval_dialogues >= 1, "eval_dialogues must be >= 1")?;
        req(self.kb_rows >= 1, "kb_rows must be >= 1")?;
        req(
            self.corpus_size >= GOAL_CATEGORIES,
            "corpus_size must be >= 128 (one per goal category)",
        )?;
        req(
            (0.0..=1.0).contains(&self.gamma),
            "gamma must be in [0,1]",
        )?;
        req(self.learning_rate > 0.0, "learning_rate must be > 0")?;
        req(self.rmsprop_epsilon > 0.0, "rmsprop_epsilon must be > 0")?;
        req(
            (0.0..=1.0).contains(&self.epsilon),
            "epsilon must be in [0,1]",
        )?;
        req(self.batch_size >= 1, "batch_size must be >= 1")?;
        req(self.agent_train_steps >= 1, "agent_train_steps must be >= 1")?;
        req(
            self.agent_train_step_cap >= self.agent_train_steps,
            "agent_train_step_cap must be >= agent_train_steps",
        )?;
        req(self.world_train_steps >= 1, "world_train_steps must be >= 1")?;
        req(
            self.world_pretrain_steps >= 1,
            "world_pretrain_steps must be >= 1",
        )?;
        req(
            self.switcher_train_steps >= 1,
            "switcher_train_steps must be >= 1",
        )?;
        req(
            self.switcher_dialogues_per_class >= 1,
            "switcher_dialogues_per_class must be >= 1",
        )?;
        req(self.max_grad_norm > 0.0, "max_grad_norm must be > 0")?;
        req(
            self.real_buffer_capacity >= 1,
            "real_buffer_capacity must be >= 1",
        )?;
        req(
            self.sim_buffer_multiple >= 1,
            "sim_buffer_multiple must be >= 1",
        )?;
        req(
            self.max_planning_dialogues >= 1,
            "max_planning_dialogues must be >= 1",
        )?;
        req(
            self.validation_dialogues >= 1,
            "validation_dialogues must be >= 1",
        )?;
        req(
            (0.0..=1.0).contains(&self.sim_success_bar),
            "sim_success_bar must be in [0,1]",
        )?;
        crate::switcher::ThresholdSchedule {
            tau_lo: self.tau_lo,
            tau_hi: self.tau_hi,
            anneal_epochs: self.anneal_epochs,
        }
        .validate()?;
        Ok(())
    }

    pub fn threshold_schedule(&self) -> crate::switcher::ThresholdSchedule {
        crate::switcher::ThresholdSchedule {
            tau_lo: self.tau_lo,
            tau_hi: self.tau_hi,
            anneal_epochs: self.anneal_epochs,
        }
    }
}
