//! Per-epoch training orchestration and the variant matrix.
//!
//! One epoch: sync the target network, collect real dialogues, run the
//! variant's planning phase, train the world model on real experience,
//! train the switcher on real-vs-simulated dialogues, spend the fixed agent
//! optimization budget over the buffer union, then validate per category.

pub mod experiment;
pub mod metrics;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::agent::{
    greedy_action, new_q_network, rbs_warm_start, run_episode, select_action, sync_target,
    train_step, Experience, ExperienceSource, ReplayBuffer, TrainHyper,
};
use crate::config::{RunConfig, VariantKind};
use crate::domain::goal::{GoalCorpus, UserGoal, GOAL_CATEGORIES};
use crate::domain::kb::KnowledgeBase;
use crate::domain::reward::{DialogueStatus, EpisodeOutcome, MAX_TURNS, TURN_REWARD};
use crate::domain::state::{AgentAction, DialogueState};
use crate::domain::{packaged_reward, DialogueAct, Intent};
use crate::error::{Error, Result};
use crate::nn::{DenseNet, OptimizerState};
use crate::sampler::{sample_goal, CategoryStats, GoalSampling};
use crate::switcher::{
    train_switcher, DialogueStore, Switcher, SwitcherHyper, ThresholdSchedule,
};
use crate::world::{train_world_model, WorldModel};

pub use experiment::{run_experiment, run_single, ExperimentOutput};
pub use metrics::RunResult;
pub use metrics::{EpochMetrics, EvalStats, SwitcherEpochStats};

/// Resolved per-variant behavior.
#[derive(Debug, Clone)]
pub struct VariantConfig {
    pub kind: VariantKind,
    pub real_dialogues_per_epoch: usize,
    /// Fixed planning rounds for DDQ(K); the switch variants loop under the
    /// quality gate instead.
    pub fixed_planning_rounds: usize,
    pub uses_world_model: bool,
    pub uses_switcher: bool,
    pub goal_sampling: GoalSampling,
    pub sim_buffer_capacity: usize,
    pub max_planning_dialogues: usize,
}

impl VariantConfig {
    pub fn resolve(kind: VariantKind, cfg: &RunConfig) -> Result<Self> {
        kind.validate()?;
        let base = cfg.real_buffer_capacity;
        let resolved = match kind {
            VariantKind::Dqn => Self {
                kind,
                real_dialogues_per_epoch: 1,
                fixed_planning_rounds: 0,
                uses_world_model: false,
                uses_switcher: false,
                goal_sampling: GoalSampling::Uniform,
                sim_buffer_capacity: base * cfg.sim_buffer_multiple,
                max_planning_dialogues: cfg.max_planning_dialogues,
            },
            VariantKind::DqnK(k) => Self {
                kind,
                real_dialogues_per_epoch: k as usize,
                fixed_planning_rounds: 0,
                uses_world_model: false,
                uses_switcher: false,
                goal_sampling: GoalSampling::Uniform,
                sim_buffer_capacity: base * cfg.sim_buffer_multiple,
                max_planning_dialogues: cfg.max_planning_dialogues,
            },
            VariantKind::DdqK(k) => Self {
                kind,
                real_dialogues_per_epoch: 1,
                fixed_planning_rounds: k as usize - 1,
                uses_world_model: true,
                uses_switcher: false,
                goal_sampling: GoalSampling::Uniform,
                sim_buffer_capacity: base * k as usize,
                max_planning_dialogues: cfg.max_planning_dialogues,
            },
            VariantKind::SwitchDdq => Self {
                kind,
                real_dialogues_per_epoch: 1,
                fixed_planning_rounds: 0,
                uses_world_model: true,
                uses_switcher: true,
                goal_sampling: GoalSampling::Active,
                sim_buffer_capacity: base * cfg.sim_buffer_multiple,
                max_planning_dialogues: cfg.max_planning_dialogues,
            },
            VariantKind::SuDdq => Self {
                kind,
                real_dialogues_per_epoch: 1,
                fixed_planning_rounds: 0,
                uses_world_model: true,
                uses_switcher: true,
                goal_sampling: GoalSampling::Uniform,
                sim_buffer_capacity: base * cfg.sim_buffer_multiple,
                max_planning_dialogues: cfg.max_planning_dialogues,
            },
        };
        Ok(resolved)
    }
}

/// All mutable state for one training run.
pub struct Trainer<'a> {
    cfg: &'a RunConfig,
    pub variant: VariantConfig,
    kb: &'a KnowledgeBase,
    corpus: &'a GoalCorpus,
    buckets: Vec<Vec<usize>>,
    schedule: ThresholdSchedule,
    hyper: TrainHyper,
    rng: ChaCha8Rng,
    eval_rng_seed: u64,

    pub q: DenseNet,
    pub q_target: DenseNet,
    q_opt: OptimizerState,
    pub world: Option<WorldModel>,
    world_opt: Option<OptimizerState>,
    pub switcher: Option<Switcher>,
    switcher_opt: Option<OptimizerState>,

    pub real_buffer: ReplayBuffer,
    pub sim_buffer: ReplayBuffer,
    real_store: DialogueStore,
    sim_store: DialogueStore,
    pub stats: CategoryStats,

    epoch: usize,
    real_transitions_total: u64,
    sim_transitions_total: u64,
    real_dialogues_total: u64,
    sim_dialogues_total: u64,
    validation_dialogues_total: u64,
    updates_total: u64,
}

impl<'a> Trainer<'a> {
    /// Builds a run: fresh seeded networks, RBS warm start, and (for
    /// planning variants) a world model pre-trained once on the RBS buffer.
    pub fn new(
        cfg: &'a RunConfig,
        kind: VariantKind,
        kb: &'a KnowledgeBase,
        corpus: &'a GoalCorpus,
        seed: u64,
    ) -> Result<Self> {
        cfg.validate()?;
        let variant = VariantConfig::resolve(kind, cfg)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = new_q_network(&mut rng);
        let q_target = sync_target(&q);
        let q_opt = OptimizerState::with_constants(&q, cfg.learning_rate, 0.9, cfg.rmsprop_epsilon);
        let (world, world_opt) = if variant.uses_world_model {
            let w = WorldModel::new(&mut rng);
            let opt = OptimizerState::with_constants(&w, cfg.learning_rate, 0.9, cfg.rmsprop_epsilon);
            (Some(w), Some(opt))
        } else {
            (None, None)
        };
        let (switcher, switcher_opt) = if variant.uses_switcher {
            let s = Switcher::new(&mut rng);
            let opt =
                OptimizerState::with_constants(s.network(), cfg.learning_rate, 0.9, cfg.rmsprop_epsilon);
            (Some(s), Some(opt))
        } else {
            (None, None)
        };

        let mut trainer = Self {
            cfg,
            kb,
            corpus,
            buckets: corpus.by_category(),
            schedule: cfg.threshold_schedule(),
            hyper: TrainHyper {
                gamma: cfg.gamma,
                batch_size: cfg.batch_size,
                max_grad_norm: cfg.max_grad_norm,
            },
            rng,
            eval_rng_seed: seed ^ 0x5eed_0e7a,
            q,
            q_target,
            q_opt,
            world,
            world_opt,
            switcher,
            switcher_opt,
            real_buffer: ReplayBuffer::new(cfg.real_buffer_capacity, ExperienceSource::Real),
            sim_buffer: ReplayBuffer::new(variant.sim_buffer_capacity, ExperienceSource::Simulated),
            real_store: DialogueStore::new(cfg.real_buffer_capacity),
            sim_store: DialogueStore::new(variant.sim_buffer_capacity),
            stats: CategoryStats::new(),
            variant,
            epoch: 0,
            real_transitions_total: 0,
            sim_transitions_total: 0,
            real_dialogues_total: 0,
            sim_dialogues_total: 0,
            validation_dialogues_total: 0,
            updates_total: 0,
        };
        trainer.warm_start()?;
        Ok(trainer)
    }

    fn warm_start(&mut self) -> Result<()> {
        let records = rbs_warm_start(
            self.kb,
            self.corpus,
            &mut self.real_buffer,
            self.cfg.rbs_dialogues,
            &mut self.rng,
        )?;
        for record in &records {
            self.real_store.push_experiences(&record.experiences);
        }
        // The first planning phase runs before any epoch-level world-model
        // training, so planning variants fit the model to the RBS buffer
        // once up front.
        if self.world.is_some() {
            for _ in 0..self.cfg.world_pretrain_steps {
                self.train_world_once()?;
            }
        }
        Ok(())
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    fn train_world_once(&mut self) -> Result<()> {
        if let (Some(world), Some(opt)) = (self.world.as_mut(), self.world_opt.as_mut()) {
            train_world_model(world, &self.real_buffer, &self.hyper, opt, &mut self.rng)?;
        }
        Ok(())
    }

    /// Collects one real dialogue with the epsilon-greedy policy.
    fn collect_real_dialogue(&mut self) -> Result<EpisodeOutcome> {
        let goal = self.corpus.goals[self.rng.random_range(0..self.corpus.goals.len())].clone();
        let q = &self.q;
        let epsilon = self.cfg.epsilon;
        let rng = &mut self.rng;
        let record = run_episode(self.kb, goal, |_, encoded| {
            let idx = select_action(q, encoded, epsilon, rng)?;
            AgentAction::from_index(idx)
                .ok_or_else(|| Error::Contract("action index out of range".into()))
        })?;
        self.real_buffer.extend(record.experiences.iter().cloned());
        self.real_store.push_experiences(&record.experiences);
        self.real_transitions_total += record.experiences.len() as u64;
        self.real_dialogues_total += 1;
        Ok(record.outcome)
    }

    /// One agent-vs-world-model rollout. The per-turn penalty and the turn
    /// cap are imposed by this loop; the model supplies the user act, the
    /// termination flag, and the terminal-reward estimate.
    ///
    /// The switch variants sanitize terminal labels: a booking only earns
    /// the success reward when the model's estimate clears the confidence
    /// bar, and every terminal carries a legal packaged value. DDQ(K)
    /// stores the raw estimate, planning on whatever the model says.
    fn simulated_rollout(&mut self, goal: &UserGoal) -> Result<Vec<Experience>> {
        let world = self
            .world
            .as_ref()
            .ok_or_else(|| Error::Contract("planning without a world model".into()))?;
        let mut state = DialogueState::new();
        state.apply_user_act(&DialogueAct::new(Intent::Greeting));
        let mut experiences = Vec::new();
        loop {
            let encoded = state.encode();
            let action_idx = select_action(&self.q, &encoded, self.cfg.epsilon, &mut self.rng)?;
            let action = AgentAction::from_index(action_idx)
                .ok_or_else(|| Error::Contract("action index out of range".into()))?;
            let act = action.to_act(self.kb, &state);
            state.apply_agent_act(&act);

            let (user_act, est_reward, model_done, response) = world.sample_response(
                &encoded,
                action_idx,
                &mut self.rng,
                goal,
                self.kb,
                Some(&act),
            )?;
            state.apply_user_act(&user_act);
            state.turn += 1;

            let capped = state.turn + 1 >= MAX_TURNS;
            let (reward, done) = if model_done {
                let estimate = if self.cfg.sim_success_bar > 0.0 {
                    // Snap to a legal packaged terminal, and only award the
                    // success value when the model's estimate clears the
                    // confidence bar; optimism in unexplored regions must
                    // not leak success labels into planning.
                    let success = packaged_reward(Some(DialogueStatus::Success));
                    let failure = packaged_reward(Some(DialogueStatus::Failure));
                    if est_reward >= self.cfg.sim_success_bar * success {
                        success
                    } else {
                        failure
                    }
                } else {
                    est_reward
                };
                (estimate, true)
            } else if capped {
                (packaged_reward(Some(DialogueStatus::Failure)), true)
            } else {
                (TURN_REWARD, false)
            };
            experiences.push(Experience {
                state: encoded,
                action: action_idx,
                reward,
                user_action: response.index(),
                next_state: state.encode(),
                terminal: done,
            });
            if done {
                return Ok(experiences);
            }
        }
    }

    /// Generates this epoch's simulated dialogues. DDQ(K) runs exactly K-1
    /// unfiltered rollouts; the switch variants loop until the gate closes
    /// or the hard cap, storing only quality-cleared turns.
    fn planning_phase(&mut self) -> Result<PlanningStats> {
        let mut out = PlanningStats::default();
        if self.variant.fixed_planning_rounds > 0 {
            for _ in 0..self.variant.fixed_planning_rounds {
                let goal =
                    self.corpus.goals[self.rng.random_range(0..self.corpus.goals.len())].clone();
                let rollout = self.simulated_rollout(&goal)?;
                out.dialogues += 1;
                out.stored_turns += rollout.len();
                self.sim_transitions_total += rollout.len() as u64;
                self.sim_dialogues_total += 1;
                self.sim_buffer.extend(rollout);
            }
            return Ok(out);
        }
        if !self.variant.uses_switcher {
            return Ok(out);
        }
        let tau = self.schedule.threshold(self.epoch);
        for _ in 0..self.variant.max_planning_dialogues {
            let goal = sample_goal(
                &self.stats,
                self.corpus,
                &self.buckets,
                self.variant.goal_sampling,
                &mut self.rng,
            );
            let rollout = self.simulated_rollout(&goal)?;
            out.dialogues += 1;
            self.sim_transitions_total += rollout.len() as u64;
            self.sim_dialogues_total += 1;
            self.sim_store.push_experiences(&rollout);

            let switcher = self.switcher.as_ref().expect("switch variant");
            let stored = switcher.filter_and_store(&rollout, tau, &mut self.sim_buffer)?;
            out.stored_turns += stored;
            // A zero store means the dialogue-level score fell below tau:
            // the gate closed, so planning stops for this epoch.
            if stored == 0 {
                out.gate_closed = true;
                break;
            }
        }
        Ok(out)
    }

    /// Greedy per-category validation; round-robin with a rotating offset
    /// so every category is refreshed every `128 / V` epochs. Validation
    /// episodes never touch the buffers.
    fn validate(&mut self) -> Result<Vec<(usize, DialogueStatus)>> {
        let v = self.cfg.validation_dialogues;
        let mut outcomes = Vec::with_capacity(v);
        for j in 0..v {
            let category = (self.epoch * v + j) % GOAL_CATEGORIES;
            let goal = if let Some(bucket) = self.buckets.get(category).filter(|b| !b.is_empty()) {
                self.corpus.goals[bucket[self.rng.random_range(0..bucket.len())]].clone()
            } else {
                self.corpus.goals[self.rng.random_range(0..self.corpus.goals.len())].clone()
            };
            let category = goal.category_id as usize;
            let q = &self.q;
            let record = run_episode(self.kb, goal, |_, encoded| {
                AgentAction::from_index(greedy_action(q, encoded)?)
                    .ok_or_else(|| Error::Contract("action index out of range".into()))
            })?;
            self.stats.update(category, record.outcome.status)?;
            self.validation_dialogues_total += 1;
            outcomes.push((category, record.outcome.status));
        }
        Ok(outcomes)
    }

    /// Greedy evaluation over `n` dialogues with goals drawn from a
    /// dedicated stream, so measurement never perturbs training.
    pub fn evaluate(&self, n: usize) -> Result<EvalStats> {
        let mut eval_rng = ChaCha8Rng::seed_from_u64(self.eval_rng_seed ^ self.epoch as u64);
        let mut successes = 0usize;
        let mut reward_sum = 0.0;
        let mut turn_sum = 0usize;
        for _ in 0..n {
            let goal =
                self.corpus.goals[eval_rng.random_range(0..self.corpus.goals.len())].clone();
            let q = &self.q;
            let record = run_episode(self.kb, goal, |_, encoded| {
                AgentAction::from_index(greedy_action(q, encoded)?)
                    .ok_or_else(|| Error::Contract("action index out of range".into()))
            })?;
            if record.outcome.status.is_success() {
                successes += 1;
            }
            reward_sum += record.outcome.total_reward;
            turn_sum += record.outcome.turns;
        }
        Ok(EvalStats {
            success_rate: successes as f64 / n as f64,
            avg_reward: reward_sum / n as f64,
            avg_turns: turn_sum as f64 / n as f64,
        })
    }

    /// Mean switcher scores over sampled stored dialogues, for the metrics
    /// file.
    fn switcher_snapshot(&mut self, planning: &PlanningStats) -> Option<SwitcherEpochStats> {
        let switcher = self.switcher.as_ref()?;
        let mean_over = |store: &DialogueStore, rng: &mut ChaCha8Rng| -> Option<f64> {
            if store.is_empty() {
                return None;
            }
            let picks = 8.min(store.len());
            let mut sum = 0.0;
            let mut count = 0usize;
            for _ in 0..picks {
                let d = store.get(rng.random_range(0..store.len()));
                if let Ok(scores) = switcher.score_turns(d) {
                    sum += scores.iter().sum::<f64>();
                    count += scores.len();
                }
            }
            (count > 0).then(|| sum / count as f64)
        };
        let mut rng = ChaCha8Rng::seed_from_u64(self.eval_rng_seed ^ 0x5c0e ^ self.epoch as u64);
        Some(SwitcherEpochStats {
            mean_real_score: mean_over(&self.real_store, &mut rng),
            mean_sim_score: mean_over(&self.sim_store, &mut rng),
            planning_dialogues: planning.dialogues,
            stored_sim_turns: planning.stored_turns,
            gate_closed: planning.gate_closed,
            threshold: self.schedule.threshold(self.epoch),
        })
    }

    /// One full epoch; returns its metrics row. `evaluated` controls the
    /// greedy 50-dialogue test.
    pub fn run_epoch(&mut self, evaluated: bool) -> Result<EpochMetrics> {
        // (1) refresh the frozen target.
        self.q_target = sync_target(&self.q);

        // (2) real experience.
        let mut real_dialogues = 0u64;
        for _ in 0..self.variant.real_dialogues_per_epoch {
            self.collect_real_dialogue()?;
            real_dialogues += 1;
        }

        // (3) planning.
        let planning = self.planning_phase()?;

        // (4) world model on real experience only.
        if self.world.is_some() {
            for _ in 0..self.cfg.world_train_steps {
                self.train_world_once()?;
            }
        }

        // (5) switcher on real vs simulated dialogues.
        if let (Some(switcher), Some(opt)) = (self.switcher.as_mut(), self.switcher_opt.as_mut()) {
            let hyper = SwitcherHyper {
                dialogues_per_class: self.cfg.switcher_dialogues_per_class,
                max_grad_norm: self.cfg.max_grad_norm,
            };
            for _ in 0..self.cfg.switcher_train_steps {
                train_switcher(
                    switcher,
                    &self.real_store,
                    &self.sim_store,
                    &hyper,
                    opt,
                    &mut self.rng,
                )?;
            }
        }

        // (6) agent budget over the union: one pass, clamped.
        let union = self.real_buffer.len() + self.sim_buffer.len();
        let steps = union
            .div_ceil(self.cfg.batch_size)
            .clamp(self.cfg.agent_train_steps, self.cfg.agent_train_step_cap);
        let mut loss_sum = 0.0;
        let mut loss_count = 0u32;
        for _ in 0..steps {
            if let Some(loss) = train_step(
                &mut self.q,
                &self.q_target,
                &self.real_buffer,
                &self.sim_buffer,
                &self.hyper,
                &mut self.q_opt,
                &mut self.rng,
            )? {
                self.updates_total += self.cfg.batch_size as u64;
                loss_sum += loss;
                loss_count += 1;
            }
        }

        // (7) per-category validation.
        self.validate()?;

        // (8) metrics.
        let switcher_stats = self.switcher_snapshot(&planning);
        let eval = if evaluated {
            Some(self.evaluate(self.cfg.eval_dialogues)?)
        } else {
            None
        };
        let metrics = EpochMetrics {
            epoch: self.epoch + 1,
            eval,
            real_dialogues,
            sim_dialogues: planning.dialogues as u64,
            real_dialogues_total: self.real_dialogues_total,
            sim_dialogues_total: self.sim_dialogues_total,
            real_transitions_total: self.real_transitions_total,
            sim_transitions_total: self.sim_transitions_total,
            validation_dialogues_total: self.validation_dialogues_total,
            updates_total: self.updates_total,
            mean_agent_loss: (loss_count > 0).then(|| loss_sum / loss_count as f64),
            switcher: switcher_stats,
        };
        self.epoch += 1;
        Ok(metrics)
    }

    /// Final per-category (failure rate, count) snapshot.
    pub fn category_snapshot(&self) -> Vec<(f64, u64)> {
        (0..self.stats.categories())
            .map(|c| (self.stats.failure_rate(c), self.stats.count(c)))
            .collect()
    }
}

use rand::SeedableRng;

#[derive(Debug, Clone, Copy, Default)]
struct PlanningStats {
    dialogues: usize,
    stored_turns: usize,
    gate_closed: bool,
}
