//! The dialogue policy: Q-network, target copy, epsilon-greedy selection,
//! dual replay buffers, Q-learning over mixed real/simulated batches, and
//! the Reply-Buffer-Spiking warm start.

pub mod dqn;
pub mod replay;
pub mod rule;

pub use dqn::{
    argmax, greedy_action, new_q_network, select_action, sync_target, td_targets, train_step, TrainHyper,
    Q_HIDDEN,
};
pub use replay::{Experience, ExperienceSource, ReplayBuffer};
pub use rule::{rbs_warm_start, rule_policy, run_episode, EpisodeRecord};
