//! Reward scheme: -1 per turn, +2L on success, -L on failure, L = 40.
//!
//! A transition's stored reward packages the per-turn penalty together with
//! any terminal bonus, so a successful terminal transition carries
//! `-1 + 80 = 79` and a failed one `-1 - 40 = -41`. An episode reported
//! with T turns (the user's opening counts as turn 1, every completed
//! exchange adds one) therefore totals `80 - (T-1)` on success and
//! `-40 - (T-1)` on failure.

use serde::{Deserialize, Serialize};

/// L: the turn cap per dialogue.
pub const MAX_TURNS: usize = 40;

/// Terminal bonus for success: +2L.
pub const SUCCESS_REWARD: f64 = 2.0 * MAX_TURNS as f64;

/// Terminal bonus for failure: -L.
pub const FAILURE_REWARD: f64 = -(MAX_TURNS as f64);

/// Per-turn penalty.
pub const TURN_REWARD: f64 = -1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RewardEvent {
    NonterminalTurn,
    Success,
    Failure,
}

/// The raw reward signal for one event.
pub fn compute_reward(event: RewardEvent) -> f64 {
    match event {
        RewardEvent::NonterminalTurn => TURN_REWARD,
        RewardEvent::Success => SUCCESS_REWARD,
        RewardEvent::Failure => FAILURE_REWARD,
    }
}

/// The scalar a stored transition carries: the per-turn penalty plus the
/// terminal bonus when the transition ends the episode.
pub fn packaged_reward(terminal: Option<DialogueStatus>) -> f64 {
    match terminal {
        None => TURN_REWARD,
        Some(DialogueStatus::Success) => TURN_REWARD + SUCCESS_REWARD,
        Some(DialogueStatus::Failure) => TURN_REWARD + FAILURE_REWARD,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DialogueStatus {
    Success,
    Failure,
}

impl DialogueStatus {
    pub fn is_success(self) -> bool {
        self == DialogueStatus::Success
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeOutcome {
    pub status: DialogueStatus,
    /// Turn count in [1, L]; the opening turn plus one per exchange.
    pub turns: usize,
    pub total_reward: f64,
}
