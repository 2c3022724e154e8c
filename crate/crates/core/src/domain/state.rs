//! Dialogue state tracking, the fixed-width state encoding, and the agent
//! and user action-template sets.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::domain::acts::{DialogueAct, Intent, Slot, SlotValue, GOAL_SLOTS, INTENTS, SLOTS};
use crate::domain::goal::UserGoal;
use crate::domain::kb::KnowledgeBase;
use crate::domain::reward::MAX_TURNS;

/// Encoded state width: one-hot last user/agent intent, four binary slot
/// blocks (user informed/requested, agent informed/requested), and the
/// normalized turn counter.
pub const STATE_DIM: usize = INTENTS.len() * 2 + SLOTS.len() * 4 + 1;

/// Tracker for one dialogue. `turn` counts completed exchanges; a reported
/// episode length is `turn + 1` (the user's opening counts as the first
/// turn).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DialogueState {
    pub turn: usize,
    pub last_user_act: Option<DialogueAct>,
    pub last_agent_act: Option<DialogueAct>,
    pub user_informed: BTreeSet<Slot>,
    pub user_requested: BTreeSet<Slot>,
    pub agent_informed: BTreeMap<Slot, String>,
    pub agent_requested: BTreeSet<Slot>,
    /// Slot values both sides have settled on.
    pub agreed: BTreeMap<Slot, String>,
    pub ticket_issued: bool,
}

impl DialogueState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn apply_agent_act(&mut self, act: &DialogueAct) {
        for (slot, value) in &act.slots {
            match value {
                SlotValue::Unknown => {
                    self.agent_requested.insert(*slot);
                }
                SlotValue::Filled(v) => {
                    self.agent_informed.insert(*slot, v.clone());
                }
            }
        }
        self.last_agent_act = Some(act.clone());
    }

    pub fn apply_user_act(&mut self, act: &DialogueAct) {
        for (slot, value) in &act.slots {
            match value {
                SlotValue::Unknown => {
                    self.user_requested.insert(*slot);
                }
                SlotValue::Filled(v) => match act.intent {
                    Intent::Inform => {
                        self.user_informed.insert(*slot);
                        self.agreed.insert(*slot, v.clone());
                    }
                    Intent::ConfirmAnswer => {
                        self.agreed.insert(*slot, v.clone());
                    }
                    // Deny and the rest carry context only; nothing is
                    // agreed.
                    _ => {}
                },
            }
        }
        self.last_user_act = Some(act.clone());
    }

    /// Fixed-width feature vector; deterministic for a given tracker state.
    pub fn encode(&self) -> Vec<f64> {
        let mut v = vec![0.0; STATE_DIM];
        if let Some(act) = &self.last_user_act {
            v[act.intent.index()] = 1.0;
        }
        if let Some(act) = &self.last_agent_act {
            v[INTENTS.len() + act.intent.index()] = 1.0;
        }
        let base = INTENTS.len() * 2;
        let n = SLOTS.len();
        for slot in &self.user_informed {
            v[base + slot.index()] = 1.0;
        }
        for slot in &self.user_requested {
            v[base + n + slot.index()] = 1.0;
        }
        for slot in self.agent_informed.keys() {
            v[base + 2 * n + slot.index()] = 1.0;
        }
        for slot in &self.agent_requested {
            v[base + 3 * n + slot.index()] = 1.0;
        }
        v[STATE_DIM - 1] = self.turn as f64 / MAX_TURNS as f64;
        v
    }
}

/// True iff a ticket was issued, every goal constraint is agreed at the
/// goal's value, and every requested slot was answered (the ticket itself
/// is covered by issuance).
pub fn check_success(state: &DialogueState, goal: &UserGoal) -> bool {
    state.ticket_issued
        && goal
            .constraints
            .iter()
            .all(|(slot, value)| state.agreed.get(slot) == Some(value))
        && goal
            .requests
            .iter()
            .all(|slot| *slot == Slot::Ticket || state.agent_informed.contains_key(slot))
}

/// The fixed agent action-template set: request/inform over the eight
/// goal-relevant slots, plus booking, closing, and greeting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AgentAction {
    Request(Slot),
    Inform(Slot),
    TaskComplete,
    Closing,
    Greeting,
}

pub const AGENT_ACTION_COUNT: usize = GOAL_SLOTS.len() * 2 + 3;

impl AgentAction {
    pub fn all() -> Vec<AgentAction> {
        let mut actions = Vec::with_capacity(AGENT_ACTION_COUNT);
        actions.extend(GOAL_SLOTS.iter().map(|&s| AgentAction::Request(s)));
        actions.extend(GOAL_SLOTS.iter().map(|&s| AgentAction::Inform(s)));
        actions.push(AgentAction::TaskComplete);
        actions.push(AgentAction::Closing);
        actions.push(AgentAction::Greeting);
        actions
    }

    pub fn index(self) -> usize {
        match self {
            AgentAction::Request(slot) => goal_slot_position(slot),
            AgentAction::Inform(slot) => GOAL_SLOTS.len() + goal_slot_position(slot),
            AgentAction::TaskComplete => 2 * GOAL_SLOTS.len(),
            AgentAction::Closing => 2 * GOAL_SLOTS.len() + 1,
            AgentAction::Greeting => 2 * GOAL_SLOTS.len() + 2,
        }
    }

    pub fn from_index(index: usize) -> Option<AgentAction> {
        Self::all().get(index).copied()
    }

    /// Realizes the template as a dialogue act. Inform values are filled
    /// greedily from the first knowledge-base row consistent with what has
    /// been agreed so far.
    pub fn to_act(self, kb: &KnowledgeBase, state: &DialogueState) -> DialogueAct {
        match self {
            AgentAction::Request(slot) => DialogueAct::request(slot),
            AgentAction::Inform(slot) => {
                let value = kb
                    .first_consistent(&state.agreed)
                    .and_then(|(_, row)| row.get(slot))
                    .unwrap_or("unavailable");
                DialogueAct::inform(slot, value)
            }
            AgentAction::TaskComplete => DialogueAct::inform(Slot::TaskComplete, "booked"),
            AgentAction::Closing => DialogueAct::new(Intent::Closing),
            AgentAction::Greeting => DialogueAct::new(Intent::Greeting),
        }
    }
}

fn goal_slot_position(slot: Slot) -> usize {
    GOAL_SLOTS
        .iter()
        .position(|&s| s == slot)
        .expect("agent templates only cover goal slots")
}

/// The user action-template vocabulary (what the world model predicts).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UserResponse {
    Greeting,
    Thanks,
    Closing,
    ConfirmAnswer,
    Deny,
    NotSure,
    Inform(Slot),
}

pub const USER_RESPONSE_COUNT: usize = 6 + GOAL_SLOTS.len();

impl UserResponse {
    pub fn index(self) -> usize {
        match self {
            UserResponse::Greeting => 0,
            UserResponse::Thanks => 1,
            UserResponse::Closing => 2,
            UserResponse::ConfirmAnswer => 3,
            UserResponse::Deny => 4,
            UserResponse::NotSure => 5,
            UserResponse::Inform(slot) => 6 + goal_slot_position(slot),
        }
    }

    pub fn from_index(index: usize) -> Option<UserResponse> {
        match index {
            0 => Some(UserResponse::Greeting),
            1 => Some(UserResponse::Thanks),
            2 => Some(UserResponse::Closing),
            3 => Some(UserResponse::ConfirmAnswer),
            4 => Some(UserResponse::Deny),
            5 => Some(UserResponse::NotSure),
            i if i < USER_RESPONSE_COUNT => Some(UserResponse::Inform(GOAL_SLOTS[i - 6])),
            _ => None,
        }
    }

    /// Classifies a concrete user act back into its template; used to label
    /// real experiences for world-model training.
    pub fn classify(act: &DialogueAct) -> UserResponse {
        match act.intent {
            Intent::Greeting => UserResponse::Greeting,
            Intent::Thanks => UserResponse::Thanks,
            Intent::Closing => UserResponse::Closing,
            Intent::ConfirmAnswer => UserResponse::ConfirmAnswer,
            Intent::Deny => UserResponse::Deny,
            Intent::Inform => act
                .informed_pair()
                .and_then(|(slot, _)| {
                    GOAL_SLOTS.contains(&slot).then_some(UserResponse::Inform(slot))
                })
                .unwrap_or(UserResponse::NotSure),
            _ => UserResponse::NotSure,
        }
    }

    /// Grounds the template with slot values from the active goal (falling
    /// back to the goal's backing row for unconstrained slots).
    pub fn ground(
        self,
        goal: &UserGoal,
        kb: &KnowledgeBase,
        last_agent_act: Option<&DialogueAct>,
    ) -> DialogueAct {
        match self {
            UserResponse::Greeting => DialogueAct::new(Intent::Greeting),
            UserResponse::Thanks => DialogueAct::new(Intent::Thanks),
            UserResponse::Closing => DialogueAct::new(Intent::Closing),
            UserResponse::ConfirmAnswer => {
                let mut act = DialogueAct::new(Intent::ConfirmAnswer);
                if let Some((slot, value)) = last_agent_act.and_then(|a| a.informed_pair()) {
                    act = act.with_slot(slot, SlotValue::filled(value));
                }
                act
            }
            UserResponse::Deny => DialogueAct::new(Intent::Deny),
            UserResponse::NotSure => {
                let mut act = DialogueAct::new(Intent::NotSure);
                if let Some(slot) = last_agent_act.and_then(|a| a.requested_slot()) {
                    act = act.with_slot(slot, SlotValue::Unknown);
                }
                act
            }
            UserResponse::Inform(slot) => {
                let value = goal
                    .constraints
                    .get(&slot)
                    .map(String::as_str)
                    .or_else(|| kb.rows.get(goal.kb_row).and_then(|r| r.get(slot)))
                    .unwrap_or("unavailable");
                DialogueAct::inform(slot, value)
            }
        }
    }
}
