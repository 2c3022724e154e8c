//! The rule-based user simulator and the episode environment around it.
//!
//! The simulator plays the "real user": deterministic agenda-lite rules
//! with no error model. The user opens with a bare greeting and mostly
//! reacts to the agent; when an exchange would leave the dialogue state
//! untouched (the agent repeats itself), the user volunteers a
//! not-yet-conveyed constraint on every second such exchange, so no loop
//! is absorbing. Booking (an inform of `taskcomplete`) and closing both
//! end the dialogue; success requires the booked ticket to conform to
//! every goal constraint.

use crate::domain::acts::{DialogueAct, Intent, Slot, SlotValue};
use crate::domain::goal::UserGoal;
use crate::domain::kb::KnowledgeBase;
use crate::domain::reward::{packaged_reward, DialogueStatus, EpisodeOutcome, MAX_TURNS};
use crate::domain::state::{check_success, DialogueState};
use crate::error::{Error, Result};

/// Deterministic user rules, shared by the environment and the scripted
/// chat oracle.
pub fn user_response(goal: &UserGoal, agent_act: &DialogueAct) -> DialogueAct {
    match agent_act.intent {
        Intent::Request => {
            let slot = agent_act
                .requested_slot()
                .expect("validated request act carries an UNKNOWN slot");
            match goal.constraints.get(&slot) {
                Some(value) => DialogueAct::inform(slot, value.clone()),
                None => DialogueAct::new(Intent::NotSure).with_slot(slot, SlotValue::Unknown),
            }
        }
        Intent::Inform => match agent_act.informed_pair() {
            Some((slot, value)) => match goal.constraints.get(&slot) {
                Some(want) if want != value => DialogueAct::new(Intent::Deny),
                _ => DialogueAct::new(Intent::ConfirmAnswer)
                    .with_slot(slot, SlotValue::filled(value)),
            },
            None => DialogueAct::new(Intent::NotSure),
        },
        Intent::Greeting => DialogueAct::new(Intent::Greeting),
        _ => DialogueAct::new(Intent::NotSure),
    }
}

/// Books the first knowledge-base row consistent with the agreed values;
/// the confirmation answers the user's request slots. Shared by the
/// simulated environment and the interactive session.
pub fn book_ticket(kb: &KnowledgeBase, goal: &UserGoal, state: &mut DialogueState) {
    if let Some((_, row)) = kb.first_consistent(&state.agreed) {
        state.ticket_issued = true;
        state
            .agent_informed
            .insert(Slot::Ticket, "booked".to_string());
        for slot in goal.requests.iter().copied().collect::<Vec<_>>() {
            if slot != Slot::Ticket {
                if let Some(value) = row.get(slot) {
                    state.agent_informed.insert(slot, value.to_string());
                }
            }
        }
    }
}

/// What one environment step produced.
#[derive(Debug, Clone)]
pub struct StepResult {
    pub user_act: DialogueAct,
    /// Packaged transition reward (-1, 79, or -41).
    pub reward: f64,
    pub done: bool,
    pub outcome: Option<EpisodeOutcome>,
}

/// One live episode against the rule-based user.
#[derive(Debug, Clone)]
pub struct EnvSession<'a> {
    kb: &'a KnowledgeBase,
    goal: UserGoal,
    state: DialogueState,
    total_reward: f64,
    finished: Option<EpisodeOutcome>,
    volunteer_turn: bool,
}

impl<'a> EnvSession<'a> {
    /// Starts an episode: the user opens with a bare greeting.
    pub fn start(kb: &'a KnowledgeBase, goal: UserGoal) -> Self {
        let mut state = DialogueState::new();
        state.apply_user_act(&DialogueAct::new(Intent::Greeting));
        Self {
            kb,
            goal,
            state,
            total_reward: 0.0,
            finished: None,
            volunteer_turn: false,
        }
    }

    /// The user act the simulator emits for `agent_act` in the current
    /// state, including the anti-loop volunteering rule.
    fn peek_response(&mut self, agent_act: &DialogueAct) -> DialogueAct {
        let base = user_response(&self.goal, agent_act);
        // Detect a no-op exchange by replaying it on a scratch tracker.
        let mut probe = self.state.clone();
        probe.apply_agent_act(agent_act);
        probe.apply_user_act(&base);
        if probe != self.state {
            return base;
        }
        self.volunteer_turn = !self.volunteer_turn;
        if self.volunteer_turn {
            for (slot, value) in &self.goal.constraints {
                if !self.state.user_informed.contains(slot) {
                    return DialogueAct::inform(*slot, value.clone());
                }
            }
        }
        base
    }

    pub fn state(&self) -> &DialogueState {
        &self.state
    }

    pub fn goal(&self) -> &UserGoal {
        &self.goal
    }

    pub fn outcome(&self) -> Option<EpisodeOutcome> {
        self.finished
    }

    pub fn is_finished(&self) -> bool {
        self.finished.is_some()
    }

    /// Runs one exchange. Success is checked before the turn cap, so a
    /// booking on the final permitted exchange still wins.
    pub fn step(&mut self, agent_act: &DialogueAct) -> Result<StepResult> {
        if self.finished.is_some() {
            return Err(Error::Contract("episode already finished".into()));
        }
        agent_act.validate()?;
        let response = self.peek_response(agent_act);
        self.state.apply_agent_act(agent_act);

        let booking = agent_act.intent == Intent::Inform
            && agent_act.slots.contains_key(&Slot::TaskComplete);
        let closing = agent_act.intent == Intent::Closing;

        if booking {
            self.book();
        }

        let status = if booking || closing {
            Some(if check_success(&self.state, &self.goal) {
                DialogueStatus::Success
            } else {
                DialogueStatus::Failure
            })
        } else if self.state.turn + 1 >= MAX_TURNS - 1 {
            // This exchange is the last one allowed; without a booking it
            // ends in failure at the cap.
            Some(DialogueStatus::Failure)
        } else {
            None
        };

        let user_act = match status {
            Some(DialogueStatus::Success) => DialogueAct::new(Intent::Thanks),
            Some(DialogueStatus::Failure) => DialogueAct::new(Intent::Closing),
            None => response,
        };
        self.state.apply_user_act(&user_act);
        self.state.turn += 1;

        let reward = packaged_reward(status);
        self.total_reward += reward;
        let outcome = status.map(|s| EpisodeOutcome {
            status: s,
            turns: self.state.turn + 1,
            total_reward: self.total_reward,
        });
        self.finished = outcome;
        Ok(StepResult {
            user_act,
            reward,
            done: outcome.is_some(),
            outcome,
        })
    }

    fn book(&mut self) {
        book_ticket(self.kb, &self.goal, &mut self.state);
    }
}
