//! The hand-coded rule agent and Reply Buffer Spiking.

use rand::Rng;

use crate::agent::replay::{Experience, ReplayBuffer};
use crate::domain::acts::GOAL_SLOTS;
use crate::domain::goal::{GoalCorpus, UserGoal};
use crate::domain::kb::KnowledgeBase;
use crate::domain::reward::EpisodeOutcome;
use crate::domain::simulator::EnvSession;
use crate::domain::state::{AgentAction, DialogueState};
use crate::error::Result;

/// Requests each not-yet-requested goal-relevant slot in schema order, then
/// books.
pub fn rule_policy(state: &DialogueState) -> AgentAction {
    for slot in GOAL_SLOTS {
        if !state.agent_requested.contains(&slot) {
            return AgentAction::Request(slot);
        }
    }
    AgentAction::TaskComplete
}

/// One finished dialogue: its transitions plus the outcome.
#[derive(Debug, Clone)]
pub struct EpisodeRecord {
    pub experiences: Vec<Experience>,
    pub outcome: EpisodeOutcome,
}

/// Plays one episode against the rule-based user with an arbitrary policy
/// over encoded states.
pub fn run_episode<F>(kb: &KnowledgeBase, goal: UserGoal, mut policy: F) -> Result<EpisodeRecord>
where
    F: FnMut(&DialogueState, &[f64]) -> Result<AgentAction>,
{
    let mut session = EnvSession::start(kb, goal);
    let mut experiences = Vec::new();
    loop {
        let encoded = session.state().encode();
        let action = policy(session.state(), &encoded)?;
        let act = action.to_act(kb, session.state());
        let step = session.step(&act)?;
        experiences.push(Experience {
            state: encoded,
            action: action.index(),
            reward: step.reward,
            user_action: crate::domain::state::UserResponse::classify(&step.user_act).index(),
            next_state: session.state().encode(),
            terminal: step.done,
        });
        if let Some(outcome) = step.outcome {
            return Ok(EpisodeRecord {
                experiences,
                outcome,
            });
        }
    }
}

/// Reply Buffer Spiking: plays `n_dialogues` rule-agent episodes against
/// the real-user proxy (goals drawn uniformly from the corpus) and pushes
/// every transition into the real buffer. The finished records are returned
/// so callers can also feed dialogue-level consumers.
pub fn rbs_warm_start<R: Rng + ?Sized>(
    kb: &KnowledgeBase,
    corpus: &GoalCorpus,
    buffer: &mut ReplayBuffer,
    n_dialogues: usize,
    rng: &mut R,
) -> Result<Vec<EpisodeRecord>> {
    let mut records = Vec::with_capacity(n_dialogues);
    for _ in 0..n_dialogues {
        let goal = corpus.goals[rng.random_range(0..corpus.goals.len())].clone();
        let record = run_episode(kb, goal, |state, _| Ok(rule_policy(state)))?;
        buffer.extend(record.experiences.iter().cloned());
        records.push(record);
    }
    Ok(records)
}
