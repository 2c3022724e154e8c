//! The task-completion dialogue world: acts, goals, knowledge base, state
//! tracking, rewards, and the rule-based user simulator.

pub mod acts;
pub mod goal;
pub mod kb;
pub mod reward;
pub mod simulator;
pub mod state;

pub use acts::{
    DialogueAct, Intent, Slot, SlotValue, GOAL_SLOTS, INTENTS, OPTIONAL_CONSTRAINT_SLOTS, SLOTS,
};
pub use goal::{GoalCorpus, UserGoal, GOAL_CATEGORIES};
pub use kb::{KbRow, KnowledgeBase, DEFAULT_KB_ROWS};
pub use reward::{
    compute_reward, packaged_reward, DialogueStatus, EpisodeOutcome, RewardEvent, FAILURE_REWARD,
    MAX_TURNS, SUCCESS_REWARD, TURN_REWARD,
};
pub use simulator::{book_ticket, user_response, EnvSession, StepResult};
pub use state::{
    check_success, AgentAction, DialogueState, UserResponse, AGENT_ACTION_COUNT, STATE_DIM,
    USER_RESPONSE_COUNT,
};
