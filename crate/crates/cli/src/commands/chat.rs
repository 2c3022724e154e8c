//! `ddq chat`: turn-by-turn human-as-user session with a trained policy.
//!
//! The human plays the user against the agent's dialogue acts, typing acts
//! in the terse grammar `intent(slot=value, slot, ...)`; `abandon` ends the
//! dialogue as a failure. Outcomes append to a human-eval log consumable by
//! `ddq compare`.

use std::fs::OpenOptions;
use std::io::{BufRead, Write};
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use switch_ddq::agent::greedy_action;
use switch_ddq::domain::{
    book_ticket, check_success, AgentAction, DialogueAct, DialogueState, Intent, Slot, SlotValue,
    UserGoal, KnowledgeBase, MAX_TURNS,
};
use switch_ddq::nn::DenseNet;

use super::{load_world, train::load_policy};

#[derive(Args, Debug)]
pub struct ChatArgs {
    /// Policy checkpoint produced by `ddq train`.
    #[arg(long)]
    pub policy: PathBuf,

    #[arg(long)]
    pub kb: PathBuf,

    #[arg(long)]
    pub goals: PathBuf,

    /// Seed for sampling the user goal.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,

    /// Human-eval log (JSON lines); outcomes are appended.
    #[arg(long, default_value = "human_eval.jsonl")]
    pub log: PathBuf,
}

/// One logged human-eval outcome.
#[derive(Debug, Serialize, Deserialize)]
pub struct HumanEvalRecord {
    pub policy: String,
    pub seed: u64,
    pub category: u8,
    pub success: bool,
    pub turns: usize,
    pub abandoned: bool,
}

pub fn run(args: ChatArgs) -> Result<()> {
    let (kb, corpus) = load_world(&args.kb, &args.goals)?;
    let policy = load_policy(&args.policy)?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let goal = corpus.goals[rng.random_range(0..corpus.goals.len())].clone();

    let stdin = std::io::stdin();
    let stdout = std::io::stdout();
    let outcome = chat_session(stdin.lock(), stdout.lock(), &kb, &goal, &policy)?;

    let record = HumanEvalRecord {
        policy: args.policy.display().to_string(),
        seed: args.seed,
        category: goal.category_id,
        success: outcome.success,
        turns: outcome.turns,
        abandoned: outcome.abandoned,
    };
    let mut file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&args.log)
        .with_context(|| format!("opening log {}", args.log.display()))?;
    writeln!(file, "{}", serde_json::to_string(&record)?)?;
    println!("logged outcome to {}", args.log.display());
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SessionOutcome {
    pub success: bool,
    pub turns: usize,
    pub abandoned: bool,
}

/// The REPL proper, decoupled from stdin/stdout so tests can script it.
/// Never mutates the policy or any training artifact.
pub fn chat_session<R: BufRead, W: Write>(
    mut input: R,
    mut out: W,
    kb: &KnowledgeBase,
    goal: &UserGoal,
    policy: &DenseNet,
) -> Result<SessionOutcome> {
    writeln!(out, "=== your goal ===")?;
    for (slot, value) in &goal.constraints {
        writeln!(out, "  constraint  {slot} = {value}")?;
    }
    for slot in &goal.requests {
        writeln!(out, "  wanted      {slot}")?;
    }
    writeln!(
        out,
        "Answer each agent act as the user. Format: intent(slot=value, slot, ...)"
    )?;
    writeln!(
        out,
        "Intents: request inform deny confirm_question confirm_answer greeting closing not_sure multiple_choice thanks welcome"
    )?;
    writeln!(out, "Type 'abandon' to give up (counts as failure).")?;

    // The session opens like every dialogue: the user has greeted.
    let mut state = DialogueState::new();
    state.apply_user_act(&DialogueAct::new(Intent::Greeting));

    loop {
        let encoded = state.encode();
        let action = AgentAction::from_index(greedy_action(policy, &encoded)?)
            .ok_or_else(|| switch_ddq::Error::Contract("action index out of range".into()))?;
        let act = action.to_act(kb, &state);
        writeln!(out, "agent: {act}")?;
        state.apply_agent_act(&act);

        let booking =
            act.intent == Intent::Inform && act.slots.contains_key(&Slot::TaskComplete);
        if booking {
            book_ticket(kb, goal, &mut state);
        }
        if booking || act.intent == Intent::Closing {
            state.turn += 1;
            let success = check_success(&state, goal);
            let turns = state.turn + 1;
            writeln!(
                out,
                "-- dialogue over: {} in {} turns --",
                if success { "SUCCESS" } else { "FAILURE" },
                turns
            )?;
            return Ok(SessionOutcome {
                success,
                turns,
                abandoned: false,
            });
        }

        // Prompt until a valid user act (or abandonment); malformed input
        // re-prompts without advancing the turn counter.
        let user_act = loop {
            write!(out, "user> ")?;
            out.flush()?;
            let mut line = String::new();
            if input.read_line(&mut line)? == 0 {
                // EOF counts as walking away.
                writeln!(out, "-- abandoned --")?;
                return Ok(SessionOutcome {
                    success: false,
                    turns: state.turn + 1,
                    abandoned: true,
                });
            }
            let line = line.trim();
            if line.eq_ignore_ascii_case("abandon") {
                writeln!(out, "-- abandoned: counted as failure --")?;
                return Ok(SessionOutcome {
                    success: false,
                    turns: state.turn + 1,
                    abandoned: true,
                });
            }
            match parse_act(line) {
                Ok(act) => break act,
                Err(e) => writeln!(out, "  ? {e}")?,
            }
        };
        state.apply_user_act(&user_act);
        state.turn += 1;

        if state.turn + 1 >= MAX_TURNS {
            writeln!(out, "-- turn limit reached: failure --")?;
            return Ok(SessionOutcome {
                success: false,
                turns: state.turn + 1,
                abandoned: false,
            });
        }
    }
}

/// Parses the terse act grammar `intent(slot=value, slot, ...)`.
pub fn parse_act(line: &str) -> switch_ddq::Result<DialogueAct> {
    let line = line.trim();
    if line.is_empty() {
        return Err(switch_ddq::Error::Protocol("empty input".into()));
    }
    let (intent_token, rest) = match line.find('(') {
        Some(open) => {
            let close = line
                .rfind(')')
                .ok_or_else(|| switch_ddq::Error::Protocol("missing ')'".into()))?;
            if close < open {
                return Err(switch_ddq::Error::Protocol("mismatched parentheses".into()));
            }
            (&line[..open], &line[open + 1..close])
        }
        None => (line, ""),
    };
    let intent = Intent::parse(intent_token.trim())?;
    let mut act = DialogueAct::new(intent);
    for token in rest.split(',') {
        let token = token.trim();
        if token.is_empty() {
            continue;
        }
        match token.split_once('=') {
            Some((slot, value)) => {
                let slot = Slot::parse(slot.trim())?;
                act.slots
                    .insert(slot, SlotValue::filled(value.trim().to_string()));
            }
            None => {
                let slot = Slot::parse(token)?;
                act.slots.insert(slot, SlotValue::Unknown);
            }
        }
    }
    act.validate()?;
    Ok(act)
}
