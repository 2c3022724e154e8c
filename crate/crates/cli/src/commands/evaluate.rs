//! `ddq evaluate`: greedy policy evaluation against the user simulator.

use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use switch_ddq::agent::{greedy_action, run_episode};
use switch_ddq::domain::AgentAction;

use super::{load_world, train::load_policy};

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// Policy checkpoint produced by `ddq train`.
    #[arg(long)]
    pub policy: PathBuf,

    /// Knowledge base file (kb.json from the training run).
    #[arg(long)]
    pub kb: PathBuf,

    /// Goal corpus file (goals.json from the training run).
    #[arg(long)]
    pub goals: PathBuf,

    /// Number of greedy test dialogues.
    #[arg(long, default_value_t = 50)]
    pub dialogues: usize,

    /// Seed for the goal draw.
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
}

pub fn run(args: EvaluateArgs) -> Result<()> {
    let (kb, corpus) = load_world(&args.kb, &args.goals)?;
    let policy = load_policy(&args.policy)?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);

    let mut successes = 0usize;
    let mut reward = 0.0;
    let mut turns = 0usize;
    for _ in 0..args.dialogues {
        let goal = corpus.goals[rng.random_range(0..corpus.goals.len())].clone();
        let record = run_episode(&kb, goal, |_, encoded| {
            AgentAction::from_index(greedy_action(&policy, encoded)?)
                .ok_or_else(|| switch_ddq::Error::Contract("action index out of range".into()))
        })?;
        successes += record.outcome.status.is_success() as usize;
        reward += record.outcome.total_reward;
        turns += record.outcome.turns;
    }
    let n = args.dialogues as f64;
    println!(
        "dialogues {}  success {:.4}  avg_reward {:.2}  avg_turns {:.2}",
        args.dialogues,
        successes as f64 / n,
        reward / n,
        turns as f64 / n
    );
    Ok(())
}
