//! Shared fixtures for the criterion benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use switch_ddq::agent::{Experience, ExperienceSource, ReplayBuffer};
use switch_ddq::domain::{GoalCorpus, KnowledgeBase, AGENT_ACTION_COUNT, STATE_DIM, USER_RESPONSE_COUNT};

pub fn world() -> (KnowledgeBase, GoalCorpus) {
    let kb = KnowledgeBase::generate(71, 100);
    let corpus = GoalCorpus::generate(&kb, 72, 256).unwrap();
    (kb, corpus)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_state(rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..STATE_DIM)
        .map(|_| if rng.random_range(0.0..1.0) < 0.2 { 1.0 } else { 0.0 })
        .collect()
}

pub fn filled_buffer(n: usize, source: ExperienceSource, seed: u64) -> ReplayBuffer {
    let mut rng = rng(seed);
    let mut buffer = ReplayBuffer::new(n.max(1), source);
    for _ in 0..n {
        let terminal = rng.random_range(0.0..1.0) < 0.1;
        buffer.push(Experience {
            state: random_state(&mut rng),
            action: rng.random_range(0..AGENT_ACTION_COUNT),
            reward: if terminal { 79.0 } else { -1.0 },
            user_action: rng.random_range(0..USER_RESPONSE_COUNT),
            next_state: random_state(&mut rng),
            terminal,
        });
    }
    buffer
}
