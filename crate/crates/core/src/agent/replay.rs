//! Experience replay buffers.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

/// Which world a transition came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperienceSource {
    Real,
    Simulated,
}

/// One transition: `(s, a, r, a_user, s', terminal)`. The reward is the
/// packaged scalar (-1 per turn, terminal bonus folded in).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Experience {
    pub state: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub user_action: usize,
    pub next_state: Vec<f64>,
    pub terminal: bool,
}

/// FIFO ring of experiences with a fixed capacity and a source tag.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    source: ExperienceSource,
    items: VecDeque<Experience>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, source: ExperienceSource) -> Self {
        assert!(capacity > 0, "buffer capacity must be positive");
        Self {
            capacity,
            source,
            items: VecDeque::with_capacity(capacity.min(4096)),
        }
    }

    pub fn push(&mut self, experience: Experience) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(experience);
    }

    pub fn extend(&mut self, experiences: impl IntoIterator<Item = Experience>) {
        for e in experiences {
            self.push(e);
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn source(&self) -> ExperienceSource {
        self.source
    }

    pub fn get(&self, index: usize) -> &Experience {
        &self.items[index]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Experience> {
        self.items.iter()
    }
}
