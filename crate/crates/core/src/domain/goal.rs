//! User goals and the 128-category goal corpus.
//!
//! A goal's category id is the 7-bit presence mask over the optional
//! constraint slots (bit 0 = city, ..., bit 6 = theater_chain); moviename
//! is always constrained and ticket is always requested.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::acts::{Slot, OPTIONAL_CONSTRAINT_SLOTS};
use crate::domain::kb::KnowledgeBase;
use crate::error::{Error, Result};

pub const GOAL_CATEGORIES: usize = 1 << OPTIONAL_CONSTRAINT_SLOTS.len();
pub const CORPUS_FORMAT_VERSION: u32 = 1;

/// Slots the user may additionally want answered (besides the ticket).
const EXTRA_REQUEST_SLOTS: [Slot; 3] = [Slot::Theater, Slot::StartTime, Slot::Date];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserGoal {
    /// Slot values the user insists on; always includes moviename.
    pub constraints: BTreeMap<Slot, String>,
    /// Slots the user wants filled; always includes ticket.
    pub requests: BTreeSet<Slot>,
    /// 7-bit mask over [`OPTIONAL_CONSTRAINT_SLOTS`].
    pub category_id: u8,
    /// Index of the knowledge-base row this goal was projected from; used
    /// to ground simulated user acts for slots outside the constraints.
    pub kb_row: usize,
}

impl UserGoal {
    /// Recomputes the category mask from the constraint slots present.
    pub fn category_of(constraints: &BTreeMap<Slot, String>) -> u8 {
        let mut mask = 0u8;
        for (bit, slot) in OPTIONAL_CONSTRAINT_SLOTS.iter().enumerate() {
            if constraints.contains_key(slot) {
                mask |= 1 << bit;
            }
        }
        mask
    }

    /// The optional constraint slots encoded by a category mask.
    pub fn category_slots(category_id: u8) -> Vec<Slot> {
        OPTIONAL_CONSTRAINT_SLOTS
            .iter()
            .enumerate()
            .filter(|(bit, _)| category_id & (1 << bit) != 0)
            .map(|(_, &slot)| slot)
            .collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GoalCorpus {
    pub version: u32,
    pub seed: u64,
    pub goals: Vec<UserGoal>,
}

impl GoalCorpus {
    /// Deterministically generates `size >= 128` goals. The first 128 cover
    /// every category exactly once (so `size == 128` is the stratified
    /// corpus); the rest draw categories uniformly.
    pub fn generate(kb: &KnowledgeBase, seed: u64, size: usize) -> Result<Self> {
        if size < GOAL_CATEGORIES {
            return Err(Error::Config(format!(
                "corpus size {size} is smaller than the {GOAL_CATEGORIES} categories"
            )));
        }
        if kb.rows.is_empty() {
            return Err(Error::Config("knowledge base has no rows".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut goals = Vec::with_capacity(size);
        for i in 0..size {
            let category = if i < GOAL_CATEGORIES {
                i as u8
            } else {
                rng.random_range(0..GOAL_CATEGORIES) as u8
            };
            goals.push(Self::goal_for_category(kb, category, &mut rng)?);
        }
        Ok(Self {
            version: CORPUS_FORMAT_VERSION,
            seed,
            goals,
        })
    }

    fn goal_for_category(kb: &KnowledgeBase, category: u8, rng: &mut ChaCha8Rng) -> Result<UserGoal> {
        let row_idx = rng.random_range(0..kb.rows.len());
        let row = &kb.rows[row_idx];
        let mut constraints = BTreeMap::new();
        constraints.insert(
            Slot::MovieName,
            row.get(Slot::MovieName)
                .ok_or_else(|| Error::Config("row lacks moviename".into()))?
                .to_string(),
        );
        for slot in UserGoal::category_slots(category) {
            constraints.insert(
                slot,
                row.get(slot)
                    .ok_or_else(|| Error::Config(format!("row lacks {slot}")))?
                    .to_string(),
            );
        }
        let mut requests = BTreeSet::new();
        requests.insert(Slot::Ticket);
        for slot in EXTRA_REQUEST_SLOTS {
            if !constraints.contains_key(&slot) && rng.random_range(0.0..1.0) < 0.3 {
                requests.insert(slot);
            }
        }
        // Goals are projected from rows, so a consistent row must exist.
        if kb.first_consistent(&constraints).is_none() {
            return Err(Error::Config(
                "generated goal has no satisfying knowledge-base row".into(),
            ));
        }
        Ok(UserGoal {
            category_id: UserGoal::category_of(&constraints),
            constraints,
            requests,
            kb_row: row_idx,
        })
    }

    /// Indices of goals in each category bucket.
    pub fn by_category(&self) -> Vec<Vec<usize>> {
        let mut buckets = vec![Vec::new(); GOAL_CATEGORIES];
        for (i, goal) in self.goals.iter().enumerate() {
            buckets[goal.category_id as usize].push(i);
        }
        buckets
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Config(format!("serialize goal corpus: {e}")))?;
        fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let json = fs::read_to_string(path)?;
        let corpus: Self = serde_json::from_str(&json)
            .map_err(|e| Error::Config(format!("parse goal corpus: {e}")))?;
        if corpus.version != CORPUS_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "unsupported corpus version {}",
                corpus.version
            )));
        }
        Ok(corpus)
    }
}
