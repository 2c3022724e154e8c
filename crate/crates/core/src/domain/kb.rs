//! Synthetic movie-ticket knowledge base.
//!
//! Rows are complete bookable showings: one value for each of the eight
//! goal-relevant slots, drawn from small fixed vocabularies. Goals are
//! projected from rows, so every goal is satisfiable by construction.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::acts::{Slot, GOAL_SLOTS};
use crate::error::{Error, Result};

pub const KB_FORMAT_VERSION: u32 = 1;
pub const DEFAULT_KB_ROWS: usize = 100;

fn vocabulary_for(slot: Slot) -> &'static [&'static str] {
    match slot {
        Slot::MovieName => &[
            "mission_horizon",
            "paper_moons",
            "the_last_ledger",
            "city_of_glass",
            "midnight_harvest",
            "solar_winds",
            "the_violet_hour",
            "iron_harbor",
        ],
        Slot::City => &["seattle", "portland", "boise", "denver", "tacoma"],
        Slot::Date => &["tonight", "tomorrow", "friday", "saturday", "sunday"],
        Slot::Theater => &[
            "grand_plaza",
            "cinema_royal",
            "north_park",
            "riverside_6",
            "majestic_twin",
            "orpheum",
        ],
        Slot::NumberOfPeople => &["1", "2", "3", "4"],
        Slot::StartTime => &["11am", "2pm", "4pm", "6pm", "8pm", "10pm"],
        Slot::VideoFormat => &["standard", "3d", "imax"],
        Slot::TheaterChain => &["amc", "regal", "cinemark", "landmark"],
        _ => &[],
    }
}

/// One bookable showing: a value for every goal-relevant slot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KbRow {
    pub values: BTreeMap<Slot, String>,
}

impl KbRow {
    pub fn get(&self, slot: Slot) -> Option<&str> {
        self.values.get(&slot).map(String::as_str)
    }

    /// True when this row agrees with every (slot, value) constraint.
    pub fn satisfies(&self, constraints: &BTreeMap<Slot, String>) -> bool {
        constraints
            .iter()
            .all(|(slot, value)| self.get(*slot) == Some(value.as_str()))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KnowledgeBase {
    pub version: u32,
    pub seed: u64,
    pub rows: Vec<KbRow>,
}

impl KnowledgeBase {
    /// Deterministically synthesizes `n_rows` showings from the fixed
    /// per-slot vocabularies.
    pub fn generate(seed: u64, n_rows: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::with_capacity(n_rows);
        for _ in 0..n_rows {
            let mut values = BTreeMap::new();
            for slot in GOAL_SLOTS {
                let vocab = vocabulary_for(slot);
                let value = vocab[rng.random_range(0..vocab.len())];
                values.insert(slot, value.to_string());
            }
            rows.push(KbRow { values });
        }
        Self {
            version: KB_FORMAT_VERSION,
            seed,
            rows,
        }
    }

    /// Distinct values present for a slot, in first-seen order.
    pub fn vocabulary(&self, slot: Slot) -> Vec<&str> {
        let mut seen = Vec::new();
        for row in &self.rows {
            if let Some(v) = row.get(slot) {
                if !seen.contains(&v) {
                    seen.push(v);
                }
            }
        }
        seen
    }

    /// First row (lowest index) satisfying every constraint. This is the
    /// greedy lookup behind agent inform values and ticket booking.
    pub fn first_consistent(&self, constraints: &BTreeMap<Slot, String>) -> Option<(usize, &KbRow)> {
        self.rows
            .iter()
            .enumerate()
            .find(|(_, row)| row.satisfies(constraints))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Config(format!("serialize knowledge base: {e}")))?;
        fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let json = fs::read_to_string(path)?;
        let kb: Self = serde_json::from_str(&json)
            .map_err(|e| Error::Config(format!("parse knowledge base: {e}")))?;
        if kb.version != KB_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "unsupported knowledge base version {}",
                kb.version
            )));
        }
        Ok(kb)
    }
}
