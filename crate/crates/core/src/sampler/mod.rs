//! Active user-goal sampling.
//!
//! Per-category failure statistics accumulate over all validation dialogues
//! ever seen (counts are pre-filled at 5 so the exploration width is always
//! defined). To pick a category, one Gaussian is drawn per category with
//! mean f_i and standard deviation sqrt(k * ln N / n_i); the argmax wins,
//! so high failure rates and thin evidence both attract simulated practice.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::domain::goal::{GoalCorpus, UserGoal, GOAL_CATEGORIES};
use crate::domain::reward::DialogueStatus;
use crate::error::{Error, Result};

/// Pre-fill for every per-category count.
pub const PREFILL_COUNT: u64 = 5;

#[derive(Debug, Clone)]
pub struct CategoryStats {
    failures: Vec<u64>,
    counts: Vec<u64>,
}

impl Default for CategoryStats {
    fn default() -> Self {
        Self::new()
    }
}

impl CategoryStats {
    pub fn new() -> Self {
        Self::with_categories(GOAL_CATEGORIES)
    }

    pub fn with_categories(k: usize) -> Self {
        assert!(k > 0);
        Self {
            failures: vec![0; k],
            counts: vec![PREFILL_COUNT; k],
        }
    }

    pub fn categories(&self) -> usize {
        self.counts.len()
    }

    /// Total sample count N (prefill included).
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn count(&self, category: usize) -> u64 {
        self.counts[category]
    }

    /// Failure rate f_i; prefill pseudo-counts count as successes.
    pub fn failure_rate(&self, category: usize) -> f64 {
        self.failures[category] as f64 / self.counts[category] as f64
    }

    /// Records one validation outcome. Statistics are cumulative across
    /// epochs.
    pub fn update(&mut self, category: usize, status: DialogueStatus) -> Result<()> {
        if category >= self.counts.len() {
            return Err(Error::Config(format!(
                "category {category} out of range (k = {})",
                self.counts.len()
            )));
        }
        self.counts[category] += 1;
        if status == DialogueStatus::Failure {
            self.failures[category] += 1;
        }
        Ok(())
    }

    /// Exploration width sqrt(k * ln N / n_i).
    pub fn sigma(&self, category: usize) -> f64 {
        let k = self.categories() as f64;
        let n_total = self.total() as f64;
        (k * n_total.ln() / self.counts[category] as f64).sqrt()
    }

    /// Draws p_i ~ Normal(f_i, sigma_i) for every category and returns the
    /// argmax (lowest index on exact ties).
    pub fn sample_category<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let mut best = 0;
        let mut best_value = f64::NEG_INFINITY;
        for i in 0..self.categories() {
            let normal = Normal::new(self.failure_rate(i), self.sigma(i))
                .expect("prefill keeps sigma finite and positive");
            let p = normal.sample(rng);
            if p > best_value {
                best_value = p;
                best = i;
            }
        }
        best
    }
}

/// How the next simulated goal's category is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GoalSampling {
    /// Gaussian-perturbed failure rates (the active strategy).
    Active,
    /// Uniform over categories (the SU ablation).
    Uniform,
}

/// Picks a category by the chosen strategy, then a goal uniformly from that
/// category's bucket. An empty bucket falls back to a uniform draw over the
/// whole corpus (with a logged warning).
pub fn sample_goal<R: Rng + ?Sized>(
    stats: &CategoryStats,
    corpus: &GoalCorpus,
    buckets: &[Vec<usize>],
    mode: GoalSampling,
    rng: &mut R,
) -> UserGoal {
    let category = match mode {
        GoalSampling::Active => stats.sample_category(rng),
        GoalSampling::Uniform => rng.random_range(0..stats.categories()),
    };
    if let Some(bucket) = buckets.get(category).filter(|b| !b.is_empty()) {
        let idx = bucket[rng.random_range(0..bucket.len())];
        corpus.goals[idx].clone()
    } else {
        log::warn!("goal category {category} has no corpus entries; sampling uniformly");
        corpus.goals[rng.random_range(0..corpus.goals.len())].clone()
    }
}
