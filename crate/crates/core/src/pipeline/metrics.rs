//! Metrics rows and their delimited-text renderings.
//!
//! `runs.csv` carries one row per (variant, seed, epoch); `summary.csv`
//! averages eval points over seeds; `categories.csv` is the final
//! per-category table and `category_success.csv` its Fig.-5-style ranked
//! form (success ascending). All renderings are deterministic functions of
//! the run results, so identical runs produce byte-identical files.

use serde::{Deserialize, Serialize};

use crate::config::VariantKind;
use crate::domain::goal::GOAL_CATEGORIES;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalStats {
    pub success_rate: f64,
    pub avg_reward: f64,
    pub avg_turns: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwitcherEpochStats {
    pub mean_real_score: Option<f64>,
    pub mean_sim_score: Option<f64>,
    pub planning_dialogues: usize,
    pub stored_sim_turns: usize,
    pub gate_closed: bool,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub eval: Option<EvalStats>,
    pub real_dialogues: u64,
    pub sim_dialogues: u64,
    pub real_dialogues_total: u64,
    pub sim_dialogues_total: u64,
    pub real_transitions_total: u64,
    pub sim_transitions_total: u64,
    pub validation_dialogues_total: u64,
    pub updates_total: u64,
    pub mean_agent_loss: Option<f64>,
    pub switcher: Option<SwitcherEpochStats>,
}

/// One complete training run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunResult {
    pub variant: VariantKind,
    pub seed: u64,
    pub epochs: Vec<EpochMetrics>,
    /// Final per-category (failure rate, sample count).
    pub categories: Vec<(f64, u64)>,
    pub policy: crate::nn::Checkpoint,
}

fn opt(value: Option<f64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

pub const RUNS_HEADER: &str = "variant,seed,epoch,success,reward,turns,real_dialogues,sim_dialogues,real_dialogues_total,sim_dialogues_total,real_transitions_total,sim_transitions_total,validation_dialogues_total,updates_total,agent_loss,switcher_real_score,switcher_sim_score,planning_dialogues,stored_sim_turns,gate_closed,threshold";

/// One row per epoch per run, keyed by both epoch and cumulative update
/// count.
pub fn render_runs_csv(runs: &[RunResult]) -> String {
    let mut out = String::from(RUNS_HEADER);
    out.push('\n');
    for run in runs {
        for m in &run.epochs {
            let (s, r, t) = match &m.eval {
                Some(e) => (
                    e.success_rate.to_string(),
                    e.avg_reward.to_string(),
                    e.avg_turns.to_string(),
                ),
                None => (String::new(), String::new(), String::new()),
            };
            let (sw_r, sw_s, pd, st, gc, tau) = match &m.switcher {
                Some(sw) => (
                    opt(sw.mean_real_score),
                    opt(sw.mean_sim_score),
                    sw.planning_dialogues.to_string(),
                    sw.stored_sim_turns.to_string(),
                    sw.gate_closed.to_string(),
                    sw.threshold.to_string(),
                ),
                None => (
                    String::new(),
                    String::new(),
                    m.sim_dialogues.to_string(),
                    String::new(),
                    String::new(),
                    String::new(),
                ),
            };
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                run.variant,
                run.seed,
                m.epoch,
                s,
                r,
                t,
                m.real_dialogues,
                m.sim_dialogues,
                m.real_dialogues_total,
                m.sim_dialogues_total,
                m.real_transitions_total,
                m.sim_transitions_total,
                m.validation_dialogues_total,
                m.updates_total,
                opt(m.mean_agent_loss),
                sw_r,
                sw_s,
                pd,
                st,
                gc,
                tau
            ));
        }
    }
    out
}

/// Mean success/reward/turns over seeds at every evaluated epoch.
pub fn render_summary_csv(runs: &[RunResult]) -> String {
    let mut out = String::from("variant,epoch,updates_total,mean_success,mean_reward,mean_turns,seeds\n");
    let mut variants: Vec<VariantKind> = runs.iter().map(|r| r.variant).collect();
    variants.sort();
    variants.dedup();
    for variant in variants {
        let of_variant: Vec<&RunResult> = runs.iter().filter(|r| r.variant == variant).collect();
        let epochs: Vec<usize> = of_variant
            .first()
            .map(|r| {
                r.epochs
                    .iter()
                    .filter(|m| m.eval.is_some())
                    .map(|m| m.epoch)
                    .collect()
            })
            .unwrap_or_default();
        for epoch in epochs {
            let mut success = 0.0;
            let mut reward = 0.0;
            let mut turns = 0.0;
            let mut updates = 0u64;
            let mut n = 0usize;
            for run in &of_variant {
                if let Some(m) = run.epochs.iter().find(|m| m.epoch == epoch) {
                    if let Some(e) = &m.eval {
                        success += e.success_rate;
                        reward += e.avg_reward;
                        turns += e.avg_turns;
                        updates = m.updates_total;
                        n += 1;
                    }
                }
            }
            if n > 0 {
                let k = n as f64;
                out.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    variant,
                    epoch,
                    updates,
                    success / k,
                    reward / k,
                    turns / k,
                    n
                ));
            }
        }
    }
    out
}

/// Final per-category failure statistics, one row per (run, category).
pub fn render_categories_csv(runs: &[RunResult]) -> String {
    let mut out = String::from("variant,seed,category,failure_rate,count\n");
    for run in runs {
        for (category, (f, n)) in run.categories.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                run.variant, run.seed, category, f, n
            ));
        }
    }
    out
}

/// Per-variant ranked success table over the 128 categories (ascending
/// success, seed-averaged): the Fig.-5 shape.
pub fn render_category_success_csv(runs: &[RunResult]) -> String {
    let mut out = String::from("variant,rank,category,success_rate\n");
    let mut variants: Vec<VariantKind> = runs.iter().map(|r| r.variant).collect();
    variants.sort();
    variants.dedup();
    for variant in variants {
        let of_variant: Vec<&RunResult> = runs.iter().filter(|r| r.variant == variant).collect();
        let mut rows: Vec<(usize, f64)> = (0..GOAL_CATEGORIES)
            .map(|c| {
                let mean_failure: f64 = of_variant
                    .iter()
                    .filter_map(|r| r.categories.get(c).map(|(f, _)| *f))
                    .sum::<f64>()
                    / of_variant.len() as f64;
                (c, 1.0 - mean_failure)
            })
            .collect();
        rows.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
        for (rank, (category, success)) in rows.iter().enumerate() {
            out.push_str(&format!("{variant},{rank},{category},{success}\n"));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Checkpoint;

    fn dummy_run(variant: VariantKind, seed: u64, success: f64) -> RunResult {
        RunResult {
            variant,
            seed,
            epochs: vec![EpochMetrics {
                epoch: 5,
                eval: Some(EvalStats {
                    success_rate: success,
                    avg_reward: 10.0,
                    avg_turns: 12.0,
                }),
                real_dialogues: 1,
                sim_dialogues: 0,
                real_dialogues_total: 5,
                sim_dialogues_total: 0,
                real_transitions_total: 45,
                sim_transitions_total: 0,
                validation_dialogues_total: 80,
                updates_total: 3200,
                mean_agent_loss: Some(1.25),
                switcher: None,
            }],
            categories: (0..GOAL_CATEGORIES)
                .map(|c| (c as f64 / GOAL_CATEGORIES as f64, 10))
                .collect(),
            policy: Checkpoint {
                version: 1,
                arrays: vec![],
            },
        }
    }

    #[test]
    fn summary_averages_over_seeds() {
        let runs = vec![
            dummy_run(VariantKind::Dqn, 1, 0.4),
            dummy_run(VariantKind::Dqn, 2, 0.6),
        ];
        let summary = render_summary_csv(&runs);
        let line = summary.lines().nth(1).unwrap();
        assert!(line.starts_with("dqn,5,3200,0.5,10,12,2"), "{line}");
    }

    #[test]
    fn category_table_has_128_ascending_rows_per_variant() {
        let runs = vec![dummy_run(VariantKind::SwitchDdq, 1, 0.5)];
        let table = render_category_success_csv(&runs);
        let lines: Vec<&str> = table.lines().skip(1).collect();
        assert_eq!(lines.len(), GOAL_CATEGORIES);
        let mut last = -1.0;
        for line in lines {
            let success: f64 = line.split(',').nth(3).unwrap().parse().unwrap();
            assert!(success >= last);
            last = success;
        }
    }

    #[test]
    fn renderings_are_deterministic() {
        let runs = vec![
            dummy_run(VariantKind::SwitchDdq, 1, 0.5),
            dummy_run(VariantKind::Dqn, 1, 0.3),
        ];
        assert_eq!(render_runs_csv(&runs), render_runs_csv(&runs));
        assert_eq!(render_summary_csv(&runs), render_summary_csv(&runs));
        assert_eq!(render_categories_csv(&runs), render_categories_csv(&runs));
    }
}
