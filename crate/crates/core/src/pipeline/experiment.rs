//! Experiment fan-out: (variant x seed) runs in parallel, merged into a
//! deterministic learning-curve table.

use rayon::prelude::*;

use crate::config::{RunConfig, VariantKind};
use crate::domain::goal::GoalCorpus;
use crate::domain::kb::KnowledgeBase;
use crate::error::Result;
use crate::nn::Checkpoint;
use crate::pipeline::metrics::RunResult;
use crate::pipeline::Trainer;

/// Everything a finished experiment produced. Runs are sorted by (variant
/// label, seed) so renderings do not depend on scheduling.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub kb: KnowledgeBase,
    pub corpus: GoalCorpus,
    pub runs: Vec<RunResult>,
}

/// Trains every (variant, seed) pair in the config. Each run owns its
/// state and RNG stream, so parallel execution is exactly reproducible.
pub fn run_experiment(cfg: &RunConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let kb = KnowledgeBase::generate(cfg.kb_seed, cfg.kb_rows);
    let corpus = GoalCorpus::generate(&kb, cfg.corpus_seed, cfg.corpus_size)?;

    let pairs: Vec<(VariantKind, u64)> = cfg
        .variants
        .iter()
        .flat_map(|&v| cfg.seeds.iter().map(move |&s| (v, s)))
        .collect();

    let mut runs = pairs
        .par_iter()
        .map(|&(variant, seed)| run_single(cfg, variant, seed, &kb, &corpus))
        .collect::<Result<Vec<RunResult>>>()?;
    runs.sort_by(|a, b| a.variant.label().cmp(&b.variant.label()).then(a.seed.cmp(&b.seed)));

    Ok(ExperimentOutput { kb, corpus, runs })
}

/// One full training run.
pub fn run_single(
    cfg: &RunConfig,
    variant: VariantKind,
    seed: u64,
    kb: &KnowledgeBase,
    corpus: &GoalCorpus,
) -> Result<RunResult> {
    let mut trainer = Trainer::new(cfg, variant, kb, corpus, seed)?;
    let mut epochs = Vec::with_capacity(cfg.max_epochs);
    for e in 0..cfg.max_epochs {
        let evaluated = (e + 1) % cfg.eval_interval == 0 || e + 1 == cfg.max_epochs;
        epochs.push(trainer.run_epoch(evaluated)?);
    }
    let policy = Checkpoint::capture(&trainer.q)?;
    Ok(RunResult {
        variant,
        seed,
        epochs,
        categories: trainer.category_snapshot(),
        policy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::metrics::render_runs_csv;

    #[test]
    fn smoke_experiment_is_reproducible() {
        let cfg = RunConfig {
            variants: vec![VariantKind::Dqn, VariantKind::SwitchDdq],
            seeds: vec![1],
            max_epochs: 2,
            eval_interval: 1,
            eval_dialogues: 4,
            corpus_size: 128,
            agent_train_steps: 2,
            world_train_steps: 2,
            switcher_train_steps: 1,
            rbs_dialogues: 3,
            validation_dialogues: 2,
            max_planning_dialogues: 3,
            ..RunConfig::default()
        };
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(render_runs_csv(&a.runs), render_runs_csv(&b.runs));
        assert_eq!(a.runs.len(), 2);
        for run in &a.runs {
            assert_eq!(run.epochs.len(), 2);
            assert!(run.epochs.iter().all(|m| m.eval.is_some()));
        }
    }
}
