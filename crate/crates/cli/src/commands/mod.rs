pub mod chat;
pub mod compare;
pub mod evaluate;
pub mod export;
pub mod train;

use std::path::Path;

use anyhow::{Context, Result};
use switch_ddq::config::VariantKind;
use switch_ddq::domain::{GoalCorpus, KnowledgeBase};

/// File-system-friendly variant tag: `ddq(5)` becomes `ddq5`.
pub fn variant_slug(variant: VariantKind) -> String {
    variant
        .label()
        .chars()
        .filter(|c| c.is_ascii_alphanumeric() || *c == '-')
        .collect()
}

pub fn load_world(kb_path: &Path, goals_path: &Path) -> Result<(KnowledgeBase, GoalCorpus)> {
    let kb = KnowledgeBase::load(kb_path)
        .with_context(|| format!("loading knowledge base from {}", kb_path.display()))?;
    let corpus = GoalCorpus::load(goals_path)
        .with_context(|| format!("loading goal corpus from {}", goals_path.display()))?;
    Ok((kb, corpus))
}
