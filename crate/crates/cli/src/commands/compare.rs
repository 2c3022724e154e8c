//! `ddq compare`: one-sided two-sample permutation test over human-eval
//! logs.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use switch_ddq::stats::{permutation_test_with, statistic, PermutationMethod};

#[derive(Args, Debug)]
pub struct CompareArgs {
    /// Human-eval log (JSON lines with a `success` field) for side A.
    #[arg(long)]
    pub a: PathBuf,

    /// Human-eval log for side B.
    #[arg(long)]
    pub b: PathBuf,

    /// Monte Carlo iterations (used when the pooled size exceeds the exact
    /// threshold and --exact is not set).
    #[arg(long, default_value_t = 100_000)]
    pub iterations: usize,

    /// Force exact enumeration over all label splits.
    #[arg(long)]
    pub exact: bool,

    /// Seed for the Monte Carlo permutations.
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
}

fn read_successes(path: &Path) -> Result<Vec<bool>> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading log {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(line)
            .with_context(|| format!("{}:{} is not JSON", path.display(), i + 1))?;
        let success = value
            .get("success")
            .and_then(|v| v.as_bool())
            .with_context(|| format!("{}:{} lacks a boolean `success`", path.display(), i + 1))?;
        out.push(success);
    }
    Ok(out)
}

pub fn run(args: CompareArgs) -> Result<()> {
    let a = read_successes(&args.a)?;
    let b = read_successes(&args.b)?;
    let method = if args.exact {
        PermutationMethod::Exact
    } else {
        PermutationMethod::Auto
    };
    let p = permutation_test_with(&a, &b, method, args.iterations, args.seed)?;
    let mean = |xs: &[bool]| xs.iter().filter(|&&x| x).count() as f64 / xs.len() as f64;
    println!(
        "A: {}/{} success ({:.4})   B: {}/{} success ({:.4})",
        a.iter().filter(|&&x| x).count(),
        a.len(),
        mean(&a),
        b.iter().filter(|&&x| x).count(),
        b.len(),
        mean(&b),
    );
    println!(
        "statistic mean(A)-mean(B) = {:.6}   one-sided p = {:.6e}",
        statistic(&a, &b),
        p
    );
    Ok(())
}
