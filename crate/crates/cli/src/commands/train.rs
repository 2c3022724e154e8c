//! `ddq train`: configuration merging, experiment launch, metrics output.

use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use switch_ddq::config::{RunConfig, VariantKind};
use switch_ddq::nn;
use switch_ddq::pipeline::{self, metrics};

use super::variant_slug;

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// TOML config file; command-line flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Output directory for metrics, checkpoints, and the effective config.
    #[arg(long, env = "DDQ_OUT_DIR", default_value = "runs")]
    pub out: PathBuf,

    /// Comma-separated variants: dqn, dqn(K), ddq(K), switch-ddq, su-ddq.
    #[arg(long, value_delimiter = ',')]
    pub variants: Option<Vec<String>>,

    /// Comma-separated RNG seeds, one training run per seed per variant.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,

    #[arg(long)]
    pub epochs: Option<usize>,

    #[arg(long)]
    pub eval_interval: Option<usize>,

    #[arg(long)]
    pub eval_dialogues: Option<usize>,

    #[arg(long)]
    pub gamma: Option<f64>,

    #[arg(long)]
    pub learning_rate: Option<f64>,

    /// Exploration rate for epsilon-greedy action selection.
    #[arg(long)]
    pub epsilon: Option<f64>,

    #[arg(long)]
    pub batch_size: Option<usize>,

    #[arg(long)]
    pub kb_seed: Option<u64>,

    #[arg(long)]
    pub kb_rows: Option<usize>,

    #[arg(long)]
    pub corpus_seed: Option<u64>,

    #[arg(long)]
    pub corpus_size: Option<usize>,

    #[arg(long)]
    pub rbs_dialogues: Option<usize>,

    #[arg(long)]
    pub max_planning_dialogues: Option<usize>,

    #[arg(long)]
    pub validation_dialogues: Option<usize>,

    #[arg(long)]
    pub tau_lo: Option<f64>,

    #[arg(long)]
    pub tau_hi: Option<f64>,

    #[arg(long)]
    pub anneal_epochs: Option<usize>,
}

/// Defaults, overridden by the config file, overridden by flags.
pub fn effective_config(args: &TrainArgs) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?
        }
        None => RunConfig::default(),
    };
    if let Some(variants) = &args.variants {
        cfg.variants = variants
            .iter()
            .map(|v| v.parse::<VariantKind>())
            .collect::<switch_ddq::Result<_>>()?;
    }
    if let Some(v) = &args.seeds {
        cfg.seeds = v.clone();
    }
    if let Some(v) = args.epochs {
        cfg.max_epochs = v;
    }
    if let Some(v) = args.eval_interval {
        cfg.eval_interval = v;
    }
    if let Some(v) = args.eval_dialogues {
        cfg.eval_dialogues = v;
    }
    if let Some(v) = args.gamma {
        cfg.gamma = v;
    }
    if let Some(v) = args.learning_rate {
        cfg.learning_rate = v;
    }
    if let Some(v) = args.epsilon {
        cfg.epsilon = v;
    }
    if let Some(v) = args.batch_size {
        cfg.batch_size = v;
    }
    if let Some(v) = args.kb_seed {
        cfg.kb_seed = v;
    }
    if let Some(v) = args.kb_rows {
        cfg.kb_rows = v;
    }
    if let Some(v) = args.corpus_seed {
        cfg.corpus_seed = v;
    }
    if let Some(v) = args.corpus_size {
        cfg.corpus_size = v;
    }
    if let Some(v) = args.rbs_dialogues {
        cfg.rbs_dialogues = v;
    }
    if let Some(v) = args.max_planning_dialogues {
        cfg.max_planning_dialogues = v;
    }
    if let Some(v) = args.validation_dialogues {
        cfg.validation_dialogues = v;
    }
    if let Some(v) = args.tau_lo {
        cfg.tau_lo = v;
    }
    if let Some(v) = args.tau_hi {
        cfg.tau_hi = v;
    }
    if let Some(v) = args.anneal_epochs {
        cfg.anneal_epochs = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn run(args: TrainArgs) -> Result<()> {
    let cfg = effective_config(&args)?;
    fs::create_dir_all(&args.out)?;
    fs::write(
        args.out.join("effective_config.toml"),
        toml::to_string_pretty(&cfg)?,
    )?;

    let output = pipeline::run_experiment(&cfg)?;
    write_outputs(&args.out, &output)?;

    println!("trained {} runs into {}", output.runs.len(), args.out.display());
    for run in &output.runs {
        let last = run.epochs.iter().rev().find_map(|m| m.eval.as_ref());
        if let Some(eval) = last {
            println!(
                "  {:<10} seed {}  success {:.3}  reward {:>7.2}  turns {:>5.2}",
                run.variant.label(),
                run.seed,
                eval.success_rate,
                eval.avg_reward,
                eval.avg_turns
            );
        }
    }
    Ok(())
}

pub fn write_outputs(out: &std::path::Path, output: &pipeline::ExperimentOutput) -> Result<()> {
    output.kb.save(out.join("kb.json"))?;
    output.corpus.save(out.join("goals.json"))?;
    fs::write(out.join("runs.csv"), metrics::render_runs_csv(&output.runs))?;
    fs::write(
        out.join("summary.csv"),
        metrics::render_summary_csv(&output.runs),
    )?;
    fs::write(
        out.join("categories.csv"),
        metrics::render_categories_csv(&output.runs),
    )?;
    fs::write(
        out.join("category_success.csv"),
        metrics::render_category_success_csv(&output.runs),
    )?;
    fs::write(out.join("runs.json"), serde_json::to_string(&output.runs)?)?;
    for run in &output.runs {
        let path = out.join(format!("policy_{}_s{}.json", variant_slug(run.variant), run.seed));
        let json = serde_json::to_string(&run.policy)?;
        fs::write(path, json)?;
    }
    Ok(())
}

// Checkpoint sanity used by evaluate/chat: fail early when a checkpoint was
// produced by a different architecture.
pub fn load_policy(path: &std::path::Path) -> Result<nn::DenseNet> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
    let mut net = switch_ddq::agent::new_q_network(&mut rng);
    nn::load_checkpoint(&mut net, path)
        .with_context(|| format!("loading policy checkpoint {}", path.display()))?;
    Ok(net)
}

use rand::SeedableRng;
