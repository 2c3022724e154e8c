//! `ddq export`: re-render the metrics tables from a saved experiment.
//! Re-exporting identical runs produces byte-identical files.

use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use switch_ddq::pipeline::metrics::{
    render_categories_csv, render_category_success_csv, render_runs_csv, render_summary_csv,
    RunResult,
};

#[derive(Args, Debug)]
pub struct ExportArgs {
    /// runs.json written by `ddq train`.
    #[arg(long)]
    pub runs: PathBuf,

    /// Output directory for the rendered tables.
    #[arg(long, env = "DDQ_OUT_DIR", default_value = "runs")]
    pub out: PathBuf,
}

pub fn run(args: ExportArgs) -> Result<()> {
    let text = fs::read_to_string(&args.runs)
        .with_context(|| format!("reading {}", args.runs.display()))?;
    let runs: Vec<RunResult> =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", args.runs.display()))?;
    fs::create_dir_all(&args.out)?;
    fs::write(args.out.join("runs.csv"), render_runs_csv(&runs))?;
    fs::write(args.out.join("summary.csv"), render_summary_csv(&runs))?;
    fs::write(args.out.join("categories.csv"), render_categories_csv(&runs))?;
    fs::write(
        args.out.join("category_success.csv"),
        render_category_success_csv(&runs),
    )?;
    println!("exported {} runs to {}", runs.len(), args.out.display());
    Ok(())
}
