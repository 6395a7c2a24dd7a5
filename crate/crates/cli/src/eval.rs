//! `eval`: nMAE of a prediction directory against ground truth.

use std::path::{Path, PathBuf};

use anyhow::Context as _;
use nspregen::evaluator::nmae;
use nspregen::trajio::{read_trajectory, write_atomic, Channel, Trajectory};

use crate::error::{usage, CmdResult, Failure, ResultExt};
use crate::Context;

#[derive(Debug, clap::Args)]
pub struct EvalArgs {
    /// Directory of predicted NST1 files.
    pub pred_dir: PathBuf,
    /// Directory of ground-truth NST1 files, paired with predictions by id.
    pub truth_dir: PathBuf,
    /// Scored channels.
    #[arg(long, value_delimiter = ',', default_value = "u,v,p")]
    pub channels: Vec<String>,
    /// Also write the report to this file.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

/// Every `.nst` file below `dir`, sorted by path.
pub fn nst_files(dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d)? {
            let path = entry?.path();
            if path.is_dir() {
                stack.push(path);
            } else if path.extension().is_some_and(|e| e == "nst") {
                out.push(path);
            }
        }
    }
    out.sort();
    Ok(out)
}

fn load_dir(dir: &Path) -> Result<Vec<Trajectory>, Failure> {
    let files = nst_files(dir)
        .with_context(|| format!("cannot list {}", dir.display()))
        .usage()?;
    if files.is_empty() {
        return Err(usage(format!("no .nst files in {}", dir.display())));
    }
    files
        .iter()
        .map(|p| read_trajectory(p).with_context(|| format!("reading {}", p.display())).runtime())
        .collect()
}

pub fn eval(ctx: &Context, args: EvalArgs) -> CmdResult {
    let channels = args
        .channels
        .iter()
        .map(|c| c.parse::<Channel>())
        .collect::<Result<Vec<_>, _>>()
        .usage()?;
    let pred = load_dir(&ctx.config.resolve(&args.pred_dir))?;
    let truth = load_dir(&ctx.config.resolve(&args.truth_dir))?;
    let report = nmae(&pred, &truth, Some(&channels)).runtime()?;
    let json = serde_json::to_string_pretty(&report).runtime()?;
    if let Some(path) = &args.report {
        write_atomic(&ctx.config.resolve(path), json.as_bytes()).runtime()?;
    }
    println!("{json}");
    Ok(())
}
