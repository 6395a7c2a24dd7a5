//! `generate` and `profile`.

use std::path::PathBuf;

use anyhow::Context as _;
use nspregen::cost::{aggregate_costs, check_monotonicity, write_cost_csv};
use nspregen::physics::FlowKind;
use nspregen::planner::{materialize_manifest, profile_axis, DatasetManifest, MaterializeOptions, ProfileOptions};
use nspregen::trajio::write_atomic;
use nspregen::Axis;

use crate::error::{usage, CmdResult, ResultExt};
use crate::Context;

#[derive(Debug, clap::Args)]
pub struct GenerateArgs {
    /// Manifest JSON; updated in place with file references.
    pub manifest: PathBuf,
    /// Skip the held-out evaluation set.
    #[arg(long)]
    pub no_held_out: bool,
}

pub fn generate(ctx: &Context, args: GenerateArgs) -> CmdResult {
    let path = ctx.config.resolve(&args.manifest);
    let text = std::fs::read_to_string(&path)
        .with_context(|| format!("cannot read manifest {}", path.display()))
        .usage()?;
    let manifest = DatasetManifest::from_json(&text).usage()?;
    let opts = MaterializeOptions {
        out_dir: ctx.config.out.clone(),
        generation: ctx.config.generation(),
        workers: ctx.workers,
        include_held_out: !args.no_held_out,
        manifest_path: Some(path),
    };
    let report = materialize_manifest(&manifest, &opts).usage()?;
    let total = report.generated + report.skipped + report.failures.len();
    println!("manifest   {}", manifest.name);
    println!("files      {total}");
    println!("generated  {}", report.generated);
    println!("skipped    {}", report.skipped);
    println!("failures   {}", report.failures.len());
    println!("wall time  {:.2} s", report.wall_seconds);
    if report.generated == 0 && report.failures.is_empty() {
        println!("all files up to date; nothing simulated");
    }
    for f in &report.failures {
        eprintln!("failed {}: {}", f.path, f.error);
    }
    if report.failures.is_empty() {
        Ok(())
    } else {
        Err(anyhow::anyhow!("{} of {total} simulations failed", report.failures.len()).into())
    }
}

#[derive(Debug, clap::Args)]
pub struct ProfileArgs {
    #[arg(long, value_parser = parse_axis)]
    pub axis: Axis,
    /// Simulations per tier.
    #[arg(long, default_value_t = 30)]
    pub per_cell_n: usize,
    /// Flow kind; defaults to the configured one.
    #[arg(long, value_parser = parse_kind)]
    pub kind: Option<FlowKind>,
    /// Per-simulation records CSV; the table and report are written next to it.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

pub fn parse_axis(s: &str) -> Result<Axis, String> {
    s.parse::<Axis>().map_err(|e| e.to_string())
}

pub fn parse_kind(s: &str) -> Result<FlowKind, String> {
    s.parse::<FlowKind>().map_err(|e| e.to_string())
}

pub fn profile(ctx: &Context, args: ProfileArgs) -> CmdResult {
    if args.per_cell_n == 0 {
        return Err(usage("--per-cell-n must be at least 1"));
    }
    let cfg = &ctx.config;
    let records_path = cfg.resolve(&args.output.unwrap_or_else(|| PathBuf::from(format!("costs/{}.csv", args.axis))));
    let stem = records_path.with_extension("");
    let table_path = PathBuf::from(format!("{}-table.csv", stem.display()));
    let report_path = PathBuf::from(format!("{}-monotonicity.json", stem.display()));

    let mut opts = ProfileOptions::new(args.axis, args.kind.unwrap_or(cfg.kind), args.per_cell_n, cfg.seed);
    opts.spec = *cfg.axes.get(args.axis);
    let records = profile_axis(&opts, &cfg.generation(), |r| {
        log::info!("{} {} re {:.0} obstacles {} {:.2} s", r.axis, r.tier, r.re, r.obstacles, r.wall_seconds);
    })
    .map_err(|f| anyhow::anyhow!("{} (case {})", f.error, f.partial.sim_id))?;

    let table = aggregate_costs(&records).runtime()?;
    let mono = check_monotonicity(&table, args.axis).runtime()?;
    write_cost_csv(&records, &records_path).runtime()?;
    write_atomic(&table_path, table.to_csv_string().runtime()?.as_bytes()).runtime()?;
    let json = serde_json::to_string_pretty(&mono).runtime()?;
    write_atomic(&report_path, json.as_bytes()).runtime()?;

    println!("{:<8} {:>12} {:>10} {:>4}", "tier", "mean_s", "std_s", "n");
    for (&(_, tier), c) in &table.cells {
        println!("{:<8} {:>12.3} {:>10.3} {:>4}", tier, c.mean_seconds, c.std, c.n);
    }
    println!(
        "monotone {} (medium/easy {:.2}, hard/medium {:.2})",
        mono.monotone, mono.ratios[0], mono.ratios[1]
    );
    println!("records  {}", records_path.display());
    println!("table    {}", table_path.display());
    Ok(())
}
