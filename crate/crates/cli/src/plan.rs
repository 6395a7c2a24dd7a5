//! `plan`: manifests and savings tables.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::Context as _;
use nspregen::cost::{aggregate_costs, fit_cost_model, read_cost_csv, CostModel, CostTable};
use nspregen::physics::FlowKind;
use nspregen::planner::{
    alpha_sweep_manifest_with, budget_augmentation_plan, budget_manifests, compute_savings_ratio,
    default_augmentation_grid, total_cost, AxisSpec, DatasetManifest, MixFraction, DEFAULT_ALPHAS,
};
use nspregen::trajio::write_atomic;
use nspregen::{Axis, Tier};

use crate::error::{usage, CmdResult, Failure, ResultExt};
use crate::run::{parse_axis, parse_kind};
use crate::Context;

/// Published savings of the 90/10 substitution, shown for comparison.
const REFERENCE_SAVINGS: f64 = 8.9;
const CANONICAL_N: usize = 800;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Mode {
    Alpha,
    Budget,
}

#[derive(Debug, clap::Args)]
pub struct PlanArgs {
    /// Cost CSV from `profile` (records or aggregated table).
    #[arg(long)]
    pub costs: PathBuf,
    #[arg(long, value_enum)]
    pub mode: Mode,
    #[arg(long, value_parser = parse_axis, default_value = "physics")]
    pub axis: Axis,
    #[arg(long, value_parser = parse_kind)]
    pub kind: Option<FlowKind>,
    /// Training-set size of each alpha manifest.
    #[arg(long, default_value_t = CANONICAL_N)]
    pub n: usize,
    /// Hard fractions; defaults to the built-in sweep grid.
    #[arg(long, value_delimiter = ',')]
    pub alphas: Vec<f64>,
    /// Tier mixed with the hard tier in alpha mode.
    #[arg(long, value_parser = parse_tier, default_value = "easy")]
    pub lower: Tier,
    /// Budget in seconds (budget mode).
    #[arg(long)]
    pub budget: Option<f64>,
    /// Augmentation tier (budget mode).
    #[arg(long, value_parser = parse_tier, default_value = "easy")]
    pub tier: Tier,
    /// Augmentation counts; defaults to powers of two up to 3200.
    #[arg(long, value_delimiter = ',')]
    pub grid: Vec<u64>,
    /// Directory for manifests and the savings table.
    #[arg(long, default_value = "plans")]
    pub dir: PathBuf,
}

fn parse_tier(s: &str) -> Result<Tier, String> {
    s.parse::<Tier>().map_err(|e| e.to_string())
}

/// Reads either per-simulation records or an aggregated table.
pub fn load_cost_table(path: &Path) -> Result<CostTable, Failure> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read cost CSV {}", path.display()))
        .usage()?;
    let header = text.lines().next().unwrap_or_default();
    if header.split(',').any(|h| h.trim() == "mean_seconds") {
        CostTable::from_csv_reader(text.as_bytes()).usage()
    } else {
        let records = read_cost_csv(path).usage()?;
        aggregate_costs(&records).usage()
    }
}

fn write_manifests(dir: &Path, ms: &[DatasetManifest]) -> Result<(), Failure> {
    for m in ms {
        let path = dir.join(format!("{}.json", m.name));
        write_atomic(&path, m.to_json().as_bytes())
            .with_context(|| format!("cannot write {}", path.display()))
            .runtime()?;
    }
    Ok(())
}

/// All-hard manifest of the same training size as `m`.
fn all_hard_like(m: &DatasetManifest) -> DatasetManifest {
    let mut r = m.clone();
    let n = m.train_count();
    r.entries.truncate(1);
    r.entries[0].tier = Tier::Hard;
    r.entries[0].count = n;
    r
}

/// Savings of replacing 90% of an 800-example hard set with easy examples.
fn canonical_line(model: &CostModel, axis: Axis, kind: FlowKind, spec: &AxisSpec) -> Result<String, Failure> {
    let alphas = [0.10, 1.0].map(|a| MixFraction::new(a).expect("valid fraction"));
    let ms = alpha_sweep_manifest_with(CANONICAL_N, &alphas, Tier::Easy, Tier::Hard, axis, kind, 0, spec).runtime()?;
    let ratio = compute_savings_ratio(&ms[1], &ms[0], model);
    Ok(format!(
        "90/10 easy/hard on the {axis} axis (n={CANONICAL_N}): savings {ratio:.3}x (reference {REFERENCE_SAVINGS}x)"
    ))
}

pub fn plan(ctx: &Context, args: PlanArgs) -> CmdResult {
    let cfg = &ctx.config;
    let table = load_cost_table(&cfg.resolve(&args.costs))?;
    let model = fit_cost_model(&table, args.axis).usage()?;
    let kind = args.kind.unwrap_or(cfg.kind);
    let spec = cfg.axes.get(args.axis);
    let dir = cfg.resolve(&args.dir);
    let mut out = String::new();

    match args.mode {
        Mode::Alpha => {
            let alphas = if args.alphas.is_empty() { DEFAULT_ALPHAS.to_vec() } else { args.alphas };
            let alphas = alphas.into_iter().map(MixFraction::new).collect::<Result<Vec<_>, _>>().usage()?;
            let ms = alpha_sweep_manifest_with(args.n, &alphas, args.lower, Tier::Hard, args.axis, kind, cfg.seed, spec)
                .usage()?;
            write_manifests(&dir, &ms)?;
            writeln!(out, "name,alpha,hard,lower,cost_seconds,savings").unwrap();
            for (m, a) in ms.iter().zip(&alphas) {
                let ratio = compute_savings_ratio(&all_hard_like(m), m, &model);
                writeln!(
                    out,
                    "{},{:.2},{},{},{:.3},{:.4}",
                    m.name,
                    a.value(),
                    m.count_for(Tier::Hard),
                    m.count_for(args.lower),
                    total_cost(m, &model),
                    ratio
                )
                .unwrap();
            }
        }
        Mode::Budget => {
            let budget = args.budget.ok_or_else(|| usage("--budget is required in budget mode"))?;
            let grid = if args.grid.is_empty() { default_augmentation_grid() } else { args.grid };
            let bp = budget_augmentation_plan(&model, budget, args.tier, &grid).usage()?;
            let ms = budget_manifests(&bp, args.axis, kind, cfg.seed, spec);
            write_manifests(&dir, &ms)?;
            let json = serde_json::to_string_pretty(&bp).runtime()?;
            write_atomic(&dir.join("budget-plan.json"), json.as_bytes()).runtime()?;
            writeln!(out, "name,augmentation,cost_seconds,budget_seconds,savings").unwrap();
            for m in &ms {
                writeln!(
                    out,
                    "{},{},{:.3},{:.3},{:.4}",
                    m.name,
                    m.entries[1].count,
                    total_cost(m, &model),
                    budget,
                    compute_savings_ratio(&all_hard_like(m), m, &model)
                )
                .unwrap();
            }
        }
    }
    let table_path = dir.join(format!("savings-{}.csv", if args.mode == Mode::Alpha { "alpha" } else { "budget" }));
    write_atomic(&table_path, out.as_bytes()).runtime()?;
    print!("{out}");
    println!("{}", canonical_line(&model, args.axis, kind, spec)?);
    Ok(())
}
