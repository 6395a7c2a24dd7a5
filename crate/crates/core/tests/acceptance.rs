//! Acceptance suite: one pass/fail line per criterion.
//!
//! Run a subset by passing criterion numbers, e.g.
//! `cargo test --test acceptance -- 4 5`.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use nspregen::cost::{aggregate_costs, check_monotonicity, fit_cost_model};
use nspregen::evaluator::nmae;
use nspregen::geometry::{compute_sdf, rasterize_mask, sample_obstacles, ObstacleParams, ObstacleSet};
use nspregen::physics::{inlet_profile, schedule_end_time, BoundarySetup, FlowKind, FluidParams};
use nspregen::planner::{
    alpha_sweep_manifest, budget_augmentation_plan, compute_savings_ratio, default_augmentation_grid,
    materialize_manifest, profile_axis, tier_manifest, GenerationOptions, MaterializeOptions, MixFraction,
    ProfileOptions, DEFAULT_ALPHAS,
};
use nspregen::solver::{build_case, run_simulation, solve_pressure_poisson, SolverParams, Stepper};
use nspregen::trajio::{from_bytes, read_trajectory, to_bytes, Trajectory, TrajectoryMeta};
use nspregen::{Axis, Tier};
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = (u32, &'static str, fn() -> Outcome);

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn gen_opts(n: usize) -> GenerationOptions {
    GenerationOptions {
        solver: SolverParams { grid_dims: (n, n), ..Default::default() },
        ..Default::default()
    }
}

fn poiseuille() -> Outcome {
    let fluid = FluidParams::default();
    let b = BoundarySetup::from_re(FlowKind::Fpo, 100.0, &fluid);
    let solver = SolverParams { grid_dims: (128, 64), ..Default::default() };
    let case = build_case(&ObstacleSet::empty((2.0, 2.0), 0), b, fluid, solver).unwrap();
    let start = Instant::now();
    let (traj, _) = run_simulation(&case).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let (col, last) = (traj.cols / 2, traj.frames - 1);
    let mut worst = 0.0f64;
    for r in 0..traj.rows {
        let y = (r as f64 + 0.5) * 2.0 / traj.rows as f64;
        let exact = inlet_profile(b.speed, 2.0, y).unwrap();
        worst = worst.max((f64::from(traj.get(last, r, col, 0)) - exact).abs() / exact);
    }
    outcome(
        worst <= 0.05 && secs <= 300.0,
        format!("max relative error {worst:.2e} (limit 5e-2), run time {secs:.1} s (limit 300 s)"),
    )
}

fn divergence_suite() -> Outcome {
    let opts = gen_opts(64);
    let mut worst = 0.0f64;
    let mut frames = 0;
    let mut violations = 0;
    for i in 0..20 {
        let axis = Axis::ALL[i % 3];
        let tier = Tier::ALL[(i / 3) % 3];
        let kind = if i % 5 == 4 { FlowKind::Ldc } else { FlowKind::Fpo };
        let spec = nspregen::planner::AxisSpec::default_for(axis);
        let t = spec.tier(tier);
        let req = nspregen::planner::CaseRequest::draw(
            nspregen::planner::Role::Train,
            axis,
            tier,
            kind,
            2024,
            i,
            &t.re_band,
            t.obstacles,
        );
        let case = nspregen::planner::case_for_job(&req, &opts).unwrap();
        let (traj, _) = run_simulation(&case).unwrap();
        for &d in &traj.diagnostics.unwrap().max_scaled_divergence {
            frames += 1;
            worst = worst.max(d);
            if d > 1e-6 {
                violations += 1;
            }
        }
    }
    outcome(
        violations == 0 && frames == 400,
        format!("{frames} frames, {violations} above 1e-6, worst {worst:.2e}"),
    )
}

/// Vertical-centerline `u / u_lid` at the final frame, per cell row.
fn cavity_centerline(n: usize) -> Vec<f64> {
    let fluid = FluidParams::default();
    let b = BoundarySetup::from_re(FlowKind::Ldc, 100.0, &fluid);
    let solver = SolverParams { grid_dims: (n, n), ..Default::default() };
    let case = build_case(&ObstacleSet::empty((2.0, 2.0), 0), b, fluid, solver).unwrap();
    let (traj, _) = run_simulation(&case).unwrap();
    let last = traj.frames - 1;
    (0..n)
        .map(|r| 0.5 * f64::from(traj.get(last, r, n / 2 - 1, 0) + traj.get(last, r, n / 2, 0)) / b.speed)
        .collect()
}

fn cavity() -> Outcome {
    let coarse = cavity_centerline(64);
    let fine = cavity_centerline(128);
    // Fine cells 2r and 2r+1 straddle the center of coarse cell r.
    let diff = (0..64)
        .map(|r| (coarse[r] - 0.5 * (fine[2 * r] + fine[2 * r + 1])).abs())
        .fold(0.0f64, f64::max);

    let fluid = FluidParams::default();
    let solver = SolverParams { grid_dims: (64, 64), ..Default::default() };
    let b = BoundarySetup::with_speed(FlowKind::Ldc, 0.0, 100.0);
    let case = build_case(&ObstacleSet::empty((2.0, 2.0), 0), b, fluid, solver).unwrap();
    let st = Stepper::new(&case);
    let mut s = st.initial_state();
    let g = s.grid;
    let n = g.nx;
    let mut rng = common::rng(17);
    let mut psi = vec![0.0; (n + 1) * (n + 1)];
    for j in 1..n {
        for i in 1..n {
            psi[j * (n + 1) + i] = 1e-3 * rng.random_range(-1.0..1.0);
        }
    }
    for j in 0..n {
        for i in 0..=n {
            s.u[g.u_idx(i, j)] = (psi[(j + 1) * (n + 1) + i] - psi[j * (n + 1) + i]) / g.dy;
        }
    }
    for j in 0..=n {
        for i in 0..n {
            s.v[g.v_idx(i, j)] = -(psi[j * (n + 1) + i + 1] - psi[j * (n + 1) + i]) / g.dx;
        }
    }
    let e0 = s.kinetic_energy();
    let mut e = e0;
    let mut rises = 0;
    for _ in 0..500 {
        let dt = st.cfl_dt(&s);
        st.advance(&mut s, dt).unwrap();
        let e1 = s.kinetic_energy();
        if e1 > e {
            rises += 1;
        }
        e = e1;
    }
    outcome(
        diff <= 0.05 && rises == 0,
        format!(
            "centerline max difference {diff:.2e} of u_lid (limit 5e-2); energy {e0:.3e} -> {e:.3e} over 500 steps, {rises} increases"
        ),
    )
}

fn scheduling() -> Outcome {
    // (Re, gamma, T_end) evaluated by hand from t_nd = 4 / (1.5e-5 Re).
    let probes: [(f64, Option<f64>, f64); 10] = [
        (50.0, None, 2700.0),
        (150.0, Some(1.0), 1800.0),
        (250.0, Some(2.0), 2200.0),
        (350.0, Some(3.0), 2300.0),
        (450.0, Some(4.0), 2400.0),
        (750.0, Some(5.0), 1800.0),
        (1500.0, Some(10.0), 1800.0),
        (3000.0, Some(20.0), 1800.0),
        (4500.0, Some(30.0), 1800.0),
        (6000.0, Some(40.0), 1800.0),
    ];
    let fluid = FluidParams::default();
    let mismatches: Vec<String> = probes
        .iter()
        .filter_map(|&(re, gamma, t_end)| {
            let s = schedule_end_time(re, &fluid).unwrap();
            let ok = s.gamma == gamma && s.t_end == t_end && s.n_frames == 20 && s.write_interval * 20.0 == t_end;
            (!ok).then(|| format!("Re {re}: got ({:?}, {})", s.gamma, s.t_end))
        })
        .collect();
    outcome(
        mismatches.is_empty(),
        format!("{} probes, {} mismatches {}", probes.len(), mismatches.len(), mismatches.join("; ")),
    )
}

fn pressure_oracle() -> Outcome {
    let params = SolverParams::<f64> { p_tol: 1e-12, ..Default::default() };
    let obstacle_params = ObstacleParams::<f64>::default();
    let mut worst = 0.0f64;
    let mut solved = 0;
    let mut seed = 0u64;
    while solved < 10 {
        seed += 1;
        let obs = sample_obstacles(1 + (seed as usize % 6), &obstacle_params, seed).unwrap();
        let mask = rasterize_mask(&obs, (32, 32));
        if !common::fluid_connected(&mask) {
            continue;
        }
        let mut rng = common::rng(seed);
        let mut rhs: Vec<f64> = (0..mask.len())
            .map(|k| if mask.flags()[k] { rng.random_range(-1.0..1.0) } else { 0.0 })
            .collect();
        let mean = rhs.iter().sum::<f64>() / mask.fluid_count() as f64;
        for (k, v) in rhs.iter_mut().enumerate() {
            if mask.flags()[k] {
                *v -= mean;
            }
        }
        let p = solve_pressure_poisson(&rhs, &mask, &params).unwrap();
        let exact = common::dense_neumann_poisson(&mask, &rhs);
        let num: f64 = p.iter().zip(&exact).map(|(a, b)| (a - b).powi(2)).sum();
        let den: f64 = exact.iter().map(|b| b * b).sum();
        worst = worst.max((num / den).sqrt());
        solved += 1;
    }
    outcome(worst <= 1e-8, format!("10 masked 32x32 systems, worst relative error {worst:.2e} (limit 1e-8)"))
}

fn sdf_oracle() -> Outcome {
    let params = ObstacleParams::<f64>::default();
    let (dx, dy): (f64, f64) = (2.0 / 32.0, 2.0 / 32.0);
    let half_diag = 0.5 * (dx * dx + dy * dy).sqrt();
    let cap = 8.0f64.sqrt();
    let mut mask_errors = 0;
    let mut sign_errors = 0;
    let mut distance_errors = 0;
    let mut excess = f64::NEG_INFINITY;
    let mut worst = 0.0f64;
    for seed in 0..100u64 {
        let obs = sample_obstacles((seed % 11) as usize, &params, 1000 + seed).unwrap();
        let mask = rasterize_mask(&obs, (32, 32));
        for r in 0..32 {
            for c in 0..32 {
                let (x, y) = ((c as f64 + 0.5) * dx, (r as f64 + 0.5) * dy);
                let inside = obs.obstacles.iter().any(|o| x >= o.x && x <= o.x + o.w && y >= o.y && y <= o.y + o.h);
                if inside == mask.is_fluid(r, c) {
                    mask_errors += 1;
                }
            }
        }
        let sdf = compute_sdf(&mask).unwrap();
        for (k, &v) in sdf.values().iter().enumerate() {
            if (v > 0.0) != mask.flags()[k] {
                sign_errors += 1;
            }
        }
        match common::brute_interface_distance(&mask) {
            None => distance_errors += sdf.values().iter().filter(|&&v| v != cap).count(),
            Some(d) => {
                for (v, d) in sdf.values().iter().zip(d) {
                    let e = (v.abs() - d).abs();
                    worst = worst.max(e);
                    if e - half_diag > excess {
                        excess = e - half_diag;
                    }
                    // Corners attain the bound exactly.
                    if e > half_diag * (1.0 + 1e-12) {
                        distance_errors += 1;
                    }
                }
            }
        }
    }
    outcome(
        mask_errors + sign_errors + distance_errors == 0,
        format!(
            "100 layouts: {mask_errors} mask, {sign_errors} sign, {distance_errors} distance mismatches; worst |sdf| error {worst:.6e} (limit {half_diag:.6e}, excess {excess:.1e})"
        ),
    )
}

fn nmae_oracle() -> Outcome {
    let mut rng = common::rng(7);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let n = rng.random_range(1..5);
        let shape = (rng.random_range(1..6), rng.random_range(1..7), rng.random_range(1..7));
        let truth: Vec<Trajectory> = (0..n).map(|i| common::random_trajectory(&mut rng, i, shape)).collect();
        let mut pred = truth.clone();
        for p in &mut pred {
            p.data.iter_mut().for_each(|x| *x += rng.random_range(-0.5f32..0.5));
        }
        pred.reverse();
        let got = nmae(&pred, &truth, None).unwrap().nmae;
        let want = common::elementwise_nmae(&pred, &truth, &[0, 1, 2]);
        worst = worst.max((got - want).abs() / want);
    }
    let truth: Vec<Trajectory> = (0..3).map(|i| common::random_trajectory(&mut rng, i, (4, 5, 6))).collect();
    let identity = nmae(&truth, &truth, None).unwrap().nmae;
    let mut zeros = truth.clone();
    zeros.iter_mut().for_each(|t| t.data.fill(0.0));
    let zero = nmae(&zeros, &truth, None).unwrap().nmae;
    let hand = |id: u64, a: f32, b: f32| {
        let mut t = Trajectory::zeros(TrajectoryMeta { id, ..Default::default() }, 2, 1, 1);
        t.set(0, 0, 0, 0, a);
        t.set(1, 0, 0, 0, b);
        t
    };
    let y = [hand(1, 1.0, 2.0), hand(2, 3.0, 4.0)];
    let p = [hand(1, 1.5, 2.5), hand(2, 3.5, 4.5)];
    let h = nmae(&p, &y, Some(&[nspregen::trajio::Channel::U])).unwrap().nmae;
    outcome(
        worst <= 1e-12 && identity == 0.0 && zero == 1.0 && (h - 0.2).abs() <= 1e-12,
        format!("50 fixtures worst relative deviation {worst:.1e}; identity {identity}, zero prediction {zero}, hand fixture {h}"),
    )
}

fn cost_trend() -> Outcome {
    let opts = gen_opts(64);
    let mut lines = Vec::new();
    let mut monotone = true;
    let mut physics_model = None;
    for axis in [Axis::Geometry, Axis::Physics] {
        let p = ProfileOptions::new(axis, FlowKind::Fpo, 10, 99);
        let records = profile_axis(&p, &opts, |_| {}).unwrap();
        let table = aggregate_costs(&records).unwrap();
        let report = check_monotonicity(&table, axis).unwrap();
        monotone &= report.monotone;
        lines.push(format!(
            "{axis} means {:.2}/{:.2}/{:.2} s",
            report.means[0], report.means[1], report.means[2]
        ));
        if axis == Axis::Physics {
            physics_model = Some(fit_cost_model(&table, axis).unwrap());
        }
    }
    let model = physics_model.unwrap();
    let alphas = [0.10, 1.0].map(|a| MixFraction::new(a).unwrap());
    let ms = alpha_sweep_manifest(800, &alphas, Tier::Easy, Tier::Hard, Axis::Physics, FlowKind::Fpo, 1).unwrap();
    let ratio = compute_savings_ratio(&ms[1], &ms[0], &model);
    outcome(
        monotone && ratio > 3.0,
        format!("{}; 90/10 physics savings {ratio:.2}x (limit > 3x, reference 8.9x)", lines.join(", ")),
    )
}

fn determinism_and_format() -> Outcome {
    let m = tier_manifest("determinism", Axis::Physics, FlowKind::Fpo, Tier::Easy, 4, 5);
    let run = |workers: usize| {
        let dir = tempfile::tempdir().unwrap();
        let opts = MaterializeOptions {
            out_dir: dir.path().to_path_buf(),
            generation: gen_opts(32),
            workers,
            include_held_out: false,
            manifest_path: None,
        };
        let report = materialize_manifest(&m, &opts).unwrap();
        assert!(report.failures.is_empty());
        let payloads: Vec<Vec<u8>> = report
            .manifest
            .files
            .iter()
            .map(|f| read_trajectory(&dir.path().join(&f.path)).unwrap().payload_bytes())
            .collect();
        payloads
    };
    let a = run(1);
    let b = run(2);
    let identical = a.len() == 4 && a == b;

    let mut rng = common::rng(3);
    let t = common::random_trajectory(&mut rng, 42, (3, 7, 5));
    let round_trip = from_bytes(&to_bytes(&t).unwrap()).unwrap() == t;
    let canonical = Trajectory::zeros(TrajectoryMeta::default(), 20, 128, 128);
    let bytes = to_bytes(&canonical).unwrap();
    let header = bytes.len() - canonical.payload_len();
    let sized = canonical.payload_len() == 7_864_320 && header.is_multiple_of(64);
    outcome(
        identical && round_trip && sized,
        format!(
            "two materializations identical: {identical}; round trip exact: {round_trip}; canonical payload {} bytes + {header}-byte header",
            canonical.payload_len()
        ),
    )
}

fn planner_arithmetic() -> Outcome {
    let alphas: Vec<MixFraction> = DEFAULT_ALPHAS.iter().map(|&a| MixFraction::new(a).unwrap()).collect();
    let ms = alpha_sweep_manifest(800, &alphas, Tier::Easy, Tier::Hard, Axis::Physics, FlowKind::Fpo, 1).unwrap();
    let conserved = ms.iter().all(|m| m.train_count() == 800);
    let counts = |a: f64| {
        let k = DEFAULT_ALPHAS.iter().position(|&x| x == a).unwrap();
        (ms[k].count_for(Tier::Hard), ms[k].count_for(Tier::Easy))
    };
    let pivots = counts(0.10) == (80, 720) && counts(0.25) == (200, 600);

    let model = nspregen::cost::CostModel::new(1.0, 5.0, 10.0);
    let pair = alpha_sweep_manifest(
        800,
        &[MixFraction::new(0.10).unwrap(), MixFraction::new(1.0).unwrap()],
        Tier::Easy,
        Tier::Hard,
        Axis::Physics,
        FlowKind::Fpo,
        1,
    )
    .unwrap();
    let ratio = compute_savings_ratio(&pair[1], &pair[0], &model);
    let exact = 8000.0 / 1520.0;
    let ratio_ok = (ratio - exact).abs() <= 1e-9 && format!("{ratio:.3}") == "5.263";

    let mut rng = common::rng(11);
    let grid = default_augmentation_grid();
    let mut infeasible = 0;
    let mut plans = 0;
    for _ in 0..1000 {
        let m = nspregen::cost::CostModel::new(rng.random_range(0.0..5.0), 1.0, rng.random_range(0.1..20.0));
        let budget = rng.random_range(0.0..50_000.0);
        let Ok(plan) = budget_augmentation_plan(&m, budget, Tier::Easy, &grid) else { continue };
        plans += 1;
        for &n in &grid {
            let fits = 200.0 * m.hard + n as f64 * m.easy <= budget;
            if plan.feasible_counts.contains(&n) != fits {
                infeasible += 1;
            }
        }
    }
    outcome(
        conserved && pivots && ratio_ok && infeasible == 0,
        format!(
            "counts conserved: {conserved}; 0.10 -> {:?}, 0.25 -> {:?}; synthetic savings {ratio:.10} (5.263); {plans} budget plans, {infeasible} misclassified counts",
            counts(0.10),
            counts(0.25)
        ),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        (1, "Poiseuille recovery", poiseuille),
        (2, "divergence-free suite", divergence_suite),
        (3, "cavity self-refinement and energy decay", cavity),
        (4, "scheduling exactness", scheduling),
        (5, "pressure solver oracle", pressure_oracle),
        (6, "SDF and mask oracles", sdf_oracle),
        (7, "nMAE oracle", nmae_oracle),
        (8, "cost trend and savings", cost_trend),
        (9, "determinism and format", determinism_and_format),
        (10, "planner arithmetic", planner_arithmetic),
    ];
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    let mut ran = 0;
    for (n, name, f) in criteria {
        if !selected.is_empty() && !selected.contains(&n) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        if !result.pass {
            failed += 1;
        }
        println!(
            "criterion {n:>2} {} {name}: {} [{:.1} s]",
            if result.pass { "PASS" } else { "FAIL" },
            result.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} of {ran} criteria passed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
