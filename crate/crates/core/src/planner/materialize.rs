use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::jobs::{case_for_job, CaseRequest, GenerationOptions, Role};
use super::{DatasetManifest, FileRef, PlanError};
use crate::cost::CostRecord;
use crate::solver::run_simulation;
use crate::trajio::{read_trajectory, write_atomic, write_trajectory};

#[derive(Debug, Clone)]
pub struct MaterializeOptions {
    /// Output root; file references are relative to it.
    pub out_dir: PathBuf,
    pub generation: GenerationOptions,
    pub workers: usize,
    pub include_held_out: bool,
    /// Where to keep the manifest up to date while files complete.
    pub manifest_path: Option<PathBuf>,
}

/// A file that could not be produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub path: String,
    pub error: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<CostRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterializeReport {
    pub manifest: DatasetManifest,
    pub generated: usize,
    pub skipped: usize,
    pub failures: Vec<Failure>,
    pub wall_seconds: f64,
}

struct Job {
    req: CaseRequest,
    entry: Option<usize>,
    path: String,
}

fn jobs_for(m: &DatasetManifest, include_held_out: bool) -> Vec<Job> {
    let mut jobs = Vec::new();
    for (k, e) in m.entries.iter().enumerate() {
        for i in 0..e.count {
            let req = CaseRequest::draw(Role::Train, m.axis, e.tier, m.kind, e.base_seed, i, &e.re_band, e.obstacles);
            let path = format!("{}/{k:02}-{}-{i:05}.nst", m.name, e.tier);
            jobs.push(Job { req, entry: Some(k), path });
        }
    }
    if include_held_out {
        let h = &m.held_out;
        for i in 0..h.count {
            let req = CaseRequest::draw(
                Role::HeldOut,
                m.axis,
                crate::difficulty::Tier::Hard,
                m.kind,
                h.seed,
                i,
                &h.re_band,
                h.obstacles,
            );
            // Shared by every manifest with the same held-out seed.
            let path = format!("held-out-{}-{:016x}/{i:05}.nst", m.kind, h.seed);
            jobs.push(Job { req, entry: None, path });
        }
    }
    jobs
}

fn file_ref(job: &Job, obstacles: usize, cost: Option<CostRecord>) -> FileRef {
    FileRef {
        path: job.path.clone(),
        role: job.req.role,
        tier: job.req.tier,
        entry: job.entry,
        index: job.req.index,
        id: job.req.seed,
        seed: job.req.seed,
        re: job.req.re,
        obstacles,
        cost,
    }
}

enum Outcome {
    Generated(FileRef),
    Skipped(FileRef),
    Failed(Failure),
}

fn run_job(job: &Job, opts: &MaterializeOptions, previous: Option<&FileRef>) -> Outcome {
    let abs = opts.out_dir.join(&job.path);
    if let Ok(t) = read_trajectory(&abs) {
        if t.meta.id == job.req.seed {
            let cost = previous.and_then(|f| f.cost.clone());
            return Outcome::Skipped(file_ref(job, t.meta.obstacles as usize, cost));
        }
    }
    let fail = |error: String, cost| {
        Outcome::Failed(Failure {
            path: job.path.clone(),
            error,
            cost,
        })
    };
    let case = match case_for_job(&job.req, &opts.generation) {
        Ok(c) => c,
        Err(e) => return fail(e.to_string(), None),
    };
    match run_simulation(&case) {
        Ok((traj, mut cost)) => {
            cost.sim_id = job.path.clone();
            match write_trajectory(&traj, &abs) {
                Ok(()) => Outcome::Generated(file_ref(job, case.obstacles.len(), Some(cost))),
                Err(e) => fail(e.to_string(), Some(cost)),
            }
        }
        Err(f) => fail(f.error.to_string(), Some(f.partial)),
    }
}

fn save_manifest(m: &DatasetManifest, path: &Path) {
    if let Err(e) = write_atomic(path, m.to_json().as_bytes()) {
        log::warn!("could not update {}: {e}", path.display());
    }
}

/// Simulates and writes every trajectory of `m` that is not already on
/// disk, on a pool of `opts.workers` threads.
///
/// Existing files whose header id matches the expected case are kept, so
/// an interrupted run resumes where it stopped. Failures are collected and
/// the batch continues. The returned manifest lists every file present,
/// in job order.
pub fn materialize_manifest(m: &DatasetManifest, opts: &MaterializeOptions) -> Result<MaterializeReport, PlanError> {
    m.validate()?;
    opts.generation
        .solver
        .validate()
        .map_err(|e| PlanError::Invalid(e.to_string()))?;
    let start = Instant::now();
    let jobs = jobs_for(m, opts.include_held_out);
    let previous: std::collections::HashMap<&str, &FileRef> = m.files.iter().map(|f| (f.path.as_str(), f)).collect();
    let workers = opts.workers.clamp(1, jobs.len().max(1));
    let next = AtomicUsize::new(0);
    let mut slots: Vec<Option<FileRef>> = vec![None; jobs.len()];
    let mut report = MaterializeReport {
        manifest: m.clone(),
        generated: 0,
        skipped: 0,
        failures: Vec::new(),
        wall_seconds: 0.0,
    };

    std::thread::scope(|scope| {
        let (tx, rx) = mpsc::channel::<(usize, Outcome)>();
        for _ in 0..workers {
            let tx = tx.clone();
            let (jobs, next, previous) = (&jobs, &next, &previous);
            scope.spawn(move || loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some(job) = jobs.get(k) else { break };
                let out = run_job(job, opts, previous.get(job.path.as_str()).copied());
                if tx.send((k, out)).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        // Single writer: only this loop touches the manifest.
        for (k, outcome) in rx {
            match outcome {
                Outcome::Generated(f) => {
                    log::info!("wrote {}", f.path);
                    report.generated += 1;
                    slots[k] = Some(f);
                }
                Outcome::Skipped(f) => {
                    log::debug!("kept {}", f.path);
                    report.skipped += 1;
                    slots[k] = Some(f);
                }
                Outcome::Failed(f) => {
                    log::warn!("{}: {}", f.path, f.error);
                    report.failures.push(f);
                }
            }
            if let Some(path) = &opts.manifest_path {
                report.manifest.files = slots.iter().flatten().cloned().collect();
                save_manifest(&report.manifest, path);
            }
        }
    });

    report.manifest.files = slots.into_iter().flatten().collect();
    report.failures.sort_by(|a, b| a.path.cmp(&b.path));
    if let Some(path) = &opts.manifest_path {
        save_manifest(&report.manifest, path);
    }
    report.wall_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}
