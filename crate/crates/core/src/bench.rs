//! Scaling benchmark: runtime, log size and recovery latency per task count
//! and profile, plus a worker-pool rerun of every batch.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::context::{apply_failure, ContextEvent};
use crate::error::{Error, Result};
use crate::evaluator::{evaluate, Profile};
use crate::ids::{EsId, Time};
use crate::priorities::{built_in_temporal, SpatialPriorities};
use crate::reconstructor::{reconstruct_full, recover_failure, Schedule};
use crate::workload::generate_workload;

#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    pub task_counts: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
    pub profiles: Vec<Profile>,
    pub workers: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            task_counts: vec![5, 15, 30, 50, 100],
            reps: 1000,
            seed: 1,
            profiles: Profile::ALL.to_vec(),
            workers: 13,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::Config("repetitions must be at least 1".into()));
        }
        if self.workers == 0 {
            return Err(Error::Config("worker count must be at least 1".into()));
        }
        if self.task_counts.is_empty() || self.task_counts.contains(&0) {
            return Err(Error::Config("task counts must be non-empty and positive".into()));
        }
        if self.profiles.is_empty() {
            return Err(Error::Config("at least one profile is required".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRecord {
    pub task_count: usize,
    pub profile: Profile,
    pub mean_runtime_s: f64,
    pub log_bytes: u64,
    pub recovery_s: f64,
    pub workers: usize,
    pub wall_s: f64,
}

impl BenchRecord {
    pub const CSV_HEADER: &'static str = "task_count,profile,mean_runtime_s,log_bytes,recovery_s,workers,wall_s";

    pub fn csv_record(&self) -> String {
        format!(
            "{},{},{:.9},{},{:.9},{},{:.9}",
            self.task_count,
            self.profile,
            self.mean_runtime_s,
            self.log_bytes,
            self.recovery_s,
            self.workers,
            self.wall_s
        )
    }
}

/// Seed of repetition `rep` at `count` tasks; shared by every profile.
pub fn workload_seed(base: u64, count: usize, rep: usize) -> u64 {
    base.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ ((count as u64) << 32) ^ rep as u64
}

struct RunResult {
    digest: u64,
    runtime_s: f64,
    log_bytes: u64,
    recovery_s: f64,
}

fn digest(s: &Schedule) -> u64 {
    let mut h = DefaultHasher::new();
    s.to_text().hash(&mut h);
    h.finish()
}

/// The end system with the most assigned execution time; lowest id on ties.
fn busiest_es(s: &Schedule) -> Option<EsId> {
    let mut load: std::collections::BTreeMap<EsId, Time> = Default::default();
    for e in &s.task_entries {
        *load.entry(e.es).or_default() += e.end - e.start;
    }
    load.into_iter().max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0))).map(|(es, _)| es)
}

/// One repetition: build, evaluate, then fail the busiest end system at half
/// the makespan and recover from the log.
fn run_once(count: usize, profile: Profile, seed: u64) -> Result<RunResult> {
    let (am, pm) = generate_workload(count, seed)?;
    let tp = built_in_temporal(&am)?;
    let sp = SpatialPriorities::LeastLoaded;

    let clock = Instant::now();
    let (schedule, log) = reconstruct_full(&am, &pm, &tp, &sp)?;
    evaluate(&schedule, &am, &pm, profile);
    let runtime_s = clock.elapsed().as_secs_f64();

    let log_bytes = log.to_bytes().len() as u64;
    let es = busiest_es(&schedule).ok_or(Error::EmptyPlatform)?;
    let event = ContextEvent::failure(schedule.makespan / 2, es.0);
    let pm_failed = apply_failure(&pm, &event)?;
    let clock = Instant::now();
    recover_failure(&am, &pm_failed, &log, event.time, &event.kind)?;
    let recovery_s = clock.elapsed().as_secs_f64();

    Ok(RunResult { digest: digest(&schedule), runtime_s, log_bytes, recovery_s })
}

/// Runs the whole benchmark. Fails if any schedule built inside the worker
/// pool differs from its serial counterpart.
pub fn run_bench(cfg: &BenchConfig) -> Result<Vec<BenchRecord>> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;

    // warm caches and the allocator so the first point is not penalized
    run_once(cfg.task_counts[0], cfg.profiles[0], workload_seed(cfg.seed, 0, 0))?;

    let mut records = Vec::new();
    for &count in &cfg.task_counts {
        for &profile in &cfg.profiles {
            let serial: Vec<RunResult> = (0..cfg.reps)
                .map(|rep| run_once(count, profile, workload_seed(cfg.seed, count, rep)))
                .collect::<Result<_>>()?;

            let clock = Instant::now();
            let parallel: Vec<u64> = pool.install(|| {
                (0..cfg.reps)
                    .into_par_iter()
                    .map(|rep| run_once(count, profile, workload_seed(cfg.seed, count, rep)).map(|r| r.digest))
                    .collect::<Result<_>>()
            })?;
            let wall_s = clock.elapsed().as_secs_f64();

            if let Some(rep) = (0..cfg.reps).find(|&i| serial[i].digest != parallel[i]) {
                return Err(Error::Consistency(format!(
                    "parallel schedule differs from serial at {count} tasks, repetition {rep}"
                )));
            }

            let n = cfg.reps as f64;
            records.push(BenchRecord {
                task_count: count,
                profile,
                mean_runtime_s: serial.iter().map(|r| r.runtime_s).sum::<f64>() / n,
                log_bytes: serial.iter().map(|r| r.log_bytes).sum::<u64>() / cfg.reps as u64,
                recovery_s: serial.iter().map(|r| r.recovery_s).sum::<f64>() / n,
                workers: cfg.workers,
                wall_s,
            });
        }
    }
    Ok(records)
}

pub fn to_csv(records: &[BenchRecord]) -> String {
    let mut out = String::from(BenchRecord::CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&r.csv_record());
        out.push('\n');
    }
    out
}
