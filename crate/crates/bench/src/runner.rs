//! Batch runner over (instance, model) pairs.

use std::path::PathBuf;
use std::sync::mpsc;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::config::{load_instances, BenchConfig, ModelJob};
use crate::error::{BenchError, Result};
use crate::record::{attach_gaps, canonical_sort, csv_writer, save_records, RunRecord};
use crate::solve::solve_job;

pub const RECORDS_FILE: &str = "records.csv";

#[derive(Debug)]
pub struct BenchRun {
    pub records: Vec<RunRecord>,
    pub csv_path: PathBuf,
}

impl BenchRun {
    /// Whether any solve stopped at its time limit.
    pub fn hit_time_limit(&self) -> bool {
        self.records.iter().any(|r| r.status == crate::solve::RunStatus::TimeLimit)
    }
}

fn run_one(id: &str, inst: &compactknap::Instance, job: &ModelJob, limit: Duration) -> RunRecord {
    let start = Instant::now();
    let res = solve_job(inst, job, Some(limit)).and_then(|out| RunRecord::from_outcome(id, inst, job, &out));
    match res {
        Ok(r) => r,
        Err(e) => {
            log::warn!("{id} {}: {e}", job.id());
            RunRecord::failed(id, job, e.to_string(), start.elapsed().as_secs_f64())
        }
    }
}

/// Solves every (instance, model) pair. Rows reach `records.csv` as they
/// finish; once all are done the file is rewritten in canonical order with
/// gaps filled in.
pub fn run_benchmark(cfg: &BenchConfig) -> Result<BenchRun> {
    cfg.validate()?;
    let instances = load_instances(&cfg.instances)?;
    let jobs = cfg.jobs();
    let workers = cfg.resolved_workers()?;
    let limit = Duration::from_secs_f64(cfg.time_limit);
    std::fs::create_dir_all(&cfg.output_dir)?;
    let csv_path = cfg.output_dir.join(RECORDS_FILE);

    let pairs: Vec<(usize, usize)> = (0..instances.len()).flat_map(|i| (0..jobs.len()).map(move |j| (i, j))).collect();
    log::info!("{} instances x {} models on {workers} workers", instances.len(), jobs.len());

    let mut writer = csv_writer(std::fs::File::create(&csv_path)?)?;
    writer.flush()?;
    let (tx, rx) = mpsc::channel::<RunRecord>();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build().map_err(|e| BenchError::Config(e.to_string()))?;

    let mut records = std::thread::scope(|scope| -> Result<Vec<RunRecord>> {
        let sink = scope.spawn(move || -> Result<Vec<RunRecord>> {
            let mut done = Vec::new();
            for rec in rx {
                writer.serialize(&rec)?;
                writer.flush()?;
                log::info!("{} {} {:?} {:.2}s", rec.instance_id, rec.model, rec.status, rec.wall_time_s);
                done.push(rec);
            }
            Ok(done)
        });
        pool.install(|| {
            pairs.par_iter().for_each_with(tx, |tx, &(i, j)| {
                let (id, inst) = &instances[i];
                // The sink only stops early on a write error, which is
                // reported below.
                let _ = tx.send(run_one(id, inst, &jobs[j], limit));
            });
        });
        sink.join().expect("record sink panicked")
    })?;

    canonical_sort(&mut records);
    attach_gaps(&mut records);
    save_records(&csv_path, &records)?;
    Ok(BenchRun { records, csv_path })
}
