//! Benchmark records and their CSV form.
//!
//! Column order follows the field order of [`RunRecord`]. Empty cells mean
//! "not available". `wall_time_s` is the only column that varies between
//! identical runs.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use compactknap::metrics::{gap, MetricReport};
use compactknap::Instance;
use serde::{Deserialize, Serialize};

use crate::config::{ModelJob, ModelKind};
use crate::error::Result;
use crate::solve::{Outcome, RunStatus};

pub const HEADER: [&str; 20] = [
    "instance_id",
    "model",
    "kind",
    "lambda",
    "misc_rounds",
    "status",
    "objective",
    "bound",
    "gap_percent",
    "imp",
    "comp",
    "frac",
    "frac_initial",
    "cuts_added",
    "cut_lp_value",
    "cut_dp_value",
    "cut_size",
    "iterations",
    "wall_time_s",
    "message",
];

pub const TIMING_COLUMNS: [&str; 1] = ["wall_time_s"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub instance_id: String,
    pub model: String,
    pub kind: ModelKind,
    pub lambda: Option<f64>,
    pub misc_rounds: usize,
    pub status: RunStatus,
    pub objective: Option<f64>,
    pub bound: Option<f64>,
    /// Against the instance's proven MIP optimum, filled in after the batch.
    pub gap_percent: Option<f64>,
    pub imp: Option<f64>,
    pub comp: Option<f64>,
    pub frac: Option<f64>,
    /// Fractionality before the first MISC round.
    pub frac_initial: Option<f64>,
    pub cuts_added: usize,
    /// Separation values of the last separation run.
    pub cut_lp_value: Option<f64>,
    pub cut_dp_value: Option<f64>,
    /// Support size of the last cut added.
    pub cut_size: Option<usize>,
    pub iterations: usize,
    pub wall_time_s: f64,
    pub message: Option<String>,
}

impl RunRecord {
    pub fn from_outcome(instance_id: &str, inst: &Instance, job: &ModelJob, out: &Outcome) -> Result<Self> {
        let metrics = out.x.as_ref().map(|x| MetricReport::compute(inst, x, None)).transpose()?;
        let last_sep = out.final_separation.as_ref().or(out.cuts.last());
        Ok(RunRecord {
            instance_id: instance_id.to_string(),
            model: job.id(),
            kind: job.kind,
            lambda: job.lambda,
            misc_rounds: job.misc_rounds,
            status: out.status,
            objective: out.objective,
            bound: out.bound,
            gap_percent: None,
            imp: metrics.as_ref().map(|m| m.imp),
            comp: metrics.as_ref().map(|m| m.comp),
            frac: metrics.as_ref().map(|m| m.frac),
            frac_initial: out.x_initial.as_ref().map(|x| compactknap::metrics::frac(x)),
            cuts_added: out.cuts.len(),
            cut_lp_value: last_sep.map(|c| c.lp_value),
            cut_dp_value: last_sep.and_then(|c| c.dp_value),
            cut_size: out.cuts.last().map(|c| c.outside.len()),
            iterations: out.iterations,
            wall_time_s: out.wall_time.as_secs_f64(),
            message: None,
        })
    }

    pub fn failed(instance_id: &str, job: &ModelJob, message: String, wall_time_s: f64) -> Self {
        RunRecord {
            instance_id: instance_id.to_string(),
            model: job.id(),
            kind: job.kind,
            lambda: job.lambda,
            misc_rounds: job.misc_rounds,
            status: RunStatus::Failed,
            objective: None,
            bound: None,
            gap_percent: None,
            imp: None,
            comp: None,
            frac: None,
            frac_initial: None,
            cuts_added: 0,
            cut_lp_value: None,
            cut_dp_value: None,
            cut_size: None,
            iterations: 0,
            wall_time_s,
            message: Some(message),
        }
    }
}

/// Orders by instance id, then model id.
pub fn canonical_sort(records: &mut [RunRecord]) {
    records.sort_by(|a, b| (&a.instance_id, &a.model).cmp(&(&b.instance_id, &b.model)));
}

/// The proven optimum per instance, from optimal MIP records.
pub fn upper_bounds(records: &[RunRecord]) -> HashMap<String, f64> {
    records
        .iter()
        .filter(|r| r.kind == ModelKind::Mip && r.status == RunStatus::Optimal)
        .filter_map(|r| r.objective.map(|o| (r.instance_id.clone(), o)))
        .collect()
}

/// Fills `gap_percent` for every record with a bound and a known optimum.
pub fn attach_gaps(records: &mut [RunRecord]) {
    let ub = upper_bounds(records);
    for r in records.iter_mut() {
        r.gap_percent = match (ub.get(&r.instance_id), r.bound) {
            (Some(&u), Some(lb)) if u > 0.0 => gap(u, lb).ok(),
            _ => None,
        };
    }
}

pub fn csv_writer<W: Write>(w: W) -> Result<csv::Writer<W>> {
    let mut wr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    wr.write_record(HEADER)?;
    Ok(wr)
}

pub fn write_csv<W: Write>(w: W, records: &[RunRecord]) -> Result<()> {
    let mut wr = csv_writer(w)?;
    for r in records {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(r: R) -> Result<Vec<RunRecord>> {
    let mut rd = csv::Reader::from_reader(r);
    Ok(rd.deserialize().collect::<std::result::Result<_, _>>()?)
}

pub fn load_records(path: impl AsRef<Path>) -> Result<Vec<RunRecord>> {
    read_csv(std::fs::File::open(path)?)
}

/// Writes to a sibling temporary file and renames it into place.
pub fn save_records(path: impl AsRef<Path>, records: &[RunRecord]) -> Result<()> {
    let path = path.as_ref();
    let tmp = path.with_extension("csv.tmp");
    write_csv(std::fs::File::create(&tmp)?, records)?;
    std::fs::rename(tmp, path)?;
    Ok(())
}

/// The CSV text with the timing columns blanked, for run-to-run comparison.
pub fn strip_timing(csv_text: &str) -> Result<String> {
    let mut rd = csv::ReaderBuilder::new().has_headers(false).from_reader(csv_text.as_bytes());
    let mut out = csv::Writer::from_writer(Vec::new());
    let mut drop = Vec::new();
    for (row, rec) in rd.records().enumerate() {
        let rec = rec?;
        if row == 0 {
            drop = rec.iter().map(|h| TIMING_COLUMNS.contains(&h)).collect();
        }
        let kept: Vec<&str> = rec.iter().zip(&drop).map(|(v, &d)| if d && row > 0 { "" } else { v }).collect();
        out.write_record(kept)?;
    }
    Ok(String::from_utf8(out.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?).expect("csv output is utf-8"))
}
