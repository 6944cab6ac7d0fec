//! Report emitters. Each writes a CSV; charts are rendered from that CSV's
//! text alone.
//!
//! | file | columns |
//! |---|---|
//! | `gap_curve.csv` | instance_rank, instance_id, gap_lp, gap_sdp, gap_sdp_plus, gap_misc |
//! | `tradeoff.csv` | instance_id, model, lambda, comp, imp |
//! | `fractionality.csv` | model, kind, lambda, misc_rounds, runs, mean_frac, mean_frac_without_misc |
//! | `performance_profile.csv` | model, tau, fraction |

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use compactknap::metrics::gap;
use serde::{Deserialize, Serialize};

use crate::config::ModelKind;
use crate::error::Result;
use crate::record::{upper_bounds, RunRecord};
use crate::svg::{Chart, Mode, Series};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Emitted {
    pub csv: PathBuf,
    pub svg: Option<PathBuf>,
}

fn write_rows<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<String> {
    let mut wr = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    wr.write_record(header)?;
    for r in rows {
        wr.serialize(r)?;
    }
    let text = String::from_utf8(wr.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?).expect("csv output is utf-8");
    std::fs::write(path, &text)?;
    Ok(text)
}

fn read_rows<T: for<'de> Deserialize<'de>>(csv_text: &str) -> Result<Vec<T>> {
    let mut rd = csv::Reader::from_reader(csv_text.as_bytes());
    Ok(rd.deserialize().collect::<std::result::Result<_, _>>()?)
}

fn emit(dir: &Path, stem: &str, svg: Option<String>) -> Result<Emitted> {
    let csv = dir.join(format!("{stem}.csv"));
    let svg = match svg {
        Some(s) => {
            let p = dir.join(format!("{stem}.svg"));
            std::fs::write(&p, s)?;
            Some(p)
        }
        None => None,
    };
    Ok(Emitted { csv, svg })
}

/// Which model ids feed the gap curve columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GapPairing {
    pub lp: String,
    pub sdp: String,
    pub sdp_plus: String,
    /// `None` picks the first `sdp+` model with MISC rounds.
    pub misc: Option<String>,
}

impl Default for GapPairing {
    fn default() -> Self {
        GapPairing { lp: "lp".into(), sdp: "sdp".into(), sdp_plus: "sdp+".into(), misc: None }
    }
}

pub const GAP_HEADER: [&str; 6] = ["instance_rank", "instance_id", "gap_lp", "gap_sdp", "gap_sdp_plus", "gap_misc"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub instance_rank: usize,
    pub instance_id: String,
    pub gap_lp: Option<f64>,
    pub gap_sdp: Option<f64>,
    pub gap_sdp_plus: Option<f64>,
    pub gap_misc: Option<f64>,
}

/// One row per instance with a proven optimum, ordered by the LP gap.
pub fn gap_curve_rows(records: &[RunRecord], pairing: &GapPairing) -> Vec<GapRow> {
    let ub = upper_bounds(records);
    let misc = pairing.misc.clone().or_else(|| {
        records
            .iter()
            .filter(|r| r.kind == ModelKind::SdpPlus && r.misc_rounds > 0)
            .map(|r| r.model.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .next()
    });
    let mut lbs: HashMap<(&str, &str), f64> = HashMap::new();
    for r in records {
        if let Some(b) = r.bound {
            lbs.insert((r.instance_id.as_str(), r.model.as_str()), b);
        }
    }
    let ids: BTreeSet<&str> = records.iter().map(|r| r.instance_id.as_str()).collect();
    let mut rows = Vec::new();
    for id in ids {
        let Some(&u) = ub.get(id) else {
            log::warn!("gap curve: no proven optimum for {id}, skipped");
            continue;
        };
        let g = |model: &str| lbs.get(&(id, model)).and_then(|&lb| gap(u, lb).ok());
        rows.push(GapRow {
            instance_rank: 0,
            instance_id: id.to_string(),
            gap_lp: g(&pairing.lp),
            gap_sdp: g(&pairing.sdp),
            gap_sdp_plus: g(&pairing.sdp_plus),
            gap_misc: misc.as_deref().and_then(g),
        });
    }
    rows.sort_by(|a, b| {
        let key = |r: &GapRow| r.gap_lp.unwrap_or(f64::INFINITY);
        key(a).total_cmp(&key(b)).then_with(|| a.instance_id.cmp(&b.instance_id))
    });
    for (k, r) in rows.iter_mut().enumerate() {
        r.instance_rank = k + 1;
    }
    rows
}

pub fn gap_curve_svg(csv_text: &str) -> Result<String> {
    let rows: Vec<GapRow> = read_rows(csv_text)?;
    let col = |name: &str, f: fn(&GapRow) -> Option<f64>| Series {
        name: name.into(),
        points: rows.iter().filter_map(|r| f(r).map(|g| (r.instance_rank as f64, g))).collect(),
        mode: Mode::Line,
    };
    let series = vec![
        col("LP", |r| r.gap_lp),
        col("SDP", |r| r.gap_sdp),
        col("SDP+", |r| r.gap_sdp_plus),
        col("SDP+ with MISC", |r| r.gap_misc),
    ];
    Ok(Chart {
        title: "Relative gap per instance".into(),
        x_label: "instances ordered by LP gap".into(),
        y_label: "gap (%)".into(),
        series: series.into_iter().filter(|s| !s.points.is_empty()).collect(),
    }
    .render())
}

pub fn emit_gap_curve(records: &[RunRecord], pairing: &GapPairing, dir: &Path) -> Result<Emitted> {
    let text = write_rows(&dir.join("gap_curve.csv"), &GAP_HEADER, &gap_curve_rows(records, pairing))?;
    let svg = gap_curve_svg(&text)?;
    emit(dir, "gap_curve", Some(svg))
}

pub const TRADEOFF_HEADER: [&str; 5] = ["instance_id", "model", "lambda", "comp", "imp"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffRow {
    pub instance_id: String,
    pub model: String,
    pub lambda: Option<f64>,
    pub comp: f64,
    pub imp: f64,
}

fn lambda_selected(l: f64, list: &[f64]) -> bool {
    list.is_empty() || list.iter().any(|&m| (m - l).abs() <= 1e-12 * m.abs().max(l.abs()))
}

/// Penalized runs at the listed λ values (all when empty) and MIP runs.
pub fn tradeoff_rows(records: &[RunRecord], lambdas: &[f64]) -> Vec<TradeoffRow> {
    records
        .iter()
        .filter(|r| r.status.is_solved())
        .filter(|r| match r.lambda {
            Some(l) => r.kind.is_penalized() && lambda_selected(l, lambdas),
            None => r.kind == ModelKind::Mip,
        })
        .filter_map(|r| {
            Some(TradeoffRow { instance_id: r.instance_id.clone(), model: r.model.clone(), lambda: r.lambda, comp: r.comp?, imp: r.imp? })
        })
        .collect()
}

pub fn tradeoff_svg(csv_text: &str) -> Result<String> {
    let rows: Vec<TradeoffRow> = read_rows(csv_text)?;
    let mut groups: BTreeMap<&str, Vec<(f64, f64)>> = BTreeMap::new();
    for r in &rows {
        groups.entry(r.model.as_str()).or_default().push((r.comp, r.imp));
    }
    Ok(Chart {
        title: "Compactness against imprecision".into(),
        x_label: "comp".into(),
        y_label: "imp".into(),
        series: groups.into_iter().map(|(m, p)| Series { name: m.into(), points: p, mode: Mode::Markers }).collect(),
    }
    .render())
}

pub fn emit_tradeoff_scatter(records: &[RunRecord], lambdas: &[f64], dir: &Path) -> Result<Emitted> {
    let text = write_rows(&dir.join("tradeoff.csv"), &TRADEOFF_HEADER, &tradeoff_rows(records, lambdas))?;
    let svg = tradeoff_svg(&text)?;
    emit(dir, "tradeoff", Some(svg))
}

pub const FRAC_HEADER: [&str; 7] = ["model", "kind", "lambda", "misc_rounds", "runs", "mean_frac", "mean_frac_without_misc"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FracRow {
    pub model: String,
    pub kind: ModelKind,
    pub lambda: Option<f64>,
    pub misc_rounds: usize,
    pub runs: usize,
    pub mean_frac: f64,
    /// Mean over the same runs before their MISC rounds.
    pub mean_frac_without_misc: Option<f64>,
}

/// Mean fractionality per model id.
pub fn fractionality_rows(records: &[RunRecord]) -> Vec<FracRow> {
    let mut groups: BTreeMap<&str, Vec<&RunRecord>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.frac.is_some()) {
        groups.entry(r.model.as_str()).or_default().push(r);
    }
    let mut rows: Vec<FracRow> = groups
        .into_iter()
        .map(|(model, rs)| {
            let k = rs.len() as f64;
            let before: Option<Vec<f64>> = rs.iter().map(|r| r.frac_initial).collect();
            FracRow {
                model: model.to_string(),
                kind: rs[0].kind,
                lambda: rs[0].lambda,
                misc_rounds: rs[0].misc_rounds,
                runs: rs.len(),
                mean_frac: rs.iter().filter_map(|r| r.frac).sum::<f64>() / k,
                mean_frac_without_misc: before.filter(|_| rs[0].misc_rounds > 0).map(|b| b.iter().sum::<f64>() / k),
            }
        })
        .collect();
    rows.sort_by(|a, b| {
        a.kind
            .cmp(&b.kind)
            .then_with(|| b.lambda.unwrap_or(0.0).total_cmp(&a.lambda.unwrap_or(0.0)))
            .then_with(|| a.misc_rounds.cmp(&b.misc_rounds))
    });
    rows
}

pub fn emit_fractionality_table(records: &[RunRecord], dir: &Path) -> Result<Emitted> {
    write_rows(&dir.join("fractionality.csv"), &FRAC_HEADER, &fractionality_rows(records))?;
    emit(dir, "fractionality", None)
}

pub const PROFILE_HEADER: [&str; 3] = ["model", "tau", "fraction"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub model: String,
    pub tau: f64,
    pub fraction: f64,
}

/// Performance profile on wall time: for each model, the fraction of
/// instances solved within `tau` times the fastest model's time. Unsolved
/// runs never count.
pub fn performance_profile_rows(records: &[RunRecord]) -> Vec<ProfileRow> {
    let ids: BTreeSet<&str> = records.iter().map(|r| r.instance_id.as_str()).collect();
    let models: BTreeSet<&str> = records.iter().map(|r| r.model.as_str()).collect();
    let mut best: HashMap<&str, f64> = HashMap::new();
    for r in records.iter().filter(|r| r.status.is_solved()) {
        let t = r.wall_time_s.max(1e-9);
        best.entry(r.instance_id.as_str()).and_modify(|b| *b = b.min(t)).or_insert(t);
    }
    let total = ids.len().max(1) as f64;
    let mut rows = Vec::new();
    for m in models {
        let mut ratios: Vec<f64> = records
            .iter()
            .filter(|r| r.model == m && r.status.is_solved())
            .map(|r| r.wall_time_s.max(1e-9) / best[r.instance_id.as_str()])
            .collect();
        ratios.sort_by(f64::total_cmp);
        rows.push(ProfileRow { model: m.to_string(), tau: 1.0, fraction: ratios.iter().filter(|&&t| t <= 1.0).count() as f64 / total });
        for (k, &t) in ratios.iter().enumerate() {
            if t > 1.0 && ratios.get(k + 1) != Some(&t) {
                rows.push(ProfileRow { model: m.to_string(), tau: t, fraction: (k + 1) as f64 / total });
            }
        }
    }
    rows
}

pub fn performance_profile_svg(csv_text: &str) -> Result<String> {
    let rows: Vec<ProfileRow> = read_rows(csv_text)?;
    let max_tau = rows.iter().map(|r| r.tau).fold(1.0, f64::max);
    let mut groups: BTreeMap<&str, Vec<(f64, f64)>> = BTreeMap::new();
    for r in &rows {
        groups.entry(r.model.as_str()).or_default().push((r.tau.log2(), r.fraction));
    }
    let series = groups
        .into_iter()
        .map(|(m, mut p)| {
            let last = p.last().map_or(0.0, |q| q.1);
            p.push((max_tau.log2() * 1.05 + 0.05, last));
            Series { name: m.into(), points: p, mode: Mode::Step }
        })
        .collect();
    Ok(Chart {
        title: "Performance profile (wall time)".into(),
        x_label: "log2 of the ratio to the fastest model".into(),
        y_label: "fraction of instances".into(),
        series,
    }
    .render())
}

pub fn emit_performance_profile(records: &[RunRecord], dir: &Path) -> Result<Emitted> {
    let text = write_rows(&dir.join("performance_profile.csv"), &PROFILE_HEADER, &performance_profile_rows(records))?;
    let svg = performance_profile_svg(&text)?;
    emit(dir, "performance_profile", Some(svg))
}

/// All four reports into `dir`.
pub fn emit_all(records: &[RunRecord], lambdas: &[f64], dir: &Path) -> Result<Vec<Emitted>> {
    std::fs::create_dir_all(dir)?;
    Ok(vec![
        emit_gap_curve(records, &GapPairing::default(), dir)?,
        emit_tradeoff_scatter(records, lambdas, dir)?,
        emit_fractionality_table(records, dir)?,
        emit_performance_profile(records, dir)?,
    ])
}
