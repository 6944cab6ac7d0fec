//! Experiment configuration, read from JSON.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use compactknap::sdp::{Tier, TripleWindow};
use compactknap::Instance;
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

/// Environment variable that overrides the configured worker count.
pub const WORKERS_ENV: &str = "COMPACTKNAP_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "lp")]
    Lp,
    #[serde(rename = "mip")]
    Mip,
    #[serde(rename = "sdp")]
    Sdp,
    #[serde(rename = "sdp+")]
    SdpPlus,
    #[serde(rename = "pen")]
    Pen,
    #[serde(rename = "pen+")]
    PenPlus,
}

impl ModelKind {
    pub const ALL: [ModelKind; 6] =
        [ModelKind::Lp, ModelKind::Mip, ModelKind::Sdp, ModelKind::SdpPlus, ModelKind::Pen, ModelKind::PenPlus];

    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Lp => "lp",
            ModelKind::Mip => "mip",
            ModelKind::Sdp => "sdp",
            ModelKind::SdpPlus => "sdp+",
            ModelKind::Pen => "pen",
            ModelKind::PenPlus => "pen+",
        }
    }

    pub fn is_conic(&self) -> bool {
        !matches!(self, ModelKind::Lp | ModelKind::Mip)
    }

    pub fn is_penalized(&self) -> bool {
        matches!(self, ModelKind::Pen | ModelKind::PenPlus)
    }

    pub fn is_strengthened(&self) -> bool {
        matches!(self, ModelKind::SdpPlus | ModelKind::PenPlus)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| BenchError::Config(format!("unknown model {s:?} (expected lp, mip, sdp, sdp+, pen or pen+)")))
    }
}

/// One solve configuration: a model with its options and, for penalized
/// models, a single λ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelJob {
    pub kind: ModelKind,
    pub lambda: Option<f64>,
    pub tiers: Vec<Tier>,
    pub triple_window: TripleWindow,
    pub misc_rounds: usize,
}

impl ModelJob {
    pub fn new(kind: ModelKind) -> Self {
        let tiers = if kind.is_strengthened() { Tier::ALL.to_vec() } else { Vec::new() };
        let lambda = kind.is_penalized().then_some(DEFAULT_LAMBDA);
        ModelJob { kind, lambda, tiers, triple_window: TripleWindow::Default, misc_rounds: 0 }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = Some(lambda);
        self
    }

    pub fn with_misc_rounds(mut self, rounds: usize) -> Self {
        self.misc_rounds = rounds;
        self
    }

    /// Stable identifier such as `sdp+`, `pen+@1e-3` or `pen+@1e-2/misc1`.
    pub fn id(&self) -> String {
        let mut id = self.kind.name().to_string();
        if let Some(l) = self.lambda {
            id.push('@');
            id.push_str(&format_lambda(l));
        }
        if self.misc_rounds > 0 {
            id.push_str(&format!("/misc{}", self.misc_rounds));
        }
        id
    }

    pub fn validate(&self) -> Result<()> {
        match (self.kind.is_penalized(), self.lambda) {
            (true, None) => return Err(BenchError::Config(format!("{} needs a λ value", self.kind))),
            (false, Some(_)) => return Err(BenchError::Config(format!("{} takes no λ value", self.kind))),
            (true, Some(l)) if !(l >= 0.0 && l.is_finite()) => {
                return Err(BenchError::Config(format!("λ must be finite and nonnegative, got {l}")))
            }
            _ => {}
        }
        if self.misc_rounds > 0 && !self.kind.is_conic() {
            return Err(BenchError::Config(format!("MISC rounds apply to conic models only, not {}", self.kind)));
        }
        if !self.tiers.is_empty() && !self.kind.is_conic() {
            return Err(BenchError::Config(format!("strengthening tiers apply to conic models only, not {}", self.kind)));
        }
        Ok(())
    }
}

pub const DEFAULT_LAMBDA: f64 = 1e-3;

/// The default λ grid, `1e-1` down to `1e-6`.
pub const LAMBDA_GRID: [f64; 6] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6];

/// Shortest decimal form in exponent notation: `1e-3`, `2.5e-1`, `1e0`.
pub fn format_lambda(l: f64) -> String {
    format!("{l:e}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceSource {
    /// Every `*.json` file in the directory, ordered by file name.
    Directory(PathBuf),
    Generated { count: usize, n: usize, seed_base: u64 },
    /// The counterexample family for each listed `m`.
    Counterexamples(Vec<usize>),
}

/// A model entry in the config; expands to one [`ModelJob`] per λ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub model: ModelKind,
    #[serde(default)]
    pub lambdas: Vec<f64>,
    /// Defaults to all four tiers for strengthened models.
    #[serde(default)]
    pub tiers: Option<Vec<Tier>>,
    #[serde(default)]
    pub triple_window: TripleWindow,
    #[serde(default)]
    pub misc_rounds: usize,
}

impl ModelSpec {
    pub fn new(model: ModelKind) -> Self {
        ModelSpec { model, lambdas: Vec::new(), tiers: None, triple_window: TripleWindow::Default, misc_rounds: 0 }
    }

    pub fn jobs(&self) -> Vec<ModelJob> {
        let mut base = ModelJob::new(self.model);
        if let Some(t) = &self.tiers {
            base.tiers = t.clone();
        }
        base.triple_window = self.triple_window;
        base.misc_rounds = self.misc_rounds;
        if !self.model.is_penalized() {
            return vec![base];
        }
        let lambdas = if self.lambdas.is_empty() { vec![DEFAULT_LAMBDA] } else { self.lambdas.clone() };
        lambdas.into_iter().map(|l| base.clone().with_lambda(l)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub instances: InstanceSource,
    pub models: Vec<ModelSpec>,
    /// Seconds per solve.
    #[serde(default = "default_time_limit")]
    pub time_limit: f64,
    pub output_dir: PathBuf,
    /// Defaults to the available parallelism.
    #[serde(default)]
    pub workers: Option<usize>,
}

fn default_time_limit() -> f64 {
    600.0
}

impl BenchConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))?;
        let cfg: BenchConfig = serde_json::from_str(&text).map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.time_limit > 0.0 && self.time_limit.is_finite()) {
            return Err(BenchError::Config(format!("time limit must be positive, got {}", self.time_limit)));
        }
        if self.workers == Some(0) {
            return Err(BenchError::Config("worker count must be at least 1".into()));
        }
        for spec in &self.models {
            if !spec.model.is_penalized() && !spec.lambdas.is_empty() {
                return Err(BenchError::Config(format!("{} takes no λ values", spec.model)));
            }
            for job in spec.jobs() {
                job.validate()?;
            }
        }
        Ok(())
    }

    pub fn jobs(&self) -> Vec<ModelJob> {
        self.models.iter().flat_map(|m| m.jobs()).collect()
    }

    /// The environment override wins over the config value.
    pub fn resolved_workers(&self) -> Result<usize> {
        if let Ok(v) = std::env::var(WORKERS_ENV) {
            return match v.trim().parse::<usize>() {
                Ok(w) if w > 0 => Ok(w),
                _ => Err(BenchError::Config(format!("{WORKERS_ENV} must be a positive integer, got {v:?}"))),
            };
        }
        Ok(self.workers.unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)))
    }
}

/// Loads or generates the instances with their ids.
pub fn load_instances(source: &InstanceSource) -> Result<Vec<(String, Instance)>> {
    let mut out = Vec::new();
    match source {
        InstanceSource::Directory(dir) => {
            let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "json"))
                .collect();
            paths.sort();
            for p in paths {
                let id = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                let inst = Instance::load(&p).map_err(|e| BenchError::Config(format!("{}: {e}", p.display())))?;
                out.push((id, inst));
            }
        }
        InstanceSource::Generated { count, n, seed_base } => {
            for k in 0..*count as u64 {
                let seed = seed_base + k;
                out.push((format!("gen-n{n}-s{seed}"), compactknap::instgen::generate_instance(*n, seed)?));
            }
        }
        InstanceSource::Counterexamples(ms) => {
            for &m in ms {
                out.push((format!("ce-{m:03}"), compactknap::instgen::build_ce(m)?));
            }
        }
    }
    for (id, inst) in &out {
        let problems = compactknap::validate_instance(inst);
        if !problems.is_empty() {
            return Err(BenchError::Config(format!("instance {id} is invalid: {}", problems.join("; "))));
        }
    }
    Ok(out)
}
