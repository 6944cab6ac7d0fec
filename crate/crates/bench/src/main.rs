use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, bail, Context};
use clap::{Parser, Subcommand};
use compactknap::cuts::separate_diagonal;
use compactknap::instgen::{build_ce, generate_instance};
use compactknap::metrics::{exact, format_rational, parse_rational, rational_to_f64, road_check, road_check_exact, MetricReport};
use compactknap::sdp::{Tier, TripleWindow};
use compactknap::Instance;
use compactknap_bench::config::{ModelJob, ModelKind, DEFAULT_LAMBDA};
use compactknap_bench::emit::emit_all;
use compactknap_bench::record::load_records;
use compactknap_bench::{run_benchmark, solve_job, BenchConfig, BenchError, RunStatus};
use num_rational::BigRational;
use serde_json::{json, Value};

const EXIT_USAGE: u8 = 1;
const EXIT_SOLVER: u8 = 2;
const EXIT_TIMEOUT: u8 = 3;

#[derive(Parser)]
#[command(name = "compactknap", version, about = "Min-knapsack with compactness constraints: relaxations, cuts and benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw random instances.
    Generate {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Consecutive seeds starting at --seed; needs --out as a directory when above 1.
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the counterexample instance for a given m.
    GenerateCe {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve one model on one instance and print the result as JSON.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        /// lp, mip, sdp, sdp+, pen or pen+.
        #[arg(long)]
        model: String,
        #[arg(long, default_value_t = DEFAULT_LAMBDA)]
        lambda: f64,
        /// Strengthening tiers such as T1,T3; defaults to all for sdp+ and pen+.
        #[arg(long)]
        tiers: Option<String>,
        /// Largest j - i for three-index rows: an integer, "default" or "full".
        #[arg(long, default_value = "default")]
        triple_window: String,
        #[arg(long, default_value_t = 0)]
        misc_rounds: usize,
        /// Seconds.
        #[arg(long)]
        time_limit: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Look for a violated MISC cut for a diagonal.
    Separate {
        #[arg(long)]
        instance: PathBuf,
        /// JSON array, or a solve result with an "x" field.
        #[arg(long)]
        solution: PathBuf,
    },
    /// Quality metrics of a solution vector.
    Metrics {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        solution: PathBuf,
        /// Best known integer objective, for the gap.
        #[arg(long)]
        ub: Option<f64>,
    },
    /// Check whether the lift of a point is feasible for the naive relaxation.
    Road {
        #[arg(long)]
        instance: PathBuf,
        /// Entries may be numbers or rational strings such as "119/180".
        #[arg(long)]
        solution: PathBuf,
        #[arg(long)]
        exact: bool,
    },
    /// Run a benchmark config and emit all reports.
    Bench {
        #[arg(long)]
        config: PathBuf,
    },
    /// Emit reports from an existing records.csv.
    Plot {
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// λ values for the trade-off scatter, comma separated; all when omitted.
        #[arg(long, value_delimiter = ',')]
        lambdas: Vec<f64>,
    },
}

enum Failure {
    Usage(anyhow::Error),
    Solver(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        let solver = e.chain().any(|c| {
            c.downcast_ref::<BenchError>().is_some_and(BenchError::is_solver_failure)
                || matches!(c.downcast_ref::<compactknap::Error>(), Some(compactknap::Error::SolverFailure(_)))
        });
        if solver {
            Failure::Solver(e)
        } else {
            Failure::Usage(e)
        }
    }
}

impl From<BenchError> for Failure {
    fn from(e: BenchError) -> Self {
        anyhow::Error::from(e).into()
    }
}

impl From<compactknap::Error> for Failure {
    fn from(e: compactknap::Error) -> Self {
        anyhow::Error::from(e).into()
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Solver(e)) => {
            eprintln!("solver failure: {e:#}");
            ExitCode::from(EXIT_SOLVER)
        }
    }
}

fn emit_json(value: &Value, out: Option<&Path>) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(p) => std::fs::write(p, text + "\n").with_context(|| format!("writing {}", p.display()))?,
        None => println!("{text}"),
    }
    Ok(())
}

fn load_instance(path: &Path) -> anyhow::Result<Instance> {
    let inst = Instance::load(path).with_context(|| format!("reading {}", path.display()))?;
    compactknap::ensure_valid(&inst).with_context(|| format!("{}", path.display()))?;
    Ok(inst)
}

/// Accepts a JSON array or an object with an `x` array.
fn load_entries(path: &Path) -> anyhow::Result<Vec<Value>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let v: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let arr = match v {
        Value::Array(a) => a,
        Value::Object(mut o) => match o.remove("x") {
            Some(Value::Array(a)) => a,
            _ => bail!("{}: object has no \"x\" array", path.display()),
        },
        _ => bail!("{}: expected an array of numbers", path.display()),
    };
    Ok(arr)
}

fn entry_rational(v: &Value) -> anyhow::Result<BigRational> {
    match v {
        Value::Number(n) => Ok(exact(n.as_f64().ok_or_else(|| anyhow!("{n} is not a float"))?)?),
        Value::String(s) => Ok(parse_rational(s)?),
        other => bail!("solution entry {other} is neither a number nor a rational string"),
    }
}

fn load_vector(path: &Path) -> anyhow::Result<Vec<f64>> {
    load_entries(path)?
        .iter()
        .map(|v| match v {
            Value::Number(n) => n.as_f64().ok_or_else(|| anyhow!("{n} is not a float")),
            _ => Ok(rational_to_f64(&entry_rational(v)?)),
        })
        .collect()
}

fn write_instance(inst: &Instance, out: Option<&Path>) -> anyhow::Result<()> {
    match out {
        Some(p) => inst.save(p).with_context(|| format!("writing {}", p.display()))?,
        None => println!("{}", inst.to_json()),
    }
    Ok(())
}

fn run(cmd: Command) -> Result<u8, Failure> {
    match cmd {
        Command::Generate { n, seed, count, out } => {
            if count == 0 {
                return Err(anyhow!("--count must be at least 1").into());
            }
            if count == 1 {
                write_instance(&generate_instance(n, seed)?, out.as_deref())?;
                return Ok(0);
            }
            let dir = out.ok_or_else(|| anyhow!("--out <dir> is required when --count is above 1"))?;
            std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
            for s in seed..seed + count as u64 {
                write_instance(&generate_instance(n, s)?, Some(&dir.join(format!("gen-n{n}-s{s}.json"))))?;
            }
            Ok(0)
        }
        Command::GenerateCe { m, out } => {
            write_instance(&build_ce(m)?, out.as_deref())?;
            Ok(0)
        }
        Command::Solve { instance, model, lambda, tiers, triple_window, misc_rounds, time_limit, out } => {
            let inst = load_instance(&instance)?;
            let kind: ModelKind = model.parse()?;
            let mut job = ModelJob::new(kind).with_misc_rounds(misc_rounds);
            if kind.is_penalized() {
                job = job.with_lambda(lambda);
            }
            if let Some(t) = tiers {
                job.tiers = Tier::parse_list(&t)?;
            }
            job.triple_window = triple_window.parse::<TripleWindow>()?;
            job.validate()?;
            let limit = match time_limit {
                Some(t) if t > 0.0 && t.is_finite() => Some(Duration::from_secs_f64(t)),
                Some(t) => return Err(anyhow!("--time-limit must be positive, got {t}").into()),
                None => None,
            };
            let res = solve_job(&inst, &job, limit)?;
            let metrics = res.x.as_ref().map(|x| MetricReport::compute(&inst, x, None)).transpose()?;
            let value = json!({
                "instance": instance.display().to_string(),
                "model": job.id(),
                "status": res.status,
                "objective": res.objective,
                "bound": res.bound,
                "iterations": res.iterations,
                "wall_time_s": res.wall_time.as_secs_f64(),
                "metrics": metrics,
                "cuts": res.cuts,
                "x": res.x,
            });
            emit_json(&value, out.as_deref())?;
            Ok(match res.status {
                RunStatus::Optimal | RunStatus::NearOptimal | RunStatus::Infeasible => 0,
                RunStatus::TimeLimit => EXIT_TIMEOUT,
                RunStatus::IterationLimit | RunStatus::Failed => EXIT_SOLVER,
            })
        }
        Command::Separate { instance, solution } => {
            let inst = load_instance(&instance)?;
            let diag = load_vector(&solution)?;
            let out = separate_diagonal(&inst, &diag)?;
            emit_json(&serde_json::to_value(&out).map_err(anyhow::Error::from)?, None)?;
            Ok(0)
        }
        Command::Metrics { instance, solution, ub } => {
            let inst = load_instance(&instance)?;
            let x = load_vector(&solution)?;
            let m = MetricReport::compute(&inst, &x, ub)?;
            emit_json(&serde_json::to_value(&m).map_err(anyhow::Error::from)?, None)?;
            Ok(0)
        }
        Command::Road { instance, solution, exact } => {
            let inst = load_instance(&instance)?;
            let value = if exact {
                let x: Vec<BigRational> = load_entries(&solution)?.iter().map(entry_rational).collect::<anyhow::Result<_>>()?;
                let rep = road_check_exact(&inst, &x)?;
                let violations: Vec<Value> = rep
                    .violations
                    .iter()
                    .map(|v| json!({"kind": v.kind, "i": v.i + 1, "j": v.j + 1, "lhs": format_rational(&v.lhs), "rhs": format_rational(&v.rhs)}))
                    .collect();
                json!({"holds": rep.holds, "violations": violations})
            } else {
                serde_json::to_value(road_check(&inst, &load_vector(&solution)?)?).map_err(anyhow::Error::from)?
            };
            emit_json(&value, None)?;
            Ok(0)
        }
        Command::Bench { config } => {
            let cfg = BenchConfig::load(&config)?;
            let run = run_benchmark(&cfg)?;
            emit_all(&run.records, &[], &cfg.output_dir)?;
            let failed = run.records.iter().filter(|r| r.status == RunStatus::Failed).count();
            eprintln!("{} records written to {} ({failed} failed)", run.records.len(), run.csv_path.display());
            Ok(if run.hit_time_limit() { EXIT_TIMEOUT } else { 0 })
        }
        Command::Plot { records, out, lambdas } => {
            let recs = load_records(&records).with_context(|| format!("reading {}", records.display()))?;
            for e in emit_all(&recs, &lambdas, &out)? {
                eprintln!("wrote {}", e.csv.display());
                if let Some(s) = e.svg {
                    eprintln!("wrote {}", s.display());
                }
            }
            Ok(0)
        }
    }
}
