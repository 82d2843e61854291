//! Config loading and validation for the experiment runner.
//!
//! A run is described by a TOML file with top-level keys `experiment`,
//! `seed`, `output_path`, and a `[parameters]` table. Every key is checked
//! against the experiment's schema before any computation starts, so a bad
//! config never produces output files.

use std::env;
use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use toml::{Table, Value};
use worklock::homogenizer::ReuseTask;
use worklock::protocol::RotationTarget;

/// Failure split by exit code: `Config` means the run was rejected before
/// any computation (exit 2); `Runtime` means it started and could not
/// finish cleanly (exit 3). Neither leaves partial output files behind.
#[derive(Debug)]
pub enum CliError {
    Config(anyhow::Error),
    Runtime(anyhow::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "{e:#}"),
            CliError::Runtime(e) => write!(f, "{e:#}"),
        }
    }
}

impl From<worklock::Error> for CliError {
    fn from(e: worklock::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

fn config_err(msg: String) -> CliError {
    CliError::Config(anyhow!(msg))
}

/// Registry entry: name, default output file, one-line summary, and the
/// parameter schema shown by `worklock list`.
pub struct ExperimentInfo {
    pub name: &'static str,
    pub default_output: &'static str,
    pub summary: &'static str,
    pub params: &'static str,
}

pub const EXPERIMENTS: &[ExperimentInfo] = &[
    ExperimentInfo {
        name: "protocol",
        default_output: "protocol.csv",
        summary: "repeated work-extraction cycles against one ladder reference (CSV)",
        params: "p=0.5 phi=0.0 r=0.1 l=100 kt=1.0 cycles=1 target=coherent-gibbs quality=(max)",
    },
    ExperimentInfo {
        name: "sweep",
        default_output: "sweep.csv",
        summary: "coherent vs incoherent certification over an (r, quality) grid (CSV)",
        params: "l=100 kt=1.0 r_min=0.05 r_max=0.95 r_step=0.05 quality_min=0.0 quality_max=0.99 quality_step=0.05",
    },
    ExperimentInfo {
        name: "homogenizer",
        default_output: "homogenizer.csv",
        summary: "collision-model convergence of one qubit toward the reservoir state (CSV)",
        params: "n=50 eta=0.3 p=0.0 phi=0.0 xi_excited=0.5",
    },
    ExperimentInfo {
        name: "reuse",
        default_output: "reuse.csv",
        summary: "task error and reservoir drift across repeated reservoir uses (CSV)",
        params: "task=pure_to_mixed n=100 eta=0.1 m=100",
    },
    ExperimentInfo {
        name: "nogo-audit",
        default_output: "nogo_audit.json",
        summary: "unitary-invariance audit plus pairwise work-task verdicts (JSON)",
        params: "n_trials=1000",
    },
    ExperimentInfo {
        name: "tolerance",
        default_output: "tolerance.json",
        summary: "certified work and failure bound under detuned input probability (JSON)",
        params: "p_center=0.5 l=50 kt=1.0 deltas=[-0.2,...,0.2] quality=(max)",
    },
];

pub fn experiments_list_text() -> String {
    let mut out = String::from("available experiments:\n\n");
    for e in EXPERIMENTS {
        out.push_str(&format!("  {:<12} {}\n", e.name, e.summary));
        out.push_str(&format!("  {:<12}   parameters: {}\n", "", e.params));
        out.push_str(&format!(
            "  {:<12}   default output: {}\n\n",
            "", e.default_output
        ));
    }
    out.push_str("run one with: worklock run <config.toml> [--set key=value]...\n");
    out
}

#[derive(Debug, Clone)]
pub struct ProtocolParams {
    pub p: f64,
    pub phi: f64,
    pub r: f64,
    pub l: usize,
    pub quality: Option<f64>,
    pub kt: f64,
    pub cycles: usize,
    pub target: RotationTarget,
}

#[derive(Debug, Clone)]
pub struct SweepParams {
    pub l: usize,
    pub kt: f64,
    pub r_grid: Vec<f64>,
    pub quality_grid: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct HomogenizerParams {
    pub n: usize,
    pub eta: f64,
    pub p: f64,
    pub phi: f64,
    pub xi_excited: f64,
}

#[derive(Debug, Clone)]
pub struct ReuseParams {
    pub task: ReuseTask,
    pub n: usize,
    pub eta: f64,
    pub m: usize,
}

#[derive(Debug, Clone)]
pub struct AuditParams {
    pub n_trials: usize,
}

#[derive(Debug, Clone)]
pub struct ToleranceParams {
    pub p_center: f64,
    pub l: usize,
    pub quality: Option<f64>,
    pub kt: f64,
    pub deltas: Vec<f64>,
}

#[derive(Debug, Clone)]
pub enum ExperimentPlan {
    Protocol(ProtocolParams),
    Sweep(SweepParams),
    Homogenizer(HomogenizerParams),
    Reuse(ReuseParams),
    NogoAudit(AuditParams),
    Tolerance(ToleranceParams),
}

/// Fully validated run description.
pub struct RunConfig {
    pub experiment: &'static str,
    pub plan: ExperimentPlan,
    pub seed: u64,
    pub output_path: PathBuf,
    /// Merged parameter table (file values after `--set` overrides), echoed
    /// into the run manifest.
    pub parameters: Table,
}

/// Loads, merges, and validates a run config. Precedence: file values,
/// then `--set` overrides, then the `--seed` flag.
pub fn load(path: &Path, overrides: &[String], seed_flag: Option<u64>) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config file {}", path.display()))
        .map_err(CliError::Config)?;
    let root: Table = text
        .parse()
        .with_context(|| format!("{} is not valid TOML", path.display()))
        .map_err(CliError::Config)?;

    let mut experiment: Option<String> = None;
    let mut seed: u64 = 0;
    let mut output_path: Option<String> = None;
    let mut params = Table::new();

    for (key, value) in root {
        match key.as_str() {
            "experiment" => experiment = Some(as_string(&key, value)?),
            "seed" => seed = as_seed(value)?,
            "output_path" => output_path = Some(as_string(&key, value)?),
            "parameters" => match value {
                Value::Table(t) => params = t,
                other => {
                    return Err(config_err(format!(
                        "`parameters` must be a table, got {}",
                        other.type_str()
                    )))
                }
            },
            other => {
                return Err(config_err(format!(
                    "unknown top-level key `{other}` (expected experiment, seed, output_path, parameters)"
                )))
            }
        }
    }

    for entry in overrides {
        let (key, raw) = entry.split_once('=').ok_or_else(|| {
            config_err(format!("--set needs KEY=VALUE, got `{entry}`"))
        })?;
        let value = parse_override_value(raw);
        match key {
            "experiment" => experiment = Some(as_string(key, value)?),
            "seed" => seed = as_seed(value)?,
            "output_path" => output_path = Some(as_string(key, value)?),
            _ => {
                params.insert(key.to_string(), value);
            }
        }
    }
    if let Some(s) = seed_flag {
        seed = s;
    }

    let name = experiment.ok_or_else(|| config_err("config is missing `experiment`".into()))?;
    let info = EXPERIMENTS.iter().find(|e| e.name == name).ok_or_else(|| {
        config_err(format!(
            "unknown experiment `{name}`\n\n{}",
            experiments_list_text()
        ))
    })?;

    let plan = build_plan(info.name, &params)?;
    let output_path = resolve_output(output_path.as_deref().unwrap_or(info.default_output));
    Ok(RunConfig {
        experiment: info.name,
        plan,
        seed,
        output_path,
        parameters: params,
    })
}

/// Relative output paths land under WORKLOCK_OUTPUT_DIR when that is set.
fn resolve_output(raw: &str) -> PathBuf {
    let p = PathBuf::from(raw);
    if p.is_absolute() {
        return p;
    }
    match env::var_os("WORKLOCK_OUTPUT_DIR") {
        Some(dir) => PathBuf::from(dir).join(p),
        None => p,
    }
}

/// `--set` values parse as TOML scalars or arrays; anything unparseable is
/// kept as a string, so `--set task=mixed_to_pure` needs no quoting.
fn parse_override_value(raw: &str) -> Value {
    let doc = format!("v = {raw}");
    match doc.parse::<Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| Value::String(raw.to_string())),
        Err(_) => Value::String(raw.to_string()),
    }
}

fn as_string(key: &str, value: Value) -> Result<String> {
    match value {
        Value::String(s) => Ok(s),
        other => Err(config_err(format!(
            "`{key}` must be a string, got {}",
            other.type_str()
        ))),
    }
}

fn as_seed(value: Value) -> Result<u64> {
    match value {
        Value::Integer(i) if i >= 0 => Ok(i as u64),
        other => Err(config_err(format!(
            "`seed` must be a non-negative integer, got {other}"
        ))),
    }
}

/// Typed reader over the parameter table. Reads remove nothing from the
/// caller's copy; `finish` rejects keys the schema never asked for.
struct ParamReader<'a> {
    experiment: &'static str,
    table: &'a Table,
    seen: Vec<&'static str>,
}

impl<'a> ParamReader<'a> {
    fn new(experiment: &'static str, table: &'a Table) -> Self {
        Self {
            experiment,
            table,
            seen: Vec::new(),
        }
    }

    fn get(&mut self, key: &'static str) -> Option<&'a Value> {
        self.seen.push(key);
        self.table.get(key)
    }

    fn f64(&mut self, key: &'static str, default: f64) -> Result<f64> {
        self.opt_f64(key).map(|v| v.unwrap_or(default))
    }

    fn opt_f64(&mut self, key: &'static str) -> Result<Option<f64>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Float(x)) => Ok(Some(*x)),
            Some(Value::Integer(i)) => Ok(Some(*i as f64)),
            Some(other) => Err(self.type_err(key, "a number", other)),
        }
    }

    fn usize(&mut self, key: &'static str, default: usize) -> Result<usize> {
        match self.get(key) {
            None => Ok(default),
            Some(Value::Integer(i)) if *i >= 0 => Ok(*i as usize),
            Some(other) => Err(self.type_err(key, "a non-negative integer", other)),
        }
    }

    fn string(&mut self, key: &'static str, default: &str) -> Result<String> {
        match self.get(key) {
            None => Ok(default.to_string()),
            Some(Value::String(s)) => Ok(s.clone()),
            Some(other) => Err(self.type_err(key, "a string", other)),
        }
    }

    fn f64_list(&mut self, key: &'static str, default: &[f64]) -> Result<Vec<f64>> {
        let values = match self.get(key) {
            None => return Ok(default.to_vec()),
            Some(Value::Array(a)) => a,
            Some(other) => return Err(self.type_err(key, "an array of numbers", other)),
        };
        values
            .iter()
            .map(|v| match v {
                Value::Float(x) => Ok(*x),
                Value::Integer(i) => Ok(*i as f64),
                other => Err(self.type_err(key, "an array of numbers", other)),
            })
            .collect()
    }

    fn type_err(&self, key: &str, expected: &str, got: &Value) -> CliError {
        config_err(format!(
            "parameter `{key}` for experiment `{}` must be {expected}, got {}",
            self.experiment,
            got.type_str()
        ))
    }

    fn finish(self) -> Result<()> {
        for key in self.table.keys() {
            if !self.seen.contains(&key.as_str()) {
                return Err(config_err(format!(
                    "unknown parameter `{key}` for experiment `{}` (expected: {})",
                    self.experiment,
                    self.seen.join(", ")
                )));
            }
        }
        Ok(())
    }
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(config_err(msg()))
    }
}

fn check_kt(kt: f64) -> Result<()> {
    check(kt.is_finite() && kt > 0.0, || {
        format!("kt must be a positive temperature, got {kt}")
    })
}

fn check_ladder(l: usize) -> Result<()> {
    check(l >= 2, || format!("l must be at least 2, got {l}"))
}

fn check_unit(name: &str, x: f64) -> Result<()> {
    check(x.is_finite() && (0.0..=1.0).contains(&x), || {
        format!("{name} must lie in [0, 1], got {x}")
    })
}

fn check_open_unit(name: &str, x: f64) -> Result<()> {
    check(x.is_finite() && x > 0.0 && x < 1.0, || {
        format!("{name} must lie strictly inside (0, 1), got {x}")
    })
}

fn check_eta(eta: f64) -> Result<()> {
    check(eta.is_finite() && eta > 0.0 && eta <= FRAC_PI_2, || {
        format!("eta must lie in (0, pi/2], got {eta}")
    })
}

fn check_quality(quality: Option<f64>, l: usize) -> Result<()> {
    if let Some(t) = quality {
        let max = (l as f64 - 1.0) / l as f64;
        check(t.is_finite() && t >= 0.0 && t <= max, || {
            format!("quality {t} outside the feasible range [0, {max}] for l = {l}")
        })?;
    }
    Ok(())
}

/// Evenly stepped grid from `min` by `step`, stopping at the last value
/// that does not overshoot `max` (half-ulp slack keeps 0.05-style steps
/// from dropping the endpoint).
fn float_grid(name: &str, min: f64, max: f64, step: f64) -> Result<Vec<f64>> {
    check(min.is_finite() && max.is_finite() && step.is_finite(), || {
        format!("{name} grid bounds must be finite")
    })?;
    check(step > 0.0, || format!("{name}_step must be positive, got {step}"))?;
    check(min <= max, || {
        format!("{name}_min {min} exceeds {name}_max {max}")
    })?;
    let count = ((max - min) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| min + i as f64 * step).collect())
}

const DEFAULT_DELTAS: [f64; 10] = [
    -0.2, -0.1, -0.05, -0.02, -0.01, 0.01, 0.02, 0.05, 0.1, 0.2,
];

fn build_plan(name: &'static str, params: &Table) -> Result<ExperimentPlan> {
    let mut r = ParamReader::new(name, params);
    let plan = match name {
        "protocol" => {
            let p = r.f64("p", 0.5)?;
            let phi = r.f64("phi", 0.0)?;
            let rate = r.f64("r", 0.1)?;
            let l = r.usize("l", 100)?;
            let quality = r.opt_f64("quality")?;
            let kt = r.f64("kt", 1.0)?;
            let cycles = r.usize("cycles", 1)?;
            let target = match r.string("target", "coherent-gibbs")?.as_str() {
                "coherent-gibbs" => RotationTarget::CoherentGibbs,
                "excited" => RotationTarget::Excited,
                other => {
                    return Err(config_err(format!(
                        "target must be `coherent-gibbs` or `excited`, got `{other}`"
                    )))
                }
            };
            r.finish()?;
            check_unit("p", p)?;
            check_open_unit("r", rate)?;
            check_ladder(l)?;
            check_quality(quality, l)?;
            check_kt(kt)?;
            check(cycles >= 1, || "cycles must be at least 1".into())?;
            ExperimentPlan::Protocol(ProtocolParams {
                p,
                phi,
                r: rate,
                l,
                quality,
                kt,
                cycles,
                target,
            })
        }
        "sweep" => {
            let l = r.usize("l", 100)?;
            let kt = r.f64("kt", 1.0)?;
            let r_min = r.f64("r_min", 0.05)?;
            let r_max = r.f64("r_max", 0.95)?;
            let r_step = r.f64("r_step", 0.05)?;
            let q_min = r.f64("quality_min", 0.0)?;
            let q_max = r.f64("quality_max", 0.99)?;
            let q_step = r.f64("quality_step", 0.05)?;
            r.finish()?;
            check_ladder(l)?;
            check_kt(kt)?;
            check_open_unit("r_min", r_min)?;
            check_open_unit("r_max", r_max)?;
            check_unit("quality_min", q_min)?;
            check_unit("quality_max", q_max)?;
            let r_grid = float_grid("r", r_min, r_max, r_step)?;
            let quality_grid = float_grid("quality", q_min, q_max, q_step)?;
            ExperimentPlan::Sweep(SweepParams {
                l,
                kt,
                r_grid,
                quality_grid,
            })
        }
        "homogenizer" => {
            let n = r.usize("n", 50)?;
            let eta = r.f64("eta", 0.3)?;
            let p = r.f64("p", 0.0)?;
            let phi = r.f64("phi", 0.0)?;
            let xi_excited = r.f64("xi_excited", 0.5)?;
            r.finish()?;
            check(n >= 1, || "n must be at least 1".into())?;
            check_eta(eta)?;
            check_unit("p", p)?;
            check_unit("xi_excited", xi_excited)?;
            ExperimentPlan::Homogenizer(HomogenizerParams {
                n,
                eta,
                p,
                phi,
                xi_excited,
            })
        }
        "reuse" => {
            let task = match r.string("task", "pure_to_mixed")?.as_str() {
                "pure_to_mixed" => ReuseTask::PureToMixed,
                "mixed_to_pure" => ReuseTask::MixedToPure,
                other => {
                    return Err(config_err(format!(
                        "task must be `pure_to_mixed` or `mixed_to_pure`, got `{other}`"
                    )))
                }
            };
            let n = r.usize("n", 100)?;
            let eta = r.f64("eta", 0.1)?;
            let m = r.usize("m", 100)?;
            r.finish()?;
            check(n >= 1, || "n must be at least 1".into())?;
            check_eta(eta)?;
            check(m >= 1, || "m must be at least 1".into())?;
            ExperimentPlan::Reuse(ReuseParams { task, n, eta, m })
        }
        "nogo-audit" => {
            let n_trials = r.usize("n_trials", 1000)?;
            r.finish()?;
            check(n_trials >= 1, || "n_trials must be at least 1".into())?;
            ExperimentPlan::NogoAudit(AuditParams { n_trials })
        }
        "tolerance" => {
            let p_center = r.f64("p_center", 0.5)?;
            let l = r.usize("l", 50)?;
            let quality = r.opt_f64("quality")?;
            let kt = r.f64("kt", 1.0)?;
            let deltas = r.f64_list("deltas", &DEFAULT_DELTAS)?;
            r.finish()?;
            check_open_unit("p_center", p_center)?;
            check_ladder(l)?;
            check_quality(quality, l)?;
            check_kt(kt)?;
            check(!deltas.is_empty(), || "deltas must be non-empty".into())?;
            for d in &deltas {
                let shifted = p_center + d;
                check(shifted > 0.0 && shifted < 1.0, || {
                    format!("delta {d} pushes p_center + delta to {shifted}, outside (0, 1)")
                })?;
            }
            ExperimentPlan::Tolerance(ToleranceParams {
                p_center,
                l,
                quality,
                kt,
                deltas,
            })
        }
        other => unreachable!("experiment `{other}` missing from registry"),
    };
    Ok(plan)
}
