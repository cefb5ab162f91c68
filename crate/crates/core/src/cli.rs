//! Command-line front end: config parsing, subcommands and exit codes.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use crate::asymptotics::{confidence_interval, rate_terms, Design, Regime};
use crate::error::{invalid, Error, Result};
use crate::estimators::{estimate, EstimatorInput};
use crate::graph::{check_events, Adjacency};
use crate::kernels::{Kernel, ModelParams, DEFAULT_Q};
use crate::mc::{run_experiment, verdicts, write_atomic, ExperimentConfig, Mode, Thresholds};
use crate::oracle::analyze_graph;
use crate::rng::mix;
use crate::sim::{simulate_with, EventLog, SimOptions, SimPath, DEFAULT_EVENT_CAP};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_EXPLOSION: i32 = 3;
pub const EXIT_CHECK_FAILED: i32 = 4;

/// A recognized config key and its accepted range.
pub struct KeySpec {
    pub name: &'static str,
    pub range: &'static str,
    pub help: &'static str,
}

pub const KEYS: &[KeySpec] = &[
    KeySpec { name: "mu", range: "(0, inf)", help: "baseline intensity (required by simulate, mc, graph-oracle)" },
    KeySpec { name: "p", range: "[0, 1]", help: "edge probability (required unless kernel = zero)" },
    KeySpec { name: "kernel", range: "exponential | indicator | zero", help: "memory kernel family [exponential]" },
    KeySpec { name: "lambda", range: "[0, inf)", help: "kernel mass Λ (required unless kernel = zero)" },
    KeySpec { name: "kernel_rate", range: "(0, inf)", help: "exponential decay rate [1]" },
    KeySpec { name: "kernel_width", range: "(0, inf)", help: "indicator support width [1]" },
    KeySpec { name: "n", range: "integer >= 1", help: "number of processes N (required)" },
    KeySpec { name: "k", range: "integer in [1, n]", help: "observed processes K [n]" },
    KeySpec { name: "t", range: "[1, inf)", help: "estimation time; estimators read (t, 2t]" },
    KeySpec { name: "q", range: "integer >= 4", help: "moment order fixing the block length Δ_t [7]" },
    KeySpec { name: "horizon", range: "(0, inf)", help: "simulation horizon (simulate: required; estimate: [2t])" },
    KeySpec { name: "master_seed", range: "integer in [0, 2^64)", help: "root of all randomness [0]" },
    KeySpec { name: "replicates", range: "integer >= 1", help: "Monte Carlo replicates R (required by mc)" },
    KeySpec { name: "mode", range: "full | matrix_only | p_zero", help: "mc experiment kind [full]" },
    KeySpec { name: "separation_threshold", range: "(0, inf)", help: "dominance ratio max/(sum-max) [5]" },
    KeySpec { name: "alpha", range: "(0, 1]", help: "confidence level of the interval for p [0.05]" },
    KeySpec { name: "forced_regime", range: "none | i | ii | iii", help: "normalize by this regime even when mixed [none]" },
    KeySpec { name: "workers", range: "integer >= 1", help: "worker threads [all cores]" },
    KeySpec { name: "scaling_doublings", range: "integer in [0, 6]", help: "matrix_only: extra (2^j N, 2^j K) scaling rows [0]" },
    KeySpec { name: "event_cap", range: "integer >= 1", help: "abort a simulation after this many events [1e8]" },
    KeySpec { name: "simulation_path", range: "auto | generic", help: "thinning implementation [auto]" },
    KeySpec { name: "output_dir", range: "path", help: "directory for output files [.]" },
    KeySpec { name: "checks", range: "on | off", help: "evaluate mc pass/fail checks [on]" },
    KeySpec { name: "sd_ratio_low", range: "(0, inf)", help: "mc check: lower bound of sd(z)/theory sd" },
    KeySpec { name: "sd_ratio_high", range: "(0, inf)", help: "mc check: upper bound of sd(z)/theory sd" },
    KeySpec { name: "ks_max", range: "(0, 1]", help: "mc check: KS distance bound" },
    KeySpec { name: "coverage_min", range: "[0, 1]", help: "mc check: CI coverage lower bound" },
    KeySpec { name: "omega_min", range: "[0, 1]", help: "mc check: Ω_{N,K} frequency lower bound" },
    KeySpec { name: "scaling_ratio_low", range: "(0, inf)", help: "mc check: lower bound of the first scaling ratio" },
    KeySpec { name: "scaling_ratio_high", range: "(0, inf)", help: "mc check: upper bound of the first scaling ratio" },
    KeySpec { name: "above_0_9_low", range: "[0, 1]", help: "mc check: lower bound of P(p_hat > 0.9)" },
    KeySpec { name: "above_0_9_high", range: "[0, 1]", help: "mc check: upper bound of P(p_hat > 0.9)" },
    KeySpec { name: "below_0_1_min", range: "[0, 1]", help: "mc check: lower bound of P(p_hat < 0.1)" },
];

fn keys_help() -> String {
    let mut s = String::from(
        "Config file: one `key = value` per line (`#` starts a comment), or a flat JSON\n\
         object when the file name ends in .json. Unknown keys are rejected.\n\nKeys:\n",
    );
    for k in KEYS {
        s.push_str(&format!("  {:<22} {:<32} {}\n", k.name, k.range, k.help));
    }
    s.push_str("\nExit codes: 0 ok, 2 config/input error, 3 simulation explosion, 4 failed check.");
    s
}

#[derive(Parser, Debug)]
#[command(name = "mfhawkes", version, about = "Mean-field Hawkes simulation and inference of the connection probability", after_help = keys_help())]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug)]
struct Common {
    /// Config file (key = value, or JSON by extension).
    #[arg(short, long)]
    config: PathBuf,
    /// Override a config key, e.g. --set replicates=10. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory (overrides the output_dir key).
    #[arg(short, long)]
    output_dir: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample θ, simulate on [0, horizon] and write events.csv.
    Simulate(Common),
    /// Estimate (μ, Λ, p) from an events file and write estimate.json.
    Estimate {
        #[command(flatten)]
        common: Common,
        /// Events CSV with header "process,time".
        #[arg(short, long)]
        events: PathBuf,
    },
    /// Run a Monte Carlo experiment; writes replicates.csv and summary.json.
    Mc(Common),
    /// Sample θ and write the matrix quantities to graph_oracle.json and ell.csv.
    GraphOracle(Common),
}

/// Parsed config: key → (raw value, source line).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    values: BTreeMap<String, (String, usize)>,
}

impl RawConfig {
    pub fn parse_kv(text: &str) -> Result<Self> {
        let mut cfg = RawConfig::default();
        for (idx, line) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: lineno,
                msg: format!("expected `key = value`, got {line:?}"),
            })?;
            cfg.insert(key.trim(), value.trim(), lineno)?;
        }
        Ok(cfg)
    }

    pub fn parse_json(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            msg: e.to_string(),
        })?;
        let obj = value.as_object().ok_or_else(|| Error::Parse {
            line: 1,
            msg: "config JSON must be an object".into(),
        })?;
        let mut cfg = RawConfig::default();
        for (key, v) in obj {
            let s = match v {
                Value::String(s) => s.clone(),
                Value::Number(n) => n.to_string(),
                Value::Bool(b) => (if *b { "on" } else { "off" }).to_string(),
                _ => return Err(Error::Parse { line: 0, msg: format!("key {key:?}: value must be a scalar") }),
            };
            cfg.insert(key, &s, 0)?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read config {}: {e}", path.display())))?;
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
            Self::parse_json(&text)
        } else {
            Self::parse_kv(&text)
        }
    }

    fn insert(&mut self, key: &str, value: &str, line: usize) -> Result<()> {
        if !KEYS.iter().any(|k| k.name == key) {
            return Err(Error::Parse { line, msg: format!("unknown key {key:?}") });
        }
        if self.values.insert(key.to_string(), (value.to_string(), line)).is_some() {
            return Err(Error::Parse { line, msg: format!("duplicate key {key:?}") });
        }
        Ok(())
    }

    /// Applies a `key=value` override, replacing any existing value.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| invalid(format!("override {assignment:?} is not key=value")))?;
        self.values.remove(k.trim());
        self.insert(k.trim(), v.trim(), 0)
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|(v, _)| v.as_str())
    }

    fn bad(&self, key: &str, msg: impl std::fmt::Display) -> Error {
        let range = KEYS.iter().find(|k| k.name == key).map_or("", |k| k.range);
        invalid(format!("key {key:?}: {msg} (allowed: {range})"))
    }

    fn required<T>(&self, key: &str, v: Result<Option<T>>) -> Result<T> {
        v?.ok_or_else(|| invalid(format!("missing required key {key:?}")))
    }

    pub fn f64(&self, key: &str, ok: impl Fn(f64) -> bool) -> Result<Option<f64>> {
        let Some(s) = self.raw(key) else { return Ok(None) };
        let v: f64 = s.parse().map_err(|_| self.bad(key, format!("{s:?} is not a number")))?;
        if !ok(v) {
            return Err(self.bad(key, format!("{v} out of range")));
        }
        Ok(Some(v))
    }

    pub fn u64(&self, key: &str, ok: impl Fn(u64) -> bool) -> Result<Option<u64>> {
        let Some(s) = self.raw(key) else { return Ok(None) };
        let v = parse_integer(s).ok_or_else(|| self.bad(key, format!("{s:?} is not a non-negative integer")))?;
        if !ok(v) {
            return Err(self.bad(key, format!("{v} out of range")));
        }
        Ok(Some(v))
    }

    fn choice<'a>(&'a self, key: &str, options: &[&str]) -> Result<Option<&'a str>> {
        let Some(s) = self.raw(key) else { return Ok(None) };
        if options.contains(&s) {
            Ok(Some(s))
        } else {
            Err(self.bad(key, format!("{s:?} not recognized")))
        }
    }

    pub fn model_params(&self) -> Result<ModelParams> {
        let mu = self.required("mu", self.f64("mu", |v| v > 0.0 && v.is_finite()))?;
        let kind = self.choice("kernel", &["exponential", "indicator", "zero"])?.unwrap_or("exponential");
        let p = if kind == "zero" {
            self.f64("p", |v| (0.0..=1.0).contains(&v))?.unwrap_or(0.0)
        } else {
            self.required("p", self.f64("p", |v| (0.0..=1.0).contains(&v)))?
        };
        let kernel = match kind {
            "zero" => Kernel::Zero,
            _ => {
                let lambda = self.required("lambda", self.f64("lambda", |v| v >= 0.0 && v.is_finite()))?;
                if kind == "exponential" {
                    let rate = self.f64("kernel_rate", |v| v > 0.0 && v.is_finite())?.unwrap_or(1.0);
                    Kernel::exponential_with_mass(rate, lambda)?
                } else {
                    let width = self.f64("kernel_width", |v| v > 0.0 && v.is_finite())?.unwrap_or(1.0);
                    Kernel::indicator(width, lambda / width)?
                }
            }
        };
        Ok(ModelParams::new(mu, p, kernel)?.with_q(self.q()?))
    }

    pub fn n(&self) -> Result<usize> {
        Ok(self.required("n", self.u64("n", |v| (1..=1 << 20).contains(&v)))? as usize)
    }

    pub fn k(&self, n: usize) -> Result<usize> {
        Ok(self.u64("k", |v| v >= 1 && v as usize <= n)?.map_or(n, |v| v as usize))
    }

    pub fn q(&self) -> Result<u32> {
        Ok(self.u64("q", |v| (4..=100_000).contains(&v))?.map_or(DEFAULT_Q, |v| v as u32))
    }

    pub fn t(&self) -> Result<f64> {
        self.required("t", self.f64("t", |v| v >= 1.0 && v.is_finite()))
    }

    pub fn seed(&self) -> Result<u64> {
        Ok(self.u64("master_seed", |_| true)?.unwrap_or(0))
    }

    pub fn alpha(&self) -> Result<f64> {
        Ok(self.f64("alpha", |v| v > 0.0 && v <= 1.0)?.unwrap_or(0.05))
    }

    pub fn separation(&self) -> Result<f64> {
        Ok(self.f64("separation_threshold", |v| v > 0.0 && v.is_finite())?.unwrap_or(crate::asymptotics::DEFAULT_SEPARATION))
    }

    pub fn sim_options(&self) -> Result<SimOptions> {
        let event_cap = self.u64("event_cap", |v| v >= 1)?.unwrap_or(DEFAULT_EVENT_CAP);
        let path = match self.choice("simulation_path", &["auto", "generic"])? {
            Some("generic") => SimPath::Generic,
            _ => SimPath::Auto,
        };
        Ok(SimOptions { event_cap, path })
    }

    pub fn output_dir(&self) -> PathBuf {
        PathBuf::from(self.raw("output_dir").unwrap_or("."))
    }

    pub fn experiment(&self) -> Result<ExperimentConfig> {
        let mode: Mode = self.choice("mode", &["full", "matrix_only", "p_zero"])?.unwrap_or("full").parse()?;
        let params = self.model_params()?;
        let n = self.n()?;
        let k = self.k(n)?;
        let t = match mode {
            Mode::MatrixOnly => self.f64("t", |v| v >= 1.0 && v.is_finite())?.unwrap_or(1.0),
            _ => self.t()?,
        };
        let replicates = self.required("replicates", self.u64("replicates", |v| (1..=1 << 32).contains(&v)))? as usize;
        let mut c = ExperimentConfig::new(params, n, k, t, replicates, mode);
        c.q = self.q()?;
        c.master_seed = self.seed()?;
        c.separation_threshold = self.separation()?;
        c.alpha = self.alpha()?;
        c.forced_regime = match self.choice("forced_regime", &["none", "i", "ii", "iii"])? {
            None | Some("none") => None,
            Some(s) => Some(s.parse::<Regime>()?),
        };
        c.workers = self.u64("workers", |v| (1..=4096).contains(&v))?.map(|v| v as usize);
        c.scaling_doublings = self.u64("scaling_doublings", |v| v <= 6)?.unwrap_or(0) as usize;
        c.event_cap = self.sim_options()?.event_cap;
        c.validate()?;
        Ok(c)
    }

    /// Mode defaults overridden by the threshold keys; empty when checks = off.
    pub fn thresholds(&self, mode: Mode) -> Result<Thresholds> {
        let mut th = Thresholds::for_mode(mode);
        if self.choice("checks", &["on", "off"])? == Some("off") {
            return Ok(Thresholds::default());
        }
        let pos = |v: f64| v > 0.0 && v.is_finite();
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        let pair = |lo: Option<f64>, hi: Option<f64>, cur: Option<(f64, f64)>| match (lo, hi) {
            (None, None) => cur,
            (lo, hi) => {
                let (dl, dh) = cur.unwrap_or((0.0, f64::INFINITY));
                Some((lo.unwrap_or(dl), hi.unwrap_or(dh)))
            }
        };
        th.sd_ratio = pair(self.f64("sd_ratio_low", pos)?, self.f64("sd_ratio_high", pos)?, th.sd_ratio);
        th.scaling_ratio =
            pair(self.f64("scaling_ratio_low", pos)?, self.f64("scaling_ratio_high", pos)?, th.scaling_ratio);
        th.above_0_9 = pair(self.f64("above_0_9_low", unit)?, self.f64("above_0_9_high", unit)?, th.above_0_9);
        if let Some(v) = self.f64("ks_max", |v| v > 0.0 && v <= 1.0)? {
            th.ks_max = Some(v);
        }
        if let Some(v) = self.f64("coverage_min", unit)? {
            th.coverage_min = Some(v);
        }
        if let Some(v) = self.f64("omega_min", unit)? {
            th.omega_min = Some(v);
        }
        if let Some(v) = self.f64("below_0_1_min", unit)? {
            th.below_0_1_min = Some(v);
        }
        Ok(th)
    }
}

fn parse_integer(s: &str) -> Option<u64> {
    if let Ok(v) = s.parse::<u64>() {
        return Some(v);
    }
    // accept 1e8 style literals when they are exact integers
    let f: f64 = s.parse().ok()?;
    (f >= 0.0 && f.fract() == 0.0 && f < 1.8e19).then_some(f as u64)
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::ExplosionAbort { .. } => EXIT_EXPLOSION,
        _ => EXIT_INPUT,
    }
}

fn write_json(path: &Path, value: &Value) -> Result<()> {
    write_atomic(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value).map_err(std::io::Error::from)?;
        writeln!(w)
    })
}

fn load(common: &Common) -> Result<(RawConfig, PathBuf)> {
    let mut cfg = RawConfig::load(&common.config)?;
    for o in &common.overrides {
        cfg.set(o)?;
    }
    let dir = common.output_dir.clone().unwrap_or_else(|| cfg.output_dir());
    Ok((cfg, dir))
}

pub fn cmd_simulate(cfg: &RawConfig, dir: &Path) -> Result<PathBuf> {
    let params = cfg.model_params()?;
    let n = cfg.n()?;
    let horizon = cfg.required("horizon", cfg.f64("horizon", |v| v > 0.0 && v.is_finite()))?;
    let seed = cfg.seed()?;
    let opts = cfg.sim_options()?;
    let adj = Adjacency::sample(n, params.p, mix(seed, 0))?;
    let log = simulate_with(&adj, &params, horizon, mix(seed, 1), &opts)?;
    fs::create_dir_all(dir)?;
    let path = dir.join("events.csv");
    write_atomic(&path, |w| log.write_csv(w))?;
    Ok(path)
}

/// Estimates from a parsed log and packages everything estimate.json holds.
pub fn estimate_report(log: &EventLog, cfg: &RawConfig) -> Result<Value> {
    let n = log.n();
    let k = cfg.k(n)?;
    let t = cfg.t()?;
    let q = cfg.q()?;
    let alpha = cfg.alpha()?;
    let terms = rate_terms(n, k, t, q, cfg.separation()?)?;
    let est = estimate(&EstimatorInput::new(log, n, k, t, q)?)?;
    let design = Design::new(n, k, t, q)?;
    let (ci, ci_note) = match confidence_interval(&est.plug_in, &design, alpha) {
        Ok(hw) => (json!(hw), Value::Null),
        Err(Error::DegenerateEstimate(m)) => (Value::Null, json!(m)),
        Err(e) => return Err(e),
    };
    Ok(json!({
        "mu_hat": est.plug_in.mu_hat,
        "lambda_hat": est.plug_in.lambda_hat,
        "p_hat": est.plug_in.p_hat,
        "epsilon": est.raw.epsilon,
        "V": est.raw.v,
        "X": est.raw.x,
        "W": est.raw.w,
        "Z_delta": est.raw.z_delta,
        "Z_2delta": est.raw.z_2delta,
        "delta_t": est.raw.delta_t,
        "n": n,
        "k": k,
        "t": t,
        "q": q,
        "r1": terms.r1,
        "r2": terms.r2,
        "r3": terms.r3,
        "gamma": terms.gamma,
        "separation": terms.separation,
        "dominant_regime": terms.dominant.to_string(),
        "alpha": alpha,
        "ci_half_width": ci,
        "ci_note": ci_note,
    }))
}

pub fn cmd_estimate(cfg: &RawConfig, events: &Path, dir: &Path) -> Result<PathBuf> {
    let n = cfg.n()?;
    let t = cfg.t()?;
    let horizon = cfg.f64("horizon", |v| v > 0.0 && v.is_finite())?.unwrap_or(2.0 * t);
    let file = fs::File::open(events)
        .map_err(|e| invalid(format!("cannot open events file {}: {e}", events.display())))?;
    let log = EventLog::read_csv(BufReader::new(file), n, horizon)?;
    let report = estimate_report(&log, cfg)?;
    fs::create_dir_all(dir)?;
    let path = dir.join("estimate.json");
    write_json(&path, &report)?;
    Ok(path)
}

pub fn cmd_graph_oracle(cfg: &RawConfig, dir: &Path) -> Result<PathBuf> {
    let params = cfg.model_params()?;
    params.check_subcritical()?;
    let n = cfg.n()?;
    let k = cfg.k(n)?;
    let seed = cfg.seed()?;
    let adj = Adjacency::sample(n, params.p, mix(seed, 0))?;
    let flags = check_events(&adj, params.lambda(), params.p, k)?;
    let a = analyze_graph(&adj, params.lambda(), params.mu, k)?;
    fs::create_dir_all(dir)?;
    write_atomic(&dir.join("ell.csv"), |w| {
        writeln!(w, "process,ell,c_k")?;
        for (i, (l, c)) in a.ell.iter().zip(&a.c_k).enumerate() {
            writeln!(w, "{i},{l:.17e},{c:.17e}")?;
        }
        Ok(())
    })?;
    let path = dir.join("graph_oracle.json");
    write_json(
        &path,
        &json!({
            "n": n,
            "k": k,
            "ell_bar_k": a.ell_bar_k,
            "x_k_sq_norm": a.x_k_sq_norm,
            "V_inf": a.v_inf,
            "A_inf": a.a_inf,
            "W_inf": a.w_inf,
            "X_inf": a.x_inf,
            "residual": a.residual,
            "omega": flags.omega_nk,
            "a_n": flags.a_n,
            "norm_1": flags.norm_1,
            "norm_inf": flags.norm_inf,
        }),
    )?;
    Ok(path)
}

/// Runs the experiment, writes its outputs and returns the verdict lines and
/// whether every enabled check passed.
pub fn cmd_mc(cfg: &RawConfig, dir: &Path) -> Result<(Vec<String>, bool)> {
    let config = cfg.experiment()?;
    let thresholds = cfg.thresholds(config.mode)?;
    let report = run_experiment(&config)?;
    report.write_outputs(dir)?;
    let mut lines: Vec<String> = report.warnings.iter().map(|w| format!("warning: {w}")).collect();
    let checks = verdicts(&report, &thresholds);
    let ok = checks.iter().all(|v| v.passed);
    lines.extend(checks.iter().map(|v| v.to_string()));
    Ok((lines, ok))
}

/// Parses `args` and runs the selected subcommand; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Simulate(c) => load(c).and_then(|(cfg, dir)| cmd_simulate(&cfg, &dir)).map(|p| {
            println!("wrote {}", p.display());
            EXIT_OK
        }),
        Command::Estimate { common, events } => load(common)
            .and_then(|(cfg, dir)| cmd_estimate(&cfg, events, &dir))
            .map(|p| {
                println!("wrote {}", p.display());
                EXIT_OK
            }),
        Command::GraphOracle(c) => load(c).and_then(|(cfg, dir)| cmd_graph_oracle(&cfg, &dir)).map(|p| {
            println!("wrote {}", p.display());
            EXIT_OK
        }),
        Command::Mc(c) => load(c).and_then(|(cfg, dir)| cmd_mc(&cfg, &dir)).map(|(lines, ok)| {
            for l in lines {
                println!("{l}");
            }
            if ok {
                EXIT_OK
            } else {
                EXIT_CHECK_FAILED
            }
        }),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        exit_code(&e)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kv_parsing() {
        let cfg = RawConfig::parse_kv("# comment\nmu = 1.5\n\nn=3 # trailing\n").unwrap();
        assert_eq!(cfg.f64("mu", |_| true).unwrap(), Some(1.5));
        assert_eq!(cfg.n().unwrap(), 3);
        assert_eq!(cfg.k(3).unwrap(), 3);
        assert!(matches!(RawConfig::parse_kv("mu 1"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(RawConfig::parse_kv("n=1\nbogus=2"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(RawConfig::parse_kv("n=1\nn=2"), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn json_parsing() {
        let cfg = RawConfig::parse_json(r#"{"mu": 2, "kernel": "zero", "n": 4, "checks": false}"#).unwrap();
        let params = cfg.model_params().unwrap();
        assert_eq!(params.mu, 2.0);
        assert_eq!(params.p, 0.0);
        assert_eq!(cfg.thresholds(Mode::Full).unwrap(), Thresholds::default());
        assert!(RawConfig::parse_json(r#"{"unknown": 1}"#).is_err());
        assert!(RawConfig::parse_json("[1]").is_err());
    }

    #[test]
    fn range_errors_name_the_key() {
        let cfg = RawConfig::parse_kv("mu = -1\nn = 2").unwrap();
        let msg = cfg.model_params().unwrap_err().to_string();
        assert!(msg.contains("\"mu\""), "{msg}");
        let cfg = RawConfig::parse_kv("n = 2\nkernel = zero").unwrap();
        let msg = cfg.model_params().unwrap_err().to_string();
        assert!(msg.contains("missing required key \"mu\""), "{msg}");
        let cfg = RawConfig::parse_kv("n = 2.5").unwrap();
        assert!(cfg.n().is_err());
        let cfg = RawConfig::parse_kv("event_cap = 1e8").unwrap();
        assert_eq!(cfg.sim_options().unwrap().event_cap, 100_000_000);
    }

    #[test]
    fn threshold_overrides() {
        let cfg = RawConfig::parse_kv("ks_max = 0.2\nsd_ratio_high = 2").unwrap();
        let th = cfg.thresholds(Mode::Full).unwrap();
        assert_eq!(th.ks_max, Some(0.2));
        assert_eq!(th.sd_ratio, Some((0.7, 2.0)));
        let th = cfg.thresholds(Mode::PZero).unwrap();
        assert_eq!(th.sd_ratio, Some((0.0, 2.0)));
    }

    #[test]
    fn help_lists_every_key() {
        let help = keys_help();
        for k in KEYS {
            assert!(help.contains(k.name) && help.contains(k.range), "{}", k.name);
        }
    }

    #[test]
    fn overrides_replace_values() {
        let mut cfg = RawConfig::parse_kv("n = 2").unwrap();
        cfg.set("n=5").unwrap();
        assert_eq!(cfg.n().unwrap(), 5);
        assert!(cfg.set("nope=1").is_err());
        assert!(cfg.set("n").is_err());
    }
}
