//! Configuration-driven experiment runner for `fraclab`.
//!
//! `run` reads one TOML config, executes the experiment and writes
//! `report.json`, `trace.csv` and optionally `plot.svg` into the output
//! directory. Exit statuses:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | every pass criterion holds |
//! | 1 | some criterion failed |
//! | 2 | config parse error |
//! | 3 | precondition violation |
//! | 4 | numerical failure |
//! | 5 | output could not be written |

pub mod config;
pub mod report;
pub mod runner;
pub mod verify;

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use fraclab_core::FracError;
use rayon::prelude::*;
use serde_json::{json, Value};

use config::ExperimentConfig;
use report::{num, tagged, to_json_bytes, write_atomic, Provenance};
pub use runner::{run_experiment, ExperimentOutput};
pub use verify::{verify_suite, VerifyOptions};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CRITERIA: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_PRECONDITION: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;
pub const EXIT_IO: i32 = 5;

#[derive(Debug, Clone, PartialEq)]
pub enum RunError {
    Config(String),
    Core(FracError),
    Io(String),
}

impl From<FracError> for RunError {
    fn from(e: FracError) -> Self {
        RunError::Core(e)
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "{m}"),
            RunError::Core(e) => write!(f, "{e}"),
            RunError::Io(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for RunError {}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => EXIT_CONFIG,
            RunError::Core(e) if e.is_precondition() => EXIT_PRECONDITION,
            RunError::Core(_) => EXIT_NUMERICAL,
            RunError::Io(_) => EXIT_IO,
        }
    }

    /// One line, `<class>:<code>: <message>`.
    pub fn reason(&self) -> String {
        let line = |s: String| s.replace('\n', " ");
        match self {
            RunError::Config(m) => line(format!("config:parse: {m}")),
            RunError::Core(e) => {
                let class = if e.is_precondition() {
                    "precondition"
                } else {
                    "numerical"
                };
                line(format!("{class}:{}: {e}", variant_code(e)))
            }
            RunError::Io(m) => line(format!("io:write: {m}")),
        }
    }
}

/// `OrderOutOfRange { .. }` -> `order_out_of_range`.
fn variant_code(e: &FracError) -> String {
    let dbg = format!("{e:?}");
    let name: String = dbg.chars().take_while(|c| c.is_alphanumeric()).collect();
    let mut out = String::new();
    for (i, c) in name.chars().enumerate() {
        if c.is_uppercase() {
            if i > 0 {
                out.push('_');
            }
            out.extend(c.to_lowercase());
        } else {
            out.push(c);
        }
    }
    out
}

/// `FRACLAB_DETERMINISTIC=1` forces deterministic output.
pub fn deterministic_from_env() -> bool {
    std::env::var("FRACLAB_DETERMINISTIC")
        .map(|v| v == "1")
        .unwrap_or(false)
}

/// Caps the global pool at `FRACLAB_THREADS` when set.
pub fn init_threads_from_env() -> Result<Option<usize>, RunError> {
    let Ok(raw) = std::env::var("FRACLAB_THREADS") else {
        return Ok(None);
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| RunError::Config(format!("FRACLAB_THREADS must be a positive integer, got `{raw}`")))?;
    // a pool already built by the caller wins
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(Some(n))
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub config_path: PathBuf,
    pub outdir: PathBuf,
    pub exit_code: i32,
    pub report: Value,
}

/// Builds the report document for one experiment outcome.
pub fn build_report(
    experiment: &str,
    cfg: Option<&ExperimentConfig>,
    outcome: &Result<ExperimentOutput, RunError>,
    elapsed: Option<f64>,
) -> (Value, i32) {
    let (status, code, reason, criteria, results) = match outcome {
        Ok(out) => {
            let pass = out.criteria.iter().all(|c| c.pass);
            let failing: Vec<&str> = out
                .criteria
                .iter()
                .filter(|c| !c.pass)
                .map(|c| c.name.as_str())
                .collect();
            let reason = (!pass).then(|| format!("criteria:failed: {}", failing.join(", ")));
            (
                if pass { "pass" } else { "fail" },
                if pass { EXIT_PASS } else { EXIT_CRITERIA },
                reason,
                out.criteria.iter().map(|c| c.to_json()).collect::<Vec<_>>(),
                out.results.clone(),
            )
        }
        Err(e) => ("error", e.exit_code(), Some(e.reason()), Vec::new(), Value::Null),
    };
    let mut doc = json!({
        "experiment": experiment,
        "status": status,
        "exit_code": num(code as f64, Provenance::Computed),
        "reason": reason,
        "config": cfg.map(|c| tagged(c, Provenance::Config)),
        "criteria": criteria,
        "results": results,
    });
    if let Some(t) = elapsed {
        doc["elapsed_seconds"] = num(t, Provenance::Computed);
    }
    (doc, code)
}

/// Runs one config and writes its outputs. `out` overrides the config's
/// output directory.
pub fn run_config(path: &Path, out: Option<&Path>) -> RunSummary {
    let start = Instant::now();
    let loaded = ExperimentConfig::load(path);
    let outdir = match (&loaded, out) {
        (_, Some(dir)) => dir.to_path_buf(),
        (Ok(cfg), None) => cfg.output_dir(path),
        (Err(_), None) => config::default_output_dir(path, None),
    };
    let (cfg, outcome) = match loaded {
        Ok(cfg) => {
            let res = run_experiment(&cfg);
            (Some(cfg), res)
        }
        Err(e) => (None, Err(e)),
    };
    let deterministic = cfg.as_ref().is_some_and(|c| c.deterministic) || deterministic_from_env();
    let elapsed = (!deterministic).then(|| start.elapsed().as_secs_f64());
    let name = cfg.as_ref().map(|c| c.experiment.name()).unwrap_or("unknown");
    let (report, mut exit_code) = build_report(name, cfg.as_ref(), &outcome, elapsed);
    let written = write_outputs(
        &outdir,
        &report,
        outcome.as_ref().ok(),
        cfg.as_ref().is_some_and(|c| c.plot),
    );
    if let Err(e) = written {
        eprintln!("fraclab: {}", e.reason());
        exit_code = e.exit_code();
    }
    RunSummary {
        config_path: path.to_path_buf(),
        outdir,
        exit_code,
        report,
    }
}

/// Independent configs run concurrently; summaries come back in input order.
pub fn run_configs(paths: &[PathBuf], out: Option<&Path>) -> Vec<RunSummary> {
    if out.is_some() && paths.len() > 1 {
        // one directory per config under the override
        return paths
            .par_iter()
            .map(|p| {
                let stem = p
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default();
                run_config(p, Some(&out.expect("checked").join(stem)))
            })
            .collect();
    }
    paths.par_iter().map(|p| run_config(p, out)).collect()
}

pub fn write_outputs(
    outdir: &Path,
    report: &Value,
    out: Option<&ExperimentOutput>,
    plot: bool,
) -> Result<(), RunError> {
    write_atomic(&outdir.join("report.json"), &to_json_bytes(report))?;
    if let Some(out) = out {
        write_atomic(&outdir.join("trace.csv"), &out.trace.to_csv()?)?;
        if let (true, Some(svg)) = (plot, &out.plot) {
            write_atomic(&outdir.join("plot.svg"), svg.as_bytes())?;
        }
    }
    Ok(())
}

/// Overall status of several runs: the first failure class in severity order.
pub fn combined_exit_code(codes: &[i32]) -> i32 {
    codes.iter().copied().max().unwrap_or(EXIT_PASS)
}

/// Loads `<outdir>/report.json` and renders it for a terminal.
pub fn pretty_report(outdir: &Path) -> Result<String, RunError> {
    let path = outdir.join("report.json");
    let text = std::fs::read_to_string(&path).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?;
    Ok(report::pretty(&v))
}
