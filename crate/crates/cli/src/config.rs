//! Experiment configuration files.
//!
//! A config is a flat TOML document. Every key is listed in
//! [`ExperimentConfig`]; anything else is rejected at parse time.
//!
//! ```toml
//! experiment = "reconstruct"
//! grid = { n = 1, L = 16.0, m = 1024 }
//! s = 0.25
//! omega = [[-2.0, 2.0]]
//! window = [[3.0, 7.0]]
//! separation = 0.5
//! conductivity = [{ constant = 1.0 }, { bump = { center = [5.0], radius = 1.5, amplitude = 0.8 } }]
//! x0 = [[5.75]]
//! moments = 3
//! N_list = [1, 2, 4, 8]
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use fraclab_core::{bump, Bounds, Conductivity, Estimator, Grid, GridFunction, Method};
use serde::{Deserialize, Serialize};

use crate::RunError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Verify,
    Solve,
    Reconstruct,
    Stability,
    Scaling,
    Invariance,
    Poincare,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Verify => "verify",
            ExperimentKind::Solve => "solve",
            ExperimentKind::Reconstruct => "reconstruct",
            ExperimentKind::Stability => "stability",
            ExperimentKind::Scaling => "scaling",
            ExperimentKind::Invariance => "invariance",
            ExperimentKind::Poincare => "poincare",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    #[serde(rename = "L")]
    pub l: f64,
    pub m: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpTerm {
    pub center: Vec<f64>,
    pub radius: f64,
    pub amplitude: f64,
}

/// One summand of a conductivity or data profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum Term {
    Constant(f64),
    /// `amplitude * bump(|x - center| / radius)`.
    Bump(BumpTerm),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Fast,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveMethod {
    Cg,
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Problem {
    Conductivity,
    Schrodinger,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorChoice {
    LastValue,
    ReferenceRatio,
    Richardson,
}

impl From<EstimatorChoice> for Estimator {
    fn from(e: EstimatorChoice) -> Self {
        match e {
            EstimatorChoice::LastValue => Estimator::LastValue,
            EstimatorChoice::ReferenceRatio => Estimator::ReferenceRatio,
            EstimatorChoice::Richardson => Estimator::Richardson,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Relative residual of the linear solves.
    pub solver: f64,
    /// Reconstruction relative error.
    pub relative_error: f64,
    /// Pairing identity `E(u_N) = <Lambda phi_N, phi_N>`.
    pub pairing: f64,
    /// Distance of fitted scaling slopes from `t`.
    pub slope: f64,
    /// cg vs direct, max norm.
    pub agreement: f64,
    /// Invariance threshold as a multiple of `solver`.
    pub invariance_factor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            solver: 1e-10,
            relative_error: 0.1,
            pairing: 1e-8,
            slope: 0.2,
            agreement: 1e-8,
            invariance_factor: 10.0,
        }
    }
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub grid: Option<GridConfig>,
    pub s: Option<f64>,
    /// Box of Omega, one `[lo, hi]` pair per axis.
    pub omega: Option<Vec<[f64; 2]>>,
    pub window: Option<Vec<[f64; 2]>>,
    /// Second window of the invariance probe.
    pub window2: Option<Vec<[f64; 2]>>,
    /// Minimum distance between a window and Omega; one grid spacing if absent.
    pub separation: Option<f64>,
    pub conductivity: Option<Vec<Term>>,
    /// Second conductivity of stability and invariance pairs.
    pub conductivity2: Option<Vec<Term>>,
    /// Exterior data of a single solve.
    pub data: Option<Vec<Term>>,
    pub problem: Option<Problem>,
    pub method: Option<SolveMethod>,
    pub x0: Option<Vec<Vec<f64>>>,
    pub moments: Option<usize>,
    #[serde(rename = "N_list")]
    pub n_list: Option<Vec<usize>>,
    pub t_list: Option<Vec<f64>>,
    pub estimator: Option<EstimatorChoice>,
    pub samples: Option<usize>,
    pub level: Option<Level>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_true")]
    pub deterministic: bool,
    #[serde(default = "default_true")]
    pub plot: bool,
    /// Output directory, relative to the config file.
    pub outdir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, RunError> {
        toml::from_str(text).map_err(|e| RunError::Config(e.message().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path).map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Output directory: the `outdir` key if present, else a directory named
    /// after the config file next to it.
    pub fn output_dir(&self, config_path: &Path) -> PathBuf {
        default_output_dir(config_path, self.outdir.as_deref())
    }

    pub fn require<'a, T>(&self, value: &'a Option<T>, key: &str) -> Result<&'a T, RunError> {
        value
            .as_ref()
            .ok_or_else(|| RunError::Config(format!("missing key `{key}` for experiment `{}`", self.experiment)))
    }

    pub fn grid(&self) -> Result<Grid, RunError> {
        let g = self.require(&self.grid, "grid")?;
        Ok(Grid::new(g.n, g.l, g.m)?)
    }

    pub fn order(&self) -> Result<f64, RunError> {
        self.require(&self.s, "s").copied()
    }

    pub fn solve_method(&self) -> Method {
        match self.method {
            Some(SolveMethod::Direct) => Method::Direct,
            _ => Method::Cg,
        }
    }
}

pub fn default_output_dir(config_path: &Path, outdir: Option<&Path>) -> PathBuf {
    let base = config_path.parent().unwrap_or(Path::new("."));
    match outdir {
        Some(dir) if dir.is_absolute() => dir.to_path_buf(),
        Some(dir) => base.join(dir),
        None => {
            let stem = config_path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            base.join(format!("{stem}.out"))
        }
    }
}

pub fn bounds(axes: &[[f64; 2]], grid: Grid, key: &str) -> Result<Bounds, RunError> {
    if axes.len() != grid.dim() {
        return Err(RunError::Config(format!(
            "`{key}` has {} axes but the grid has dimension {}",
            axes.len(),
            grid.dim()
        )));
    }
    Ok(Bounds::new(axes.iter().map(|a| (a[0], a[1])).collect()))
}

/// Sums the terms on the grid.
pub fn profile(terms: &[Term], grid: Grid, key: &str) -> Result<GridFunction, RunError> {
    if terms.is_empty() {
        return Err(RunError::Config(format!("`{key}` needs at least one term")));
    }
    for t in terms {
        if let Term::Bump(b) = t {
            if b.center.len() != grid.dim() {
                return Err(RunError::Config(format!(
                    "bump center in `{key}` must have {} coordinates",
                    grid.dim()
                )));
            }
            if !b.radius.is_finite() || b.radius <= 0.0 {
                return Err(RunError::Config(format!("bump radius in `{key}` must be positive")));
            }
        }
    }
    Ok(GridFunction::from_fn(grid, |x| {
        terms
            .iter()
            .map(|t| match t {
                Term::Constant(c) => *c,
                Term::Bump(b) => {
                    let r2: f64 = b.center.iter().zip(x).map(|(c, xi)| (xi - c) * (xi - c)).sum();
                    b.amplitude * bump(r2.sqrt() / b.radius)
                }
            })
            .sum()
    }))
}

pub fn conductivity(terms: &[Term], grid: Grid, key: &str) -> Result<Conductivity, RunError> {
    Ok(Conductivity::from_samples(profile(terms, grid, key)?)?)
}
