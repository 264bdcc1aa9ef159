//! One function per experiment kind. Each returns its pass criteria, tagged
//! results, a trace and an optional plot.
//!
//! Trace columns:
//!
//! | experiment | columns |
//! |------------|---------|
//! | solve | `index, x, y, u` (`y` empty in 1D) |
//! | reconstruct | `x0, N, E_phi, E_u, dn_pairing, abs_err` |
//! | stability | `x0, lhs_direct, lhs_reconstructed, rhs, margin` |
//! | scaling | `t, N, norm, fitted_slope, pass` |
//! | invariance | `discrepancy, frobenius_difference, reference_norm, max_residual, threshold` |
//! | poincare | `sample, ratio` |
//! | verify | `name, measured, comparison, tolerance, pass` |
//!
//! In the reconstruct trace `abs_err` is `|estimate_N - gamma(x0)|`, where
//! `estimate_N` applies the configured estimator to the schedule truncated
//! at `N`.

use fraclab_core::experiments::{EnergyRow, ReconstructionReport};
use fraclab_core::{
    build_sequence, invariance_probe, liouville_potential, poincare_check, reconstruct_point, scaling_report, solve,
    stability_check, DirichletProblem, Estimator, ExteriorSequence, Grid, KernelTable, LaplacianVariant, Method,
    ProblemKind, RegionMask, SolveOptions, SpectralEngine,
};
use serde_json::{json, Value};

use crate::config::{self, ExperimentConfig, ExperimentKind, Problem};
use crate::report::{fmt_f64, loglog_svg, num, tagged, Comparison, Criterion, Provenance, Trace};
use crate::verify::{verify_suite, VerifyOptions};
use crate::RunError;

/// Largest moment-defect of the profile accepted by the scaling experiment.
const MOMENT_TOL: f64 = 1e-8;
/// Allowed deviation of the `W^s` norms from one.
const WS_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub criteria: Vec<Criterion>,
    pub results: Value,
    pub trace: Trace,
    pub plot: Option<String>,
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput, RunError> {
    match cfg.experiment {
        ExperimentKind::Verify => run_verify(cfg),
        ExperimentKind::Solve => run_solve(cfg),
        ExperimentKind::Reconstruct => run_reconstruct(cfg),
        ExperimentKind::Stability => run_stability(cfg),
        ExperimentKind::Scaling => run_scaling(cfg),
        ExperimentKind::Invariance => run_invariance(cfg),
        ExperimentKind::Poincare => run_poincare(cfg),
    }
}

struct Setup {
    grid: Grid,
    s: f64,
    kt: KernelTable,
    omega: RegionMask,
}

fn setup(cfg: &ExperimentConfig) -> Result<Setup, RunError> {
    let grid = cfg.grid()?;
    let s = cfg.order()?;
    let kt = KernelTable::new(grid, s)?;
    let omega = RegionMask::omega(grid, config::bounds(cfg.require(&cfg.omega, "omega")?, grid, "omega")?)?;
    Ok(Setup { grid, s, kt, omega })
}

fn window(cfg: &ExperimentConfig, st: &Setup, axes: &Option<Vec<[f64; 2]>>, key: &str) -> Result<RegionMask, RunError> {
    let b = config::bounds(cfg.require(axes, key)?, st.grid, key)?;
    let sep = cfg.separation.unwrap_or(st.grid.spacing());
    Ok(RegionMask::window(st.grid, b, &st.omega, sep)?)
}

fn options(cfg: &ExperimentConfig) -> SolveOptions {
    SolveOptions {
        method: cfg.solve_method(),
        tol: cfg.tolerances.solver,
        ..SolveOptions::default()
    }
}

fn sequences(
    cfg: &ExperimentConfig,
    st: &Setup,
    win: &RegionMask,
    eng: &SpectralEngine,
) -> Result<Vec<ExteriorSequence>, RunError> {
    let points = cfg.require(&cfg.x0, "x0")?;
    let scales = cfg.require(&cfg.n_list, "N_list")?;
    let moments = cfg.moments.unwrap_or(3);
    points
        .iter()
        .map(|x0| Ok(build_sequence(st.grid, win, x0, moments, scales, eng, st.s)?))
        .collect()
}

fn point_label(x: &[f64]) -> String {
    x.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(" ")
}

fn run_solve(cfg: &ExperimentConfig) -> Result<ExperimentOutput, RunError> {
    let st = setup(cfg)?;
    let cond = config::conductivity(cfg.require(&cfg.conductivity, "conductivity")?, st.grid, "conductivity")?;
    let f = config::profile(cfg.require(&cfg.data, "data")?, st.grid, "data")?.restricted(&st.omega.exterior());
    let problem = cfg.problem.unwrap_or(Problem::Conductivity);
    let potential;
    let kind = match problem {
        Problem::Conductivity => ProblemKind::Conductivity(&cond),
        Problem::Schrodinger => {
            potential = liouville_potential(&cond, &st.kt, LaplacianVariant::Sum)?;
            ProblemKind::Schrodinger(&potential)
        }
    };
    let opts = options(cfg);
    let p = DirichletProblem::new(kind, &st.omega, f)?;
    let rep = solve(&p, &st.kt, opts)?;
    let energy = kind.form(&st.kt, &rep.u, &rep.u)?;
    let tol = &cfg.tolerances;
    let mut criteria = vec![Criterion::new(
        "relative_residual",
        rep.relative_residual,
        Comparison::AtMost,
        tol.solver,
        Provenance::Config,
    )];
    let mut agreement = None;
    if rep.method == Method::Cg {
        let direct = solve(&p, &st.kt, SolveOptions::direct())?;
        let diff = (&rep.u - &direct.u).max_abs();
        agreement = Some(diff);
        criteria.push(Criterion::new(
            "cg_vs_direct",
            diff,
            Comparison::AtMost,
            tol.agreement,
            Provenance::Config,
        ));
    }
    if problem == Problem::Conductivity {
        criteria.push(Criterion::new(
            "energy_nonnegative",
            energy,
            Comparison::AtLeast,
            0.0,
            Provenance::DerivedOracle,
        ));
    }
    let mut trace = Trace::new(&["index", "x", "y", "u"]);
    for (i, v) in rep.u.values().iter().enumerate() {
        let x = st.grid.coords(i);
        let y = if st.grid.dim() == 2 {
            fmt_f64(x[1])
        } else {
            String::new()
        };
        trace.push(vec![i.to_string(), fmt_f64(x[0]), y, fmt_f64(*v)]);
    }
    let results = json!({
        "problem": problem,
        "method": rep.method,
        "iterations": num(rep.iterations as f64, Provenance::Computed),
        "relative_residual": num(rep.relative_residual, Provenance::Computed),
        "energy": num(energy, Provenance::Computed),
        "max_abs_u": num(rep.u.max_abs(), Provenance::Computed),
        "cg_vs_direct": agreement.map(|d| num(d, Provenance::Computed)),
        "interior_nodes": num(st.omega.count() as f64, Provenance::Computed),
    });
    Ok(ExperimentOutput {
        criteria,
        results,
        trace,
        plot: None,
    })
}

/// The configured estimator applied to the first `k + 1` rows.
fn estimate_at(rep: &ReconstructionReport, n0: usize, k: usize) -> f64 {
    let rows: &[EnergyRow] = &rep.rows;
    let last = &rows[k];
    match rep.estimator {
        Estimator::LastValue => last.e_u,
        Estimator::ReferenceRatio => last.e_u / last.e_unit,
        Estimator::Richardson if k == 0 => last.e_u,
        Estimator::Richardson => {
            let prev = &rows[k - 1];
            let (a1, a2) = ((prev.n + n0) as f64, (last.n + n0) as f64);
            (a2 * last.e_u - a1 * prev.e_u) / (a2 - a1)
        }
    }
}

fn run_reconstruct(cfg: &ExperimentConfig) -> Result<ExperimentOutput, RunError> {
    let st = setup(cfg)?;
    let win = window(cfg, &st, &cfg.window, "window")?;
    let cond = config::conductivity(cfg.require(&cfg.conductivity, "conductivity")?, st.grid, "conductivity")?;
    let eng = SpectralEngine::new(st.grid);
    let estimator: Estimator = cfg.estimator.unwrap_or(config::EstimatorChoice::ReferenceRatio).into();
    let opts = options(cfg);
    let tol = &cfg.tolerances;
    let mut criteria = Vec::new();
    let mut points = Vec::new();
    let mut series = Vec::new();
    let mut trace = Trace::new(&["x0", "N", "E_phi", "E_u", "dn_pairing", "abs_err"]);
    for seq in sequences(cfg, &st, &win, &eng)? {
        let rep = reconstruct_point(&cond, &st.kt, &st.omega, &win, &seq, opts, estimator)?;
        let label = point_label(&rep.x0);
        criteria.push(Criterion::new(
            format!("relative_error[x0={label}]"),
            rep.relative_error,
            Comparison::AtMost,
            tol.relative_error,
            Provenance::Config,
        ));
        criteria.push(Criterion::new(
            format!("pairing_defect[x0={label}]"),
            rep.max_pairing_defect,
            Comparison::AtMost,
            tol.pairing,
            Provenance::Config,
        ));
        let mut errs = Vec::new();
        for (k, row) in rep.rows.iter().enumerate() {
            let err = (estimate_at(&rep, seq.n0(), k) - rep.truth).abs();
            errs.push((row.n as f64, err));
            trace.push(vec![
                label.clone(),
                row.n.to_string(),
                fmt_f64(row.e_phi),
                fmt_f64(row.e_u),
                fmt_f64(row.dn_pairing),
                fmt_f64(err),
            ]);
        }
        series.push((format!("x0 = {label}"), errs));
        let mut v = tagged(&rep, Provenance::Computed);
        v["truth"] = num(rep.truth, Provenance::Config);
        v["n0"] = num(seq.n0() as f64, Provenance::Computed);
        points.push(v);
    }
    Ok(ExperimentOutput {
        criteria,
        results: json!({ "points": points }),
        trace,
        plot: cfg
            .plot
            .then(|| loglog_svg("reconstruction error", "N", "|estimate - gamma(x0)|", &series))
            .flatten(),
    })
}

fn run_stability(cfg: &ExperimentConfig) -> Result<ExperimentOutput, RunError> {
    let st = setup(cfg)?;
    let win = window(cfg, &st, &cfg.window, "window")?;
    let c1 = config::conductivity(cfg.require(&cfg.conductivity, "conductivity")?, st.grid, "conductivity")?;
    let c2 = config::conductivity(
        cfg.require(&cfg.conductivity2, "conductivity2")?,
        st.grid,
        "conductivity2",
    )?;
    let eng = SpectralEngine::new(st.grid);
    let seqs = if cfg.x0.is_some() {
        sequences(cfg, &st, &win, &eng)?
    } else {
        Vec::new()
    };
    let rep = stability_check(&c1, &c2, &st.kt, &eng, &st.omega, &win, &seqs, options(cfg))?;
    let criteria = vec![Criterion::new(
        "margin",
        rep.margin,
        Comparison::AtLeast,
        0.0,
        Provenance::DerivedOracle,
    )];
    let mut trace = Trace::new(&["x0", "lhs_direct", "lhs_reconstructed", "rhs", "margin"]);
    for p in &rep.points {
        trace.push(vec![
            point_label(&p.x0),
            fmt_f64(p.lhs_direct),
            fmt_f64(p.lhs_reconstructed),
            fmt_f64(rep.rhs),
            fmt_f64(rep.rhs - p.lhs_direct),
        ]);
    }
    trace.push(vec![
        "sup".into(),
        fmt_f64(rep.lhs_max),
        String::new(),
        fmt_f64(rep.rhs),
        fmt_f64(rep.margin),
    ]);
    Ok(ExperimentOutput {
        criteria,
        results: tagged(&rep, Provenance::Computed),
        trace,
        plot: None,
    })
}

fn run_scaling(cfg: &ExperimentConfig) -> Result<ExperimentOutput, RunError> {
    let st = setup(cfg)?;
    let win = window(cfg, &st, &cfg.window, "window")?;
    let eng = SpectralEngine::new(st.grid);
    let seqs = sequences(cfg, &st, &win, &eng)?;
    let [seq] = seqs.as_slice() else {
        return Err(RunError::Config("scaling takes exactly one point in `x0`".into()));
    };
    let t_list = cfg.t_list.clone().unwrap_or_else(|| vec![-st.s, 0.0, 1.0 - st.s]);
    let rows = scaling_report(seq, &eng, &t_list)?;
    let tol = &cfg.tolerances;
    let mut criteria: Vec<Criterion> = rows
        .iter()
        .map(|r| {
            Criterion::new(
                format!("slope_deviation[t={}]", fmt_f64(r.t)),
                (r.fitted_slope - r.t).abs(),
                Comparison::AtMost,
                tol.slope,
                Provenance::Config,
            )
        })
        .collect();
    let defect = seq.profile().moment_defects().iter().cloned().fold(0.0, f64::max);
    criteria.push(Criterion::new(
        "moment_defect",
        defect,
        Comparison::AtMost,
        MOMENT_TOL,
        Provenance::DerivedOracle,
    ));
    let ws = seq.ws_norms().iter().map(|n| (n - 1.0).abs()).fold(0.0, f64::max);
    criteria.push(Criterion::new(
        "ws_norm_deviation",
        ws,
        Comparison::AtMost,
        WS_TOL,
        Provenance::DerivedOracle,
    ));
    criteria.push(Criterion::new(
        "support_violations",
        seq.support_violations() as f64,
        Comparison::Equal,
        0.0,
        Provenance::DerivedOracle,
    ));
    let mut trace = Trace::new(&["t", "N", "norm", "fitted_slope", "pass"]);
    let mut series = Vec::new();
    for (r, c) in rows.iter().zip(&criteria) {
        for (n, norm) in r.scales.iter().zip(&r.norms) {
            trace.push(vec![
                fmt_f64(r.t),
                n.to_string(),
                fmt_f64(*norm),
                fmt_f64(r.fitted_slope),
                c.pass.to_string(),
            ]);
        }
        series.push((
            format!("t = {:.3}", r.t),
            r.scales.iter().zip(&r.norms).map(|(&n, &v)| (n as f64, v)).collect(),
        ));
    }
    let results = json!({
        "rows": tagged(&rows, Provenance::Computed),
        "n0": num(seq.n0() as f64, Provenance::Computed),
        "snap_distance": num(seq.snap_distance(), Provenance::Computed),
        "l2_norms": tagged(&seq.l2_norms(), Provenance::Computed),
        "l2_strictly_decreasing": seq.l2_strictly_decreasing(),
        "moment_defects": tagged(&seq.profile().moment_defects(), Provenance::Computed),
        "ws_norms": tagged(&seq.ws_norms(), Provenance::Computed),
    });
    Ok(ExperimentOutput {
        criteria,
        results,
        trace,
        plot: cfg
            .plot
            .then(|| {
                loglog_svg(
                    "Bessel norms of the exterior sequence",
                    "N",
                    "||phi_N||_{H^{t+s}}",
                    &series,
                )
            })
            .flatten(),
    })
}

fn run_invariance(cfg: &ExperimentConfig) -> Result<ExperimentOutput, RunError> {
    let st = setup(cfg)?;
    let w1 = window(cfg, &st, &cfg.window, "window")?;
    let w2 = window(cfg, &st, &cfg.window2, "window2")?;
    let c1 = config::conductivity(cfg.require(&cfg.conductivity, "conductivity")?, st.grid, "conductivity")?;
    let c2 = config::conductivity(
        cfg.require(&cfg.conductivity2, "conductivity2")?,
        st.grid,
        "conductivity2",
    )?;
    let rep = invariance_probe(&c1, &c2, &st.kt, &st.omega, &w1, &w2, options(cfg))?;
    let threshold = cfg.tolerances.invariance_factor * cfg.tolerances.solver;
    let identical = c1.gamma() == c2.gamma();
    let criterion = if identical {
        Criterion::new(
            "discrepancy_identical",
            rep.discrepancy,
            Comparison::AtMost,
            threshold,
            Provenance::Config,
        )
    } else {
        Criterion::new(
            "discrepancy_perturbed",
            rep.discrepancy,
            Comparison::Above,
            threshold,
            Provenance::Config,
        )
    };
    let mut trace = Trace::new(&[
        "discrepancy",
        "frobenius_difference",
        "reference_norm",
        "max_residual",
        "threshold",
    ]);
    trace.push(vec![
        fmt_f64(rep.discrepancy),
        fmt_f64(rep.frobenius_difference),
        fmt_f64(rep.reference_norm),
        fmt_f64(rep.max_residual),
        fmt_f64(threshold),
    ]);
    let mut results = tagged(&rep, Provenance::Computed);
    results["identical_conductivities"] = json!(identical);
    Ok(ExperimentOutput {
        criteria: vec![criterion],
        results,
        trace,
        plot: None,
    })
}

fn run_poincare(cfg: &ExperimentConfig) -> Result<ExperimentOutput, RunError> {
    let grid = cfg.grid()?;
    let s = cfg.order()?;
    let omega = RegionMask::omega(grid, config::bounds(cfg.require(&cfg.omega, "omega")?, grid, "omega")?)?;
    let eng = SpectralEngine::new(grid);
    let rep = poincare_check(&omega, &eng, s, cfg.samples.unwrap_or(32), cfg.seed)?;
    let mut criteria = vec![Criterion::new(
        "ratios_finite",
        rep.ratios.iter().filter(|r| !r.is_finite()).count() as f64,
        Comparison::Equal,
        0.0,
        Provenance::DerivedOracle,
    )];
    if let Some(c) = rep.discrete_constant {
        criteria.push(
            Criterion::new(
                "max_ratio",
                rep.max_ratio,
                Comparison::AtMost,
                c * (1.0 + 1e-9),
                Provenance::DerivedOracle,
            )
            .with_note("bounded by the exact discrete constant"),
        );
    }
    let mut trace = Trace::new(&["sample", "ratio"]);
    for (i, r) in rep.ratios.iter().enumerate() {
        trace.push(vec![i.to_string(), fmt_f64(*r)]);
    }
    let mut results = tagged(&rep, Provenance::Computed);
    if let Some(c) = rep.discrete_constant {
        results["discrete_constant"] = num(c, Provenance::DerivedOracle);
    }
    Ok(ExperimentOutput {
        criteria,
        results,
        trace,
        plot: None,
    })
}

fn run_verify(cfg: &ExperimentConfig) -> Result<ExperimentOutput, RunError> {
    let level = cfg.level.unwrap_or(config::Level::Fast);
    let criteria = verify_suite(level, VerifyOptions::default());
    Ok(verify_output(level, criteria))
}

pub fn verify_output(level: config::Level, criteria: Vec<Criterion>) -> ExperimentOutput {
    let mut trace = Trace::new(&["name", "measured", "comparison", "tolerance", "pass"]);
    for c in &criteria {
        trace.push(vec![
            c.name.clone(),
            fmt_f64(c.measured),
            c.comparison.symbol().into(),
            fmt_f64(c.tolerance),
            c.pass.to_string(),
        ]);
    }
    let passed = criteria.iter().filter(|c| c.pass).count();
    let results = json!({
        "level": level,
        "checks": num(criteria.len() as f64, Provenance::Computed),
        "passed": num(passed as f64, Provenance::Computed),
    });
    ExperimentOutput {
        criteria,
        results,
        trace,
        plot: None,
    }
}
