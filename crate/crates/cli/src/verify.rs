//! The verification suite: every module invariant as a named criterion with
//! its measured value and tolerance.
//!
//! `fast` runs 1D checks on small grids. `full` adds 2D checks and the
//! refinement sweeps.

use fraclab_core::experiments::decompose_energy;
use fraclab_core::{
    bform_conductivity, build_sequence, bump, cns, dn_matrix, dn_opnorm_diff, energy, frac_laplacian_spectral,
    frac_laplacian_sum, gagliardo_seminorm_sq, invariance_probe, l2_inner, liouville_potential, moment_profile,
    poincare_check, reconstruct_point, scaling_report, sobolev_norm, solve, stability_check, Bounds, Conductivity,
    DirichletProblem, Estimator, FracError, Grid, GridFunction, KernelTable, LaplacianVariant, ProblemKind, RegionMask,
    SobolevFlavor, SolveOptions, SpectralEngine,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::Level;
use crate::report::{Comparison, Criterion, Provenance};

type CoreResult<T> = Result<T, FracError>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    /// Multiplies `C_{n,s}` in every kernel table the suite builds. Anything
    /// but 1 is a deliberate corruption for mutation testing.
    pub cns_factor: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { cns_factor: 1.0 }
    }
}

const SEED: u64 = 0x5eed;

/// Tabulated `C_{n,s}` (mpmath, 30 digits).
const CNS_TABLE: [(usize, f64, f64); 4] = [
    (1, 0.25, 0.199_471_140_200_716_34),
    (2, 0.5, 0.159_154_943_091_895_34),
    (1, 0.45, 0.302_370_486_343_053_46),
    (2, 0.3, 0.100_072_892_064_877_84),
];

type Check = fn(&VerifyOptions) -> CoreResult<Vec<Criterion>>;

fn fast_checks() -> Vec<(&'static str, Check)> {
    vec![
        ("grid", grid_checks),
        ("operators", operator_checks),
        ("forms", form_checks),
        ("solver", solver_checks),
        ("dnmap", dnmap_checks),
        ("extcond", extcond_checks),
        ("experiments", experiment_checks),
    ]
}

fn full_checks() -> Vec<(&'static str, Check)> {
    vec![
        ("operators.refinement", operator_refinement),
        ("operators.2d", operator_checks_2d),
        ("solver.2d", solver_checks_2d),
        ("extcond.2d", extcond_checks_2d),
        ("extcond.scaling", scaling_checks),
        ("experiments.reconstruction", reconstruction_sweep),
        ("experiments.stability", stability_suite),
        ("experiments.invariance", invariance_sweep),
    ]
}

/// Runs the suite. Check groups run in parallel; the result order is fixed.
pub fn verify_suite(level: Level, opts: VerifyOptions) -> Vec<Criterion> {
    let mut groups = fast_checks();
    if level == Level::Full {
        groups.extend(full_checks());
    }
    let results: Vec<Vec<Criterion>> = groups
        .par_iter()
        .map(|(name, check)| match check(&opts) {
            Ok(c) => c,
            Err(e) => vec![Criterion::errored(
                format!("{name}.completes"),
                Comparison::Equal,
                0.0,
                Provenance::DerivedOracle,
                e.to_string(),
            )],
        })
        .collect();
    results.into_iter().flatten().collect()
}

fn kernel(grid: Grid, s: f64, opts: &VerifyOptions) -> CoreResult<KernelTable> {
    KernelTable::with_prefactor(grid, s, cns(grid.dim(), s)? * opts.cns_factor)
}

fn le(name: &str, measured: f64, tol: f64) -> Criterion {
    Criterion::new(name, measured, Comparison::AtMost, tol, Provenance::DerivedOracle)
}

fn ge(name: &str, measured: f64, tol: f64) -> Criterion {
    Criterion::new(name, measured, Comparison::AtLeast, tol, Provenance::DerivedOracle)
}

fn gt(name: &str, measured: f64, tol: f64) -> Criterion {
    Criterion::new(name, measured, Comparison::Above, tol, Provenance::DerivedOracle)
}

fn eq(name: &str, measured: f64, want: f64) -> Criterion {
    Criterion::new(name, measured, Comparison::Equal, want, Provenance::DerivedOracle)
}

fn rel_l2(a: &GridFunction, b: &GridFunction) -> f64 {
    (a - b).l2_norm() / b.l2_norm()
}

fn random_function(grid: Grid, rng: &mut ChaCha8Rng, support: Option<&RegionMask>) -> GridFunction {
    let mut u = GridFunction::from_values(
        grid,
        (0..grid.node_count()).map(|_| rng.random_range(-1.0..1.0)).collect(),
    )
    .expect("finite samples");
    if let Some(mask) = support {
        u = u.restricted(mask);
    }
    u
}

fn radial_bump(grid: Grid, center: &[f64], radius: f64) -> GridFunction {
    GridFunction::from_fn(grid, |x| {
        let r2: f64 = center.iter().zip(x).map(|(c, xi)| (xi - c) * (xi - c)).sum();
        bump(r2.sqrt() / radius)
    })
}

fn conductivity(grid: Grid, terms: &[(f64, f64, f64)]) -> CoreResult<Conductivity> {
    Conductivity::from_samples(GridFunction::from_fn(grid, |x| {
        1.0 + terms.iter().map(|&(a, c, r)| a * bump((x[0] - c) / r)).sum::<f64>()
    }))
}

/// The standard 1D geometry: `L = 16`, Omega `(-2, 2)`, window `(3, 7)`.
struct Line {
    grid: Grid,
    kt: KernelTable,
    eng: SpectralEngine,
    omega: RegionMask,
    window: RegionMask,
}

fn line(m: usize, s: f64, window: (f64, f64), opts: &VerifyOptions) -> CoreResult<Line> {
    let grid = Grid::new(1, 16.0, m)?;
    let omega = RegionMask::omega(grid, Bounds::interval(-2.0, 2.0))?;
    let window = RegionMask::window(grid, Bounds::interval(window.0, window.1), &omega, 0.5)?;
    Ok(Line {
        kt: kernel(grid, s, opts)?,
        eng: SpectralEngine::new(grid),
        grid,
        omega,
        window,
    })
}

fn grid_checks(_: &VerifyOptions) -> CoreResult<Vec<Criterion>> {
    let g = Grid::new(1, 16.0, 256)?;
    let origin = g.coords(128)[0];
    let omega = RegionMask::omega(g, Bounds::interval(-2.0, 2.0))?;
    let window = RegionMask::window(g, Bounds::interval(3.0, 7.0), &omega, 0.5)?;
    let overlap = omega.indices().iter().filter(|&&i| window.contains(i)).count();
    let partition = omega.count() + omega.exterior().count();
    let g2 = Grid::new(2, 8.0, 16)?;
    let round_trip = (0..g2.node_count())
        .filter(|&i| g2.flat_index(g2.multi_index(i)) != i)
        .count();
    Ok(vec![
        eq("grid.origin_node", origin, 0.0),
        eq("grid.omega_window_overlap", overlap as f64, 0.0),
        eq("grid.omega_partition", partition as f64, g.node_count() as f64),
        eq("grid.index_round_trip_2d", round_trip as f64, 0.0),
    ])
}

fn operator_checks(opts: &VerifyOptions) -> CoreResult<Vec<Criterion>> {
    let cns_err = CNS_TABLE
        .iter()
        .map(|&(n, s, want)| cns(n, s).map(|c| ((c - want) / want).abs()))
        .collect::<CoreResult<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let l = line(1024, 0.25, (3.0, 7.0), opts)?;
    let m = l.grid.nodes_per_axis();
    let asym = (0..m)
        .step_by(7)
        .flat_map(|x| (0..m).step_by(5).map(move |y| (x, y)))
        .map(|(x, y)| (l.kt.weight(x, y) - l.kt.weight(y, x)).abs())
        .fold(0.0, f64::max);
    let ones = frac_laplacian_sum(&l.kt, &GridFunction::constant(l.grid, 3.0))?.max_abs();
    let u = radial_bump(l.grid, &[0.0], 2.0);
    let spectral = frac_laplacian_spectral(&l.eng, &u, 0.25)?;
    let sum = frac_laplacian_sum(&l.kt, &u)?;
    let gag = gagliardo_seminorm_sq(&l.kt, &u)?;
    let hom = sobolev_norm(&l.eng, &u, 0.25, SobolevFlavor::Homogeneous)?;
    let pairing = l2_inner(&sum, &u)?;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (a, b) = (
        random_function(l.grid, &mut rng, None),
        random_function(l.grid, &mut rng, None),
    );
    let self_adj = (l2_inner(&frac_laplacian_sum(&l.kt, &a)?, &b)? - l2_inner(&a, &frac_laplacian_sum(&l.kt, &b)?)?)
        .abs()
        / (frac_laplacian_sum(&l.kt, &a)?.l2_norm() * b.l2_norm());
    Ok(vec![
        le("operators.cns_vs_table", cns_err, 1e-12),
        eq("operators.kernel_symmetry", asym, 0.0),
        le("operators.constants_annihilated", ones, 1e-10),
        le("operators.spectral_vs_sum", rel_l2(&sum, &spectral), 0.05),
        le("operators.gagliardo_vs_spectral", (gag / (hom * hom) - 1.0).abs(), 0.05),
        le("operators.gagliardo_identity", (gag - pairing).abs() / gag, 1e-12),
        le("operators.sum_self_adjoint", self_adj, 1e-12),
    ])
}

fn form_checks(opts: &VerifyOptions) -> CoreResult<Vec<Criterion>> {
    let grid = Grid::new(1, 16.0, 256)?;
    let kt = kernel(grid, 0.25, opts)?;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let (mut liouville, mut symmetry, mut min_energy): (f64, f64, f64) = (0.0, 0.0, f64::INFINITY);
    for _ in 0..20 {
        let terms: Vec<(f64, f64, f64)> = (0..3)
            .map(|_| {
                (
                    rng.random_range(-0.5..1.0),
                    rng.random_range(-6.0..6.0),
                    rng.random_range(0.5..3.0),
                )
            })
            .collect();
        let c = conductivity(grid, &terms)?;
        let u = random_function(grid, &mut rng, None);
        let v = random_function(grid, &mut rng, None);
        let (eu, ev) = (energy(&c, &kt, &u)?, energy(&c, &kt, &v)?);
        let scale = (eu * ev).sqrt();
        liouville = liouville.max(fraclab_core::liouville_residual(&c, &kt, &u, &v)? / scale);
        symmetry =
            symmetry.max((bform_conductivity(&c, &kt, &u, &v)? - bform_conductivity(&c, &kt, &v, &u)?).abs() / scale);
        min_energy = min_energy.min(eu / u.l2_norm().powi(2));
    }
    // unit conductivity gives q = 0 exactly
    let unit = Conductivity::from_samples(GridFunction::constant(grid, 1.0))?;
    let q0 = liouville_potential(&unit, &kt, LaplacianVariant::Sum)?
        .values()
        .max_abs();
    Ok(vec![
        le("forms.liouville_residual", liouville, 1e-10),
        le("forms.symmetry", symmetry, 1e-12),
        gt("forms.coercivity", min_energy, 0.0),
        eq("forms.unit_potential", q0, 0.0),
    ])
}

fn solver_checks(opts: &VerifyOptions) -> CoreResult<Vec<Criterion>> {
    let l = line(256, 0.25, (3.0, 7.0), opts)?;
    let c = conductivity(l.grid, &[(0.8, 5.0, 1.5), (0.5, 0.0, 1.5)])?;
    let kind = ProblemKind::Conductivity(&c);
    let f = radial_bump(l.grid, &[5.0], 1.5);
    let p = DirichletProblem::new(kind, &l.omega, f.clone())?;
    let cg = solve(&p, &l.kt, SolveOptions::default())?;
    let direct = solve(&p, &l.kt, SolveOptions::direct())?;
    let constant = GridFunction::constant(l.grid, 2.5).restricted(&l.omega.exterior());
    let pc = DirichletProblem::new(kind, &l.omega, constant)?;
    let uc = solve(&pc, &l.kt, SolveOptions::direct())?.u;
    let e0 = energy(&c, &l.kt, &cg.u)?;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
    let mut worst: f64 = f64::INFINITY;
    for _ in 0..20 {
        let v = &random_function(l.grid, &mut rng, Some(&l.omega)) * 0.1;
        worst = worst.min((energy(&c, &l.kt, &(&cg.u + &v))? - e0) / e0);
    }
    let q = liouville_potential(&c, &l.kt, LaplacianVariant::Sum)?;
    let g = c.sqrt_gamma();
    let ps = DirichletProblem::new(ProblemKind::Schrodinger(&q), &l.omega, g.hadamard(&f)?)?;
    let us = solve(&ps, &l.kt, SolveOptions::default())?.u;
    let transport = (&us - &g.hadamard(&direct.u)?).max_abs() / us.max_abs();
    Ok(vec![
        le("solver.cg_residual", cg.relative_residual, 1e-10),
        le("solver.cg_vs_direct", (&cg.u - &direct.u).max_abs(), 1e-8),
        le(
            "solver.constant_exterior",
            (&uc - &GridFunction::constant(l.grid, 2.5)).max_abs(),
            1e-12,
        ),
        ge("solver.energy_optimality", worst, -1e-12),
        le("solver.liouville_transport", transport, 1e-8),
    ])
}

fn dnmap_checks(opts: &VerifyOptions) -> CoreResult<Vec<Criterion>> {
    let l = line(256, 0.25, (3.0, 5.0), opts)?;
    let c = conductivity(l.grid, &[(0.5, 0.0, 1.5)])?;
    let sopts = SolveOptions::direct();
    let a = dn_matrix(
        ProblemKind::Conductivity(&c),
        &l.kt,
        &l.omega,
        &l.window,
        &l.window,
        sopts,
    )?;
    let e = a.entries();
    let asym = (e - e.transpose()).norm() / e.norm();
    // gamma = 1 on the window, so the Liouville potential gives the same map
    let q = liouville_potential(&c, &l.kt, LaplacianVariant::Sum)?;
    let b = dn_matrix(
        ProblemKind::Schrodinger(&q),
        &l.kt,
        &l.omega,
        &l.window,
        &l.window,
        sopts,
    )?;
    let c2 = c.scaled(2.0)?;
    let d2 = dn_matrix(
        ProblemKind::Conductivity(&c2),
        &l.kt,
        &l.omega,
        &l.window,
        &l.window,
        sopts,
    )?;
    let homog = (d2.entries() - e * 2.0).norm() / (2.0 * e.norm());
    let self_dist = dn_opnorm_diff(&a, &a, &l.eng, 0.25)?;
    let eigen_min = e.clone().symmetric_eigenvalues().min() / e.norm();
    Ok(vec![
        le("dnmap.symmetry", asym, 1e-10),
        le("dnmap.liouville_equivalence", a.relative_discrepancy(&b)?, 1e-8),
        le("dnmap.homogeneity", homog, 1e-10),
        eq("dnmap.opnorm_self", self_dist, 0.0),
        ge("dnmap.nonnegative", eigen_min, -1e-12),
    ])
}

fn extcond_checks(_: &VerifyOptions) -> CoreResult<Vec<Criterion>> {
    let defect = (1..=6)
        .map(|m| moment_profile(m).map(|p| p.moment_defects().iter().cloned().fold(0.0, f64::max)))
        .collect::<CoreResult<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let opts = VerifyOptions::default();
    let l = line(512, 0.25, (3.0, 7.0), &opts)?;
    let seq = build_sequence(l.grid, &l.window, &[5.0], 3, &[1, 2, 4], &l.eng, 0.25)?;
    let ws = seq.ws_norms().iter().map(|n| (n - 1.0).abs()).fold(0.0, f64::max);
    let shifted = build_sequence(l.grid, &l.window, &[5.5], 3, &[1, 2, 4], &l.eng, 0.25)?;
    let shift = ((5.5 - 5.0) / l.grid.spacing()).round() as isize;
    let equivariance = seq
        .members()
        .iter()
        .zip(shifted.members())
        .map(|(a, b)| (&a.shifted([shift, 0]) - b).max_abs())
        .fold(0.0, f64::max);
    Ok(vec![
        le("extcond.moment_defect", defect, 1e-8),
        le("extcond.ws_normalization", ws, 1e-10),
        eq("extcond.support_violations", seq.support_violations() as f64, 0.0),
        le("extcond.translation_equivariance", equivariance, 1e-12),
    ])
}

fn experiment_checks(opts: &VerifyOptions) -> CoreResult<Vec<Criterion>> {
    let l = line(512, 0.25, (3.0, 7.0), opts)?;
    let sopts = SolveOptions::default();
    let seq = build_sequence(l.grid, &l.window, &[5.0], 3, &[1, 2, 4], &l.eng, 0.25)?;
    let constant = Conductivity::from_samples(GridFunction::constant(l.grid, 2.5))?;
    let rc = reconstruct_point(
        &constant,
        &l.kt,
        &l.omega,
        &l.window,
        &seq,
        sopts,
        Estimator::ReferenceRatio,
    )?;
    let bumpy = conductivity(l.grid, &[(0.8, 5.0, 1.5)])?;
    let rb = reconstruct_point(
        &bumpy,
        &l.kt,
        &l.omega,
        &l.window,
        &seq,
        sopts,
        Estimator::ReferenceRatio,
    )?;
    let [interior, cross, exterior, e_u] = decompose_energy(&bumpy, &l.kt, &seq.members()[0], &{
        let p = DirichletProblem::new(ProblemKind::Conductivity(&bumpy), &l.omega, seq.members()[0].clone())?;
        solve(&p, &l.kt, sopts)?.u
    })?;
    let small = line(256, 0.25, (3.0, 7.0), opts)?;
    let seq_small = build_sequence(small.grid, &small.window, &[5.75], 3, &[1, 2], &small.eng, 0.25)?;
    let one = conductivity(small.grid, &[])?;
    let two = one.scaled(2.0)?;
    let equal = stability_check(
        &one,
        &one,
        &small.kt,
        &small.eng,
        &small.omega,
        &small.window,
        &[],
        sopts,
    )?;
    let scaled = stability_check(
        &one,
        &two,
        &small.kt,
        &small.eng,
        &small.omega,
        &small.window,
        &[seq_small],
        sopts,
    )?;
    let w2 = RegionMask::window(small.grid, Bounds::interval(-7.0, -3.0), &small.omega, 0.5)?;
    let base = conductivity(small.grid, &[(0.3, 5.5, 2.0)])?;
    let inner = conductivity(small.grid, &[(0.3, 5.5, 2.0), (0.2, 0.0, 1.5)])?;
    let w1 = RegionMask::window(small.grid, Bounds::interval(3.0, 5.0), &small.omega, 0.5)?;
    let same = invariance_probe(&base, &base, &small.kt, &small.omega, &w1, &w2, sopts)?;
    let perturbed = invariance_probe(&base, &inner, &small.kt, &small.omega, &w1, &w2, sopts)?;
    let omega4 = RegionMask::omega(small.grid, Bounds::interval(-2.0, 2.0))?;
    let pc = poincare_check(&omega4, &small.eng, 0.25, 16, SEED)?;
    let exact = pc.discrete_constant.unwrap_or(f64::NAN);
    Ok(vec![
        le("experiments.constant_reconstruction", rc.relative_error, 1e-6),
        le("experiments.pairing_identity", rb.max_pairing_defect, 1e-8),
        le(
            "experiments.energy_decomposition",
            ((interior + cross + exterior) - e_u).abs() / e_u,
            1e-10,
        ),
        eq("experiments.stability_equal_pair", equal.margin, 0.0),
        ge("experiments.stability_scaled_pair", scaled.margin, 0.0),
        le("experiments.invariance_identical", same.discrepancy, 10.0 * sopts.tol),
        gt(
            "experiments.invariance_interior",
            perturbed.discrepancy,
            10.0 * sopts.tol,
        ),
        le("experiments.poincare_bound", pc.max_ratio, exact * (1.0 + 1e-9)),
    ])
}

fn operator_refinement(opts: &VerifyOptions) -> CoreResult<Vec<Criterion>> {
    let mut errs = Vec::new();
    for (m, len) in [(1024, 16.0), (2048, 32.0)] {
        let g = Grid::new(1, len, m)?;
        let kt = kernel(g, 0.25, opts)?;
        let eng = SpectralEngine::new(g);
        let u = radial_bump(g, &[0.0], 2.0);
        errs.push(rel_l2(
            &frac_laplacian_sum(&kt, &u)?,
            &frac_laplacian_spectral(&eng, &u, 0.25)?,
        ));
    }
    Ok(vec![le("operators.refinement_ratio", errs[1] / errs[0], 1.0 - 1e-12)
        .with_note("error at (2m, 2L) over error at (m, L)")])
}

fn operator_checks_2d(opts: &VerifyOptions) -> CoreResult<Vec<Criterion>> {
    let g = Grid::new(2, 16.0, 64)?;
    let kt = kernel(g, 0.25, opts)?;
    let eng = SpectralEngine::new(g);
    let u = radial_bump(g, &[0.0, 0.0], 3.0);
    let sum = frac_laplacian_sum(&kt, &u)?;
    let spectral = frac_laplacian_spectral(&eng, &u, 0.25)?;
    let gag = gagliardo_seminorm_sq(&kt, &u)?;
    let hom = sobolev_norm(&eng, &u, 0.25, SobolevFlavor::Homogeneous)?;
    let pairing = l2_inner(&sum, &u)?;
    let ones = frac_laplacian_sum(&kt, &GridFunction::constant(g, 1.0))?.max_abs();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
    let mut liouville: f64 = 0.0;
    for _ in 0..5 {
        let (a, cx, cy) = (
            rng.random_range(-0.5..1.0),
            rng.random_range(-4.0..4.0),
            rng.random_range(-4.0..4.0),
        );
        let c = Conductivity::from_samples(&GridFunction::constant(g, 1.0) + &(&radial_bump(g, &[cx, cy], 2.5) * a))?;
        let x = random_function(g, &mut rng, None);
        let y = random_function(g, &mut rng, None);
        let scale = (energy(&c, &kt, &x)? * energy(&c, &kt, &y)?).sqrt();
        liouville = liouville.max(fraclab_core::liouville_residual(&c, &kt, &x, &y)? / scale);
    }
    Ok(vec![
        le("operators.2d_spectral_vs_sum", rel_l2(&sum, &spectral), 0.05),
        le(
            "operators.2d_gagliardo_vs_spectral",
            (gag / (hom * hom) - 1.0).abs(),
            0.05,
        ),
        le("operators.2d_gagliardo_identity", (gag - pairing).abs() / gag, 1e-12),
        le("operators.2d_constants_annihilated", ones, 1e-10),
        le("forms.2d_liouville_residual", liouville, 1e-10),
    ])
}

fn solver_checks_2d(opts: &VerifyOptions) -> CoreResult<Vec<Criterion>> {
    let g = Grid::new(2, 16.0, 64)?;
    let kt = kernel(g, 0.25, opts)?;
    let omega = RegionMask::omega(g, Bounds::rect((-2.0, 2.0), (-2.0, 2.0)))?;
    let c = Conductivity::from_samples(&GridFunction::constant(g, 1.0) + &(&radial_bump(g, &[0.5, 0.0], 1.5) * 0.6))?;
    let kind = ProblemKind::Conductivity(&c);
    let f = radial_bump(g, &[5.0, 0.0], 1.5);
    let p = DirichletProblem::new(kind, &omega, f)?;
    let cg = solve(&p, &kt, SolveOptions::default())?;
    let direct = solve(&p, &kt, SolveOptions::direct())?;
    let pc = DirichletProblem::new(
        kind,
        &omega,
        GridFunction::constant(g, -1.5).restricted(&omega.exterior()),
    )?;
    let uc = solve(&pc, &kt, SolveOptions::direct())?.u;
    Ok(vec![
        le("solver.2d_cg_vs_direct", (&cg.u - &direct.u).max_abs(), 1e-8),
        le(
            "solver.2d_constant_exterior",
            (&uc - &GridFunction::constant(g, -1.5)).max_abs(),
            1e-12,
        ),
    ])
}

fn extcond_checks_2d(_: &VerifyOptions) -> CoreResult<Vec<Criterion>> {
    let g = Grid::new(2, 8.0, 128)?;
    let eng = SpectralEngine::new(g);
    let omega = RegionMask::omega(g, Bounds::rect((-1.0, 1.0), (-1.0, 1.0)))?;
    let window = RegionMask::window(g, Bounds::rect((2.0, 3.5), (-1.0, 1.0)), &omega, 0.5)?;
    let seq = build_sequence(g, &window, &[2.75, 0.0], 2, &[1, 2], &eng, 0.25)?;
    let ws = seq.ws_norms().iter().map(|n| (n - 1.0).abs()).fold(0.0, f64::max);
    Ok(vec![
        le("extcond.2d_ws_normalization", ws, 1e-10),
        eq("extcond.2d_support_violations", seq.support_violations() as f64, 0.0),
    ])
}

/// `L = 4`, Omega `(1.4, 1.9)`, window `(-1.1, 1.1)`, `x0 = 0`.
fn scaling_checks(_: &VerifyOptions) -> CoreResult<Vec<Criterion>> {
    let s = 0.25;
    let g = Grid::new(1, 4.0, 2048)?;
    let eng = SpectralEngine::new(g);
    let omega = RegionMask::omega(g, Bounds::interval(1.4, 1.9))?;
    let window = RegionMask::window(g, Bounds::interval(-1.1, 1.1), &omega, 0.2)?;
    let seq = build_sequence(g, &window, &[0.0], 3, &[2, 4, 8, 16], &eng, s)?;
    let rows = scaling_report(&seq, &eng, &[-s, 0.0, 1.0 - s])?;
    let mut out: Vec<Criterion> = rows
        .iter()
        .map(|r| {
            le(
                &format!("extcond.scaling_slope[t={}]", r.t),
                (r.fitted_slope - r.t).abs(),
                0.2,
            )
        })
        .collect();
    out.push(eq(
        "extcond.scaling_l2_decreasing",
        seq.l2_strictly_decreasing() as u8 as f64,
        1.0,
    ));
    Ok(out)
}

fn reconstruction_sweep(opts: &VerifyOptions) -> CoreResult<Vec<Criterion>> {
    let mut errs = Vec::new();
    for m in [512, 1024, 2048] {
        let l = line(m, 0.25, (3.0, 7.0), opts)?;
        let cap = (1.0 / (4.0 * l.grid.spacing())) as usize - 1;
        let scales: Vec<usize> = (0..).map(|k| 1usize << k).take_while(|&n| n <= cap).collect();
        let seq = build_sequence(l.grid, &l.window, &[5.75], 3, &scales, &l.eng, 0.25)?;
        let c = conductivity(l.grid, &[(0.8, 5.0, 1.5)])?;
        let rep = reconstruct_point(
            &c,
            &l.kt,
            &l.omega,
            &l.window,
            &seq,
            SolveOptions::default(),
            Estimator::ReferenceRatio,
        )?;
        errs.push(rep.relative_error);
    }
    Ok(vec![
        le("experiments.reconstruction_error", errs[2], 0.1),
        le(
            "experiments.reconstruction_refines_512_1024",
            errs[1] / errs[0],
            1.0 - 1e-12,
        ),
        le(
            "experiments.reconstruction_refines_1024_2048",
            errs[2] / errs[1],
            1.0 - 1e-12,
        ),
    ])
}

/// (name, bumps of gamma_1, bumps of gamma_2, scale of gamma_2)
type StabilityPair = (&'static str, Vec<(f64, f64, f64)>, Vec<(f64, f64, f64)>, f64);

fn stability_suite(opts: &VerifyOptions) -> CoreResult<Vec<Criterion>> {
    let l = line(1024, 0.25, (3.0, 7.0), opts)?;
    let base = [(0.8, 5.0, 1.5)];
    let pairs: Vec<StabilityPair> = vec![
        ("equal", base.to_vec(), base.to_vec(), 1.0),
        ("scaled", vec![], vec![], 2.0),
        ("window", base.to_vec(), vec![(0.8, 5.0, 1.5), (0.3, 4.5, 0.8)], 1.0),
        ("interior", base.to_vec(), vec![(0.8, 5.0, 1.5), (0.5, 0.0, 1.5)], 1.0),
        ("scaled_bump", base.to_vec(), base.to_vec(), 1.5),
    ];
    let seq = build_sequence(l.grid, &l.window, &[5.75], 3, &[2, 4, 8], &l.eng, 0.25)?;
    pairs
        .iter()
        .map(|(name, a, b, factor)| {
            let c1 = conductivity(l.grid, a)?;
            let c2 = conductivity(l.grid, b)?.scaled(*factor)?;
            let rep = stability_check(
                &c1,
                &c2,
                &l.kt,
                &l.eng,
                &l.omega,
                &l.window,
                std::slice::from_ref(&seq),
                SolveOptions::default(),
            )?;
            Ok(ge(&format!("experiments.stability_margin[{name}]"), rep.margin, 0.0))
        })
        .collect()
}

fn invariance_sweep(opts: &VerifyOptions) -> CoreResult<Vec<Criterion>> {
    let l = line(256, 0.25, (3.0, 5.0), opts)?;
    let w2 = RegionMask::window(l.grid, Bounds::interval(-7.0, -3.0), &l.omega, 0.5)?;
    let base = conductivity(l.grid, &[(0.3, 5.5, 2.0)])?;
    let mut d = Vec::new();
    for amp in [0.1, 0.2, 0.4] {
        let c = conductivity(l.grid, &[(0.3, 5.5, 2.0), (amp, 0.0, 1.5)])?;
        d.push(invariance_probe(&base, &c, &l.kt, &l.omega, &l.window, &w2, SolveOptions::default())?.discrepancy);
    }
    let growth = d.windows(2).map(|w| w[1] / w[0]).fold(f64::INFINITY, f64::min);
    Ok(vec![
        gt("experiments.invariance_monotone", growth, 1.0),
        gt("experiments.invariance_smallest", d[0], 1e-9),
    ])
}
