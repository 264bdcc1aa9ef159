//! Acceptance criteria 1-10, one line each. Exits nonzero if any fails.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use fraclab_core::experiments::energy_estimate_check;
use fraclab_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Bumps = Vec<(f64, f64, f64)>;
type Check = fn() -> Outcome;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn rel_l2(a: &GridFunction, b: &GridFunction) -> f64 {
    (a - b).l2_norm() / b.l2_norm()
}

fn bump_at(grid: Grid, c: f64, r: f64) -> GridFunction {
    GridFunction::from_fn(grid, |x| bump((x[0] - c) / r))
}

fn conductivity(grid: Grid, terms: &[(f64, f64, f64)]) -> Conductivity {
    Conductivity::from_samples(GridFunction::from_fn(grid, |x| {
        1.0 + terms.iter().map(|&(a, c, r)| a * bump((x[0] - c) / r)).sum::<f64>()
    }))
    .unwrap()
}

fn random(grid: Grid, rng: &mut ChaCha8Rng) -> GridFunction {
    GridFunction::from_values(
        grid,
        (0..grid.node_count()).map(|_| rng.random_range(-1.0..1.0)).collect(),
    )
    .unwrap()
}

/// `L = 16`, Omega `(-2, 2)`, window `(3, 7)` at distance 0.5.
struct Line {
    grid: Grid,
    kt: KernelTable,
    eng: SpectralEngine,
    omega: RegionMask,
    window: RegionMask,
}

fn line(m: usize) -> Line {
    let grid = Grid::new(1, 16.0, m).unwrap();
    let omega = RegionMask::omega(grid, Bounds::interval(-2.0, 2.0)).unwrap();
    let window = RegionMask::window(grid, Bounds::interval(3.0, 7.0), &omega, 0.5).unwrap();
    Line {
        kt: KernelTable::new(grid, 0.25).unwrap(),
        eng: SpectralEngine::new(grid),
        grid,
        omega,
        window,
    }
}

fn cross_validation(m: usize, len: f64) -> (f64, GridFunction, KernelTable, SpectralEngine) {
    let g = Grid::new(1, len, m).unwrap();
    let kt = KernelTable::new(g, 0.25).unwrap();
    let eng = SpectralEngine::new(g);
    let u = bump_at(g, 0.0, 2.0);
    let err = rel_l2(
        &frac_laplacian_sum(&kt, &u).unwrap(),
        &frac_laplacian_spectral(&eng, &u, 0.25).unwrap(),
    );
    (err, u, kt, eng)
}

fn criterion_1() -> Outcome {
    let t = Instant::now();
    let (e1, ..) = cross_validation(1024, 16.0);
    let secs = t.elapsed().as_secs_f64();
    let (e2, ..) = cross_validation(2048, 32.0);
    outcome(
        e1 <= 0.05 && e2 < e1 && secs < 10.0,
        format!("rel L2 {e1:.3e} <= 5e-2, refined {e2:.3e} < {e1:.3e}, {secs:.2}s < 10s"),
    )
}

fn criterion_2() -> Outcome {
    let (_, u, kt, eng) = cross_validation(1024, 16.0);
    let gag = gagliardo_seminorm_sq(&kt, &u).unwrap();
    let hom = sobolev_norm(&eng, &u, 0.25, SobolevFlavor::Homogeneous).unwrap();
    let gap = (gag / (hom * hom) - 1.0).abs();
    let pairing = l2_inner(&frac_laplacian_sum(&kt, &u).unwrap(), &u).unwrap();
    let identity = (gag - pairing).abs() / gag;
    outcome(
        gap <= 0.05 && identity <= 1e-12,
        format!("seminorm gap {gap:.3e} <= 5e-2, identity {identity:.3e} <= 1e-12"),
    )
}

fn criterion_3() -> Outcome {
    let t = Instant::now();
    let grid = Grid::new(1, 16.0, 256).unwrap();
    let kt = KernelTable::new(grid, 0.25).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let terms: Vec<(f64, f64, f64)> = (0..3)
            .map(|_| {
                (
                    rng.random_range(-0.6..1.5),
                    rng.random_range(-7.0..7.0),
                    rng.random_range(0.3..3.0),
                )
            })
            .collect();
        let c = conductivity(grid, &terms);
        let (u, v) = (random(grid, &mut rng), random(grid, &mut rng));
        let scale = (energy(&c, &kt, &u).unwrap() * energy(&c, &kt, &v).unwrap()).sqrt();
        worst = worst.max(liouville_residual(&c, &kt, &u, &v).unwrap() / scale);
    }
    let secs = t.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-10 && secs < 30.0,
        format!("max relative residual {worst:.3e} <= 1e-10 over 100 triples, {secs:.2}s < 30s"),
    )
}

fn criterion_4() -> Outcome {
    let l = line(512);
    let c = conductivity(l.grid, &[(0.8, 5.0, 1.5), (0.5, 0.0, 1.5)]);
    let kind = ProblemKind::Conductivity(&c);
    let p = DirichletProblem::new(kind, &l.omega, bump_at(l.grid, 5.0, 1.5)).unwrap();
    let cg = solve(&p, &l.kt, SolveOptions::default()).unwrap();
    let direct = solve(&p, &l.kt, SolveOptions::direct()).unwrap();
    let agree = (&cg.u - &direct.u).max_abs();
    let pc = DirichletProblem::new(
        kind,
        &l.omega,
        GridFunction::constant(l.grid, 2.5).restricted(&l.omega.exterior()),
    )
    .unwrap();
    let uc = solve(&pc, &l.kt, SolveOptions::direct()).unwrap().u;
    let const_err = (&uc - &GridFunction::constant(l.grid, 2.5)).max_abs();
    let e0 = energy(&c, &l.kt, &direct.u).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = f64::INFINITY;
    for k in 0..100 {
        let amp = 10f64.powi(-(k % 5) - 1);
        let v = &random(l.grid, &mut rng).restricted(&l.omega) * amp;
        worst = worst.min(energy(&c, &l.kt, &(&direct.u + &v)).unwrap() - e0);
    }
    outcome(
        agree <= 1e-8 && const_err <= 1e-12 && worst >= 0.0,
        format!("cg vs direct {agree:.3e} <= 1e-8, constant data error {const_err:.3e} <= 1e-12, min energy increase {worst:.3e} >= 0"),
    )
}

fn criterion_5() -> Outcome {
    let s = 0.25;
    let g = Grid::new(1, 4.0, 2048).unwrap();
    let eng = SpectralEngine::new(g);
    let omega = RegionMask::omega(g, Bounds::interval(1.4, 1.9)).unwrap();
    let window = RegionMask::window(g, Bounds::interval(-1.1, 1.1), &omega, 0.2).unwrap();
    let seq = build_sequence(g, &window, &[0.0], 3, &[2, 4, 8, 16], &eng, s).unwrap();
    let rows = scaling_report(&seq, &eng, &[-s, 0.0, 1.0 - s]).unwrap();
    let slopes_ok = rows.iter().all(|r| (r.fitted_slope - r.t).abs() <= 0.2);
    let defect = seq.profile().moment_defects().iter().cloned().fold(0.0, f64::max);
    let ws = seq.ws_norms().iter().map(|n| (n - 1.0).abs()).fold(0.0, f64::max);
    let support = seq.support_violations();
    let slopes: Vec<String> = rows
        .iter()
        .map(|r| format!("t={:.2}: {:.3}", r.t, r.fitted_slope))
        .collect();
    outcome(
        slopes_ok && defect <= 1e-8 && ws <= 1e-10 && support == 0,
        format!(
            "slopes [{}] within 0.2, moment defect {defect:.1e} <= 1e-8, |W^s - 1| {ws:.1e} <= 1e-10, support violations {support}",
            slopes.join(", ")
        ),
    )
}

fn criterion_6() -> Outcome {
    let s = 0.45;
    let g = Grid::new(1, 4.0, 2048).unwrap();
    let eng = SpectralEngine::new(g);
    let kt = KernelTable::new(g, s).unwrap();
    let omega = RegionMask::omega(g, Bounds::interval(1.4, 1.9)).unwrap();
    let window = RegionMask::window(g, Bounds::interval(-1.1, 1.1), &omega, 0.2).unwrap();
    let seq = build_sequence(g, &window, &[0.0], 1, &[1, 2, 4, 8, 16, 32, 64], &eng, s).unwrap();
    let l2 = seq.l2_norms();
    let drop = l2[0] / l2[l2.len() - 1];
    let mut detail = Vec::new();
    let mut bounded = true;
    for (name, c) in [
        ("gamma=1", conductivity(g, &[])),
        ("bumpy", conductivity(g, &[(0.6, 1.65, 0.5), (0.4, -0.5, 0.4)])),
    ] {
        let rep = energy_estimate_check(
            ProblemKind::Conductivity(&c),
            &kt,
            &eng,
            &omega,
            &window,
            seq.members(),
            SolveOptions::default(),
        )
        .unwrap();
        let ratios: Vec<f64> = rep.rows.iter().map(|r| r.ratio).collect();
        let half = ratios.len() / 2;
        let head = ratios[..half].iter().cloned().fold(0.0, f64::max);
        let tail = ratios[half..].iter().cloned().fold(0.0, f64::max);
        bounded &= ratios.iter().all(|r| r.is_finite()) && tail <= head;
        detail.push(format!(
            "{name} max ratio {:.3e} (late-N max {tail:.3e} <= early-N max {head:.3e})",
            rep.max_ratio
        ));
    }
    outcome(
        bounded && drop >= 4.0,
        format!("{}, L2 drop {drop:.2}x >= 4x", detail.join("; ")),
    )
}

fn reconstruction_error(m: usize) -> (f64, f64, f64) {
    let l = line(m);
    let cap = (1.0 / (4.0 * l.grid.spacing())) as usize - 1;
    let scales: Vec<usize> = (0..).map(|k| 1usize << k).take_while(|&n| n <= cap).collect();
    let seq = build_sequence(l.grid, &l.window, &[5.75], 3, &scales, &l.eng, 0.25).unwrap();
    let c = conductivity(l.grid, &[(0.8, 5.0, 1.5)]);
    let rep = reconstruct_point(
        &c,
        &l.kt,
        &l.omega,
        &l.window,
        &seq,
        SolveOptions::default(),
        Estimator::ReferenceRatio,
    )
    .unwrap();
    let one = Conductivity::from_samples(GridFunction::constant(l.grid, 2.5)).unwrap();
    let exact = reconstruct_point(
        &one,
        &l.kt,
        &l.omega,
        &l.window,
        &seq,
        SolveOptions::default(),
        Estimator::ReferenceRatio,
    )
    .unwrap();
    (
        rep.relative_error,
        rep.max_pairing_defect.max(exact.max_pairing_defect),
        exact.relative_error,
    )
}

fn criterion_7() -> Outcome {
    let t = Instant::now();
    let runs: Vec<(f64, f64, f64)> = [512, 1024, 2048].into_iter().map(reconstruction_error).collect();
    let secs = t.elapsed().as_secs_f64();
    let errs: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let pairing = runs.iter().map(|r| r.1).fold(0.0, f64::max);
    let constant = runs.iter().map(|r| r.2).fold(0.0, f64::max);
    let improving = errs.windows(2).all(|w| w[1] < w[0]);
    outcome(
        errs[2] <= 0.1 && improving && pairing <= 1e-8 && constant <= 1e-6 && secs < 300.0,
        format!(
            "rel error {:.3e} -> {:.3e} -> {:.3e} (m = 512, 1024, 2048), final <= 0.1; pairing {pairing:.1e} <= 1e-8; constant {constant:.1e} <= 1e-6; {secs:.1}s",
            errs[0], errs[1], errs[2]
        ),
    )
}

fn criterion_8() -> Outcome {
    let l = line(1024);
    let base = vec![(0.8, 5.0, 1.5)];
    let pairs: Vec<(&str, Bumps, Bumps, f64)> = vec![
        ("equal", base.clone(), base.clone(), 1.0),
        ("scaled", vec![], vec![], 2.0),
        ("scaled-bump", base.clone(), base.clone(), 1.5),
        ("window", base.clone(), vec![(0.8, 5.0, 1.5), (0.3, 4.5, 0.8)], 1.0),
        ("interior", base.clone(), vec![(0.8, 5.0, 1.5), (0.5, 0.0, 1.5)], 1.0),
        ("mixed", vec![], vec![(0.2, 0.0, 1.0), (0.3, 6.0, 2.0)], 1.2),
    ];
    let seq = build_sequence(l.grid, &l.window, &[5.75], 3, &[2, 4, 8], &l.eng, 0.25).unwrap();
    let mut ok = true;
    let mut margins = Vec::new();
    for (name, a, b, factor) in pairs {
        let c1 = conductivity(l.grid, &a);
        let c2 = conductivity(l.grid, &b).scaled(factor).unwrap();
        let rep = stability_check(
            &c1,
            &c2,
            &l.kt,
            &l.eng,
            &l.omega,
            &l.window,
            std::slice::from_ref(&seq),
            SolveOptions::default(),
        )
        .unwrap();
        ok &= rep.margin >= 0.0;
        margins.push(format!("{name} {:.3e}", rep.margin));
    }
    outcome(ok, format!("margins [{}] >= 0", margins.join(", ")))
}

fn criterion_9() -> Outcome {
    let l = line(256);
    let w1 = RegionMask::window(l.grid, Bounds::interval(3.0, 5.0), &l.omega, 0.5).unwrap();
    let w2 = RegionMask::window(l.grid, Bounds::interval(-7.0, -3.0), &l.omega, 0.5).unwrap();
    let opts = SolveOptions::default();
    let threshold = 10.0 * opts.tol;
    let base = conductivity(l.grid, &[(0.3, 5.5, 2.0)]);
    let same = invariance_probe(&base, &base, &l.kt, &l.omega, &w1, &w2, opts)
        .unwrap()
        .discrepancy;
    let d: Vec<f64> = [0.1, 0.2, 0.4, 0.5]
        .iter()
        .map(|&a| {
            let c = conductivity(l.grid, &[(0.3, 5.5, 2.0), (a, 0.0, 1.5)]);
            invariance_probe(&base, &c, &l.kt, &l.omega, &w1, &w2, opts)
                .unwrap()
                .discrepancy
        })
        .collect();
    let monotone = d.windows(2).all(|w| w[1] > w[0]);
    outcome(
        same <= threshold && d.iter().all(|&x| x > threshold) && monotone,
        format!(
            "identical {same:.1e} <= {threshold:.0e}; interior amplitudes 0.1..0.5 give [{}] > {threshold:.0e}, monotone",
            d.iter().map(|x| format!("{x:.2e}")).collect::<Vec<_>>().join(", ")
        ),
    )
}

fn criterion_10() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str, threads: &str| {
        let out = dir.path().join(sub);
        let st = Command::new(env!("CARGO_BIN_EXE_fraclab"))
            .env("FRACLAB_DETERMINISTIC", "1")
            .env("FRACLAB_THREADS", threads)
            .args(["verify", "--full", "--out"])
            .arg(&out)
            .output()
            .unwrap();
        (st.status.code(), out)
    };
    let (c1, a) = run("a", "1");
    let (c2, b) = run("b", "4");
    let same = |f: &str| std::fs::read(Path::new(&a).join(f)).ok() == std::fs::read(Path::new(&b).join(f)).ok();
    let identical = same("report.json") && same("trace.csv");
    outcome(
        identical && c1 == Some(0) && c2 == Some(0),
        format!("full verify exit codes {c1:?}/{c2:?}, report.json and trace.csv byte-identical: {identical}"),
    )
}

fn main() {
    let criteria: [(&str, Check); 10] = [
        ("operator cross-validation", criterion_1),
        ("Gagliardo isometry", criterion_2),
        ("exact Liouville reduction", criterion_3),
        ("solver correctness", criterion_4),
        ("exterior-condition scaling", criterion_5),
        ("energy estimate", criterion_6),
        ("exterior reconstruction", criterion_7),
        ("stability inequality", criterion_8),
        ("invariance probe", criterion_9),
        ("determinism", criterion_10),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        let mark = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {:>2} [{mark}] {name}: {}", k + 1, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
