use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fraclab_core::{
    build_sequence, bump, dn_matrix, frac_laplacian_spectral, frac_laplacian_sum, reconstruct_point, Bounds,
    Conductivity, Estimator, Grid, GridFunction, KernelTable, ProblemKind, RegionMask, SolveOptions, Solver,
    SpectralEngine,
};
use std::hint::black_box;

fn laplacians(c: &mut Criterion) {
    let mut group = c.benchmark_group("laplacian");
    for m in [256, 1024, 4096] {
        let g = Grid::new(1, 16.0, m).unwrap();
        let kt = KernelTable::new(g, 0.25).unwrap();
        let eng = SpectralEngine::new(g);
        let u = GridFunction::from_fn(g, |x| bump(x[0] / 2.0));
        group.bench_with_input(BenchmarkId::new("sum", m), &u, |b, u| {
            b.iter(|| frac_laplacian_sum(&kt, black_box(u)))
        });
        group.bench_with_input(BenchmarkId::new("spectral", m), &u, |b, u| {
            b.iter(|| frac_laplacian_spectral(&eng, black_box(u), 0.25))
        });
    }
    group.finish();
    c.bench_function("kernel_table/1d_m4096", |b| {
        let g = Grid::new(1, 16.0, 4096).unwrap();
        b.iter(|| KernelTable::new(black_box(g), 0.25))
    });
}

struct Setup {
    grid: Grid,
    kt: KernelTable,
    omega: RegionMask,
    window: RegionMask,
    cond: Conductivity,
}

fn setup(m: usize) -> Setup {
    let grid = Grid::new(1, 16.0, m).unwrap();
    let omega = RegionMask::omega(grid, Bounds::interval(-2.0, 2.0)).unwrap();
    let window = RegionMask::window(grid, Bounds::interval(3.0, 7.0), &omega, 0.5).unwrap();
    let cond =
        Conductivity::from_samples(GridFunction::from_fn(grid, |x| 1.0 + 0.8 * bump((x[0] - 5.0) / 1.5))).unwrap();
    Setup {
        kt: KernelTable::new(grid, 0.25).unwrap(),
        grid,
        omega,
        window,
        cond,
    }
}

fn solves(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve");
    group.sample_size(20);
    for m in [256, 1024] {
        let st = setup(m);
        let f = GridFunction::from_fn(st.grid, |x| bump((x[0] - 5.0) / 1.5));
        for (name, opts) in [("cg", SolveOptions::default()), ("direct", SolveOptions::direct())] {
            let solver = Solver::new(ProblemKind::Conductivity(&st.cond), &st.kt, &st.omega, opts).unwrap();
            group.bench_with_input(BenchmarkId::new(name, m), &f, |b, f| {
                b.iter(|| solver.solve(black_box(f)))
            });
        }
    }
    group.finish();
}

fn experiments(c: &mut Criterion) {
    let mut group = c.benchmark_group("experiments");
    group.sample_size(10);
    let st = setup(256);
    group.bench_function("dn_matrix/m256", |b| {
        b.iter(|| {
            dn_matrix(
                ProblemKind::Conductivity(&st.cond),
                &st.kt,
                &st.omega,
                &st.window,
                &st.window,
                SolveOptions::default(),
            )
        })
    });
    let st = setup(1024);
    let eng = SpectralEngine::new(st.grid);
    let seq = build_sequence(st.grid, &st.window, &[5.75], 3, &[1, 2, 4, 8], &eng, 0.25).unwrap();
    group.bench_function("reconstruct/m1024", |b| {
        b.iter(|| {
            reconstruct_point(
                &st.cond,
                &st.kt,
                &st.omega,
                &st.window,
                &seq,
                SolveOptions::default(),
                Estimator::ReferenceRatio,
            )
        })
    });
    group.finish();
}

criterion_group!(benches, laplacians, solves, experiments);
criterion_main!(benches);
