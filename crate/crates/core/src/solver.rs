//! Galerkin solution of the exterior value problems.
//!
//! The unknowns are the values on Omega nodes; exterior data is imposed
//! strongly. Testing the form against interior nodal indicators gives
//! `A u_int = rhs` with, for the conductivity kind,
//!
//! ```text
//! A[i][j] = -h^n w(i, j) g_i g_j            (i != j)
//! A[i][i] =  h^n g_i sum_{y != i} w(i, y) g_y
//! rhs[i]  =  h^n g_i sum_{y in Omega_e} w(i, y) g_y f(y)
//! ```
//!
//! and for the Schrodinger kind the same with `g = 1` plus `h^n q_i` on the
//! diagonal.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, LU};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{FracError, Result};
use crate::forms::{bform_conductivity, bform_schrodinger, Conductivity, Potential};
use crate::grid::{GridFunction, RegionLabel, RegionMask};
use crate::operators::KernelTable;

/// The form defining the equation.
#[derive(Debug, Clone, Copy)]
pub enum ProblemKind<'a> {
    Conductivity(&'a Conductivity),
    Schrodinger(&'a Potential),
}

impl ProblemKind<'_> {
    pub fn form(&self, kt: &KernelTable, u: &GridFunction, v: &GridFunction) -> Result<f64> {
        match self {
            ProblemKind::Conductivity(c) => bform_conductivity(c, kt, u, v),
            ProblemKind::Schrodinger(q) => bform_schrodinger(q, kt, u, v),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ProblemKind::Conductivity(_) => "conductivity",
            ProblemKind::Schrodinger(_) => "schrodinger",
        }
    }

    fn grid_values(&self) -> &GridFunction {
        match self {
            ProblemKind::Conductivity(c) => c.gamma(),
            ProblemKind::Schrodinger(q) => q.values(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DirichletProblem<'a> {
    pub kind: ProblemKind<'a>,
    pub omega: &'a RegionMask,
    pub f: GridFunction,
}

impl<'a> DirichletProblem<'a> {
    pub fn new(kind: ProblemKind<'a>, omega: &'a RegionMask, f: GridFunction) -> Result<Self> {
        check_setup(kind, omega)?;
        check_exterior(omega, &f)?;
        Ok(Self { kind, omega, f })
    }
}

fn check_setup(kind: ProblemKind<'_>, omega: &RegionMask) -> Result<()> {
    if omega.label() != RegionLabel::Omega {
        return Err(FracError::InvalidArgument(
            "problem domain must be an Omega mask".into(),
        ));
    }
    if kind.grid_values().grid() != omega.grid() {
        return Err(FracError::GridMismatch);
    }
    Ok(())
}

fn check_exterior(omega: &RegionMask, f: &GridFunction) -> Result<()> {
    if f.grid() != omega.grid() {
        return Err(FracError::GridMismatch);
    }
    f.check_finite()?;
    let on_omega = f.max_abs_on(omega);
    if on_omega != 0.0 {
        return Err(FracError::DataNotExterior(on_omega));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Cg,
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum IndefiniteFallback {
    Error,
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveOptions {
    pub method: Method,
    pub tol: f64,
    /// Defaults to ten times the interior node count.
    pub max_iter: Option<usize>,
    pub indefinite_fallback: IndefiniteFallback,
    pub jacobi: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            method: Method::Cg,
            tol: 1e-10,
            max_iter: None,
            indefinite_fallback: IndefiniteFallback::Direct,
            jacobi: false,
        }
    }
}

impl SolveOptions {
    pub fn direct() -> Self {
        Self {
            method: Method::Direct,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub u: GridFunction,
    pub iterations: usize,
    pub relative_residual: f64,
    pub method: Method,
}

/// The interior Galerkin operator for one (form, Omega) pair, independent
/// of the exterior data.
#[derive(Debug, Clone)]
pub struct InteriorOperator<'a> {
    kind: ProblemKind<'a>,
    kt: &'a KernelTable,
    interior: Vec<usize>,
    matrix: DMatrix<f64>,
}

impl<'a> InteriorOperator<'a> {
    pub fn assemble(kind: ProblemKind<'a>, kt: &'a KernelTable, omega: &RegionMask) -> Result<Self> {
        check_setup(kind, omega)?;
        if kt.grid() != omega.grid() {
            return Err(FracError::GridMismatch);
        }
        let interior = omega.indices();
        let hn = kt.grid().cell_volume();
        let n = kt.grid().node_count();
        let rows: Vec<Vec<f64>> = match kind {
            ProblemKind::Conductivity(c) => {
                let g = c.sqrt_gamma().values();
                interior
                    .par_iter()
                    .map(|&x| {
                        let diag: f64 = (0..n).zip(g).map(|(y, gy)| kt.weight(x, y) * gy).sum();
                        interior
                            .iter()
                            .map(|&y| {
                                if y == x {
                                    hn * g[x] * diag
                                } else {
                                    -hn * kt.weight(x, y) * g[x] * g[y]
                                }
                            })
                            .collect()
                    })
                    .collect()
            }
            ProblemKind::Schrodinger(q) => {
                let q = q.values().values();
                let row_sum = kt.row_sum();
                interior
                    .par_iter()
                    .map(|&x| {
                        interior
                            .iter()
                            .map(|&y| {
                                if y == x {
                                    hn * (row_sum + q[x])
                                } else {
                                    -hn * kt.weight(x, y)
                                }
                            })
                            .collect()
                    })
                    .collect()
            }
        };
        let ni = interior.len();
        let matrix = DMatrix::from_fn(ni, ni, |r, c| rows[r][c]);
        Ok(Self {
            kind,
            kt,
            interior,
            matrix,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn kind(&self) -> ProblemKind<'a> {
        self.kind
    }

    pub fn kernel(&self) -> &'a KernelTable {
        self.kt
    }

    /// `rhs[i] = -B(f, e_i)` for exterior data `f`.
    pub fn rhs(&self, f: &GridFunction) -> DVector<f64> {
        let hn = self.kt.grid().cell_volume();
        let fv = f.values();
        let support: Vec<usize> = (0..fv.len()).filter(|&y| fv[y] != 0.0).collect();
        let g = match self.kind {
            ProblemKind::Conductivity(c) => Some(c.sqrt_gamma().values()),
            ProblemKind::Schrodinger(_) => None,
        };
        let vals: Vec<f64> = self
            .interior
            .par_iter()
            .map(|&x| {
                let mut acc = 0.0;
                for &y in &support {
                    let gy = g.map_or(1.0, |g| g[y]);
                    acc += self.kt.weight(x, y) * gy * fv[y];
                }
                hn * g.map_or(1.0, |g| g[x]) * acc
            })
            .collect();
        DVector::from_vec(vals)
    }

    /// Exterior data plus interior values.
    pub fn extend(&self, f: &GridFunction, interior_values: &DVector<f64>) -> Result<GridFunction> {
        let mut u = f.clone();
        let vals = u.values_mut();
        for (k, &i) in self.interior.iter().enumerate() {
            vals[i] = interior_values[k];
        }
        u.check_finite()?;
        Ok(u)
    }
}

/// Galerkin matrix and right-hand side of a problem.
pub fn assemble_interior_system(p: &DirichletProblem<'_>, kt: &KernelTable) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let op = InteriorOperator::assemble(p.kind, kt, p.omega)?;
    let rhs = op.rhs(&p.f);
    Ok((op.matrix, rhs))
}

#[derive(Debug, Clone)]
enum Factorization {
    Cholesky(Cholesky<f64, Dyn>),
    Lu(LU<f64, Dyn, Dyn>),
}

impl Factorization {
    fn solve(&self, b: &DVector<f64>) -> Result<DVector<f64>> {
        let x = match self {
            Factorization::Cholesky(ch) => ch.solve(b),
            Factorization::Lu(lu) => lu.solve(b).ok_or(FracError::SingularSystem)?,
        };
        if x.iter().all(|v| v.is_finite()) {
            Ok(x)
        } else {
            Err(FracError::NonFinite("direct solve"))
        }
    }
}

/// A prepared solver for repeated exterior data on the same operator.
#[derive(Debug, Clone)]
pub struct Solver<'a> {
    op: InteriorOperator<'a>,
    opts: SolveOptions,
    factor: Option<Factorization>,
    method: Method,
}

impl<'a> Solver<'a> {
    pub fn new(kind: ProblemKind<'a>, kt: &'a KernelTable, omega: &RegionMask, opts: SolveOptions) -> Result<Self> {
        if !(opts.tol > 0.0) {
            return Err(FracError::InvalidArgument("solver tolerance must be positive".into()));
        }
        let op = InteriorOperator::assemble(kind, kt, omega)?;
        let mut solver = Self {
            op,
            opts,
            factor: None,
            method: opts.method,
        };
        let cholesky = || Cholesky::new(solver.op.matrix.clone());
        match (opts.method, kind) {
            (Method::Direct, ProblemKind::Conductivity(_)) => {
                solver.factor = Some(Factorization::Cholesky(
                    cholesky().ok_or(FracError::IndefiniteOperator)?,
                ));
            }
            (Method::Direct, ProblemKind::Schrodinger(_)) => {
                solver.factor = Some(match cholesky() {
                    Some(ch) => Factorization::Cholesky(ch),
                    None => Factorization::Lu(solver.op.matrix.clone().lu()),
                });
            }
            (Method::Cg, ProblemKind::Conductivity(_)) => {}
            (Method::Cg, ProblemKind::Schrodinger(_)) => {
                // positivity probe: CG needs an SPD operator
                if cholesky().is_none() {
                    match opts.indefinite_fallback {
                        IndefiniteFallback::Error => return Err(FracError::IndefiniteOperator),
                        IndefiniteFallback::Direct => {
                            solver.factor = Some(Factorization::Lu(solver.op.matrix.clone().lu()));
                            solver.method = Method::Direct;
                        }
                    }
                }
            }
        }
        Ok(solver)
    }

    pub fn operator(&self) -> &InteriorOperator<'a> {
        &self.op
    }

    /// The method actually used (CG may have fallen back to direct).
    pub fn method(&self) -> Method {
        self.method
    }

    pub fn solve(&self, f: &GridFunction) -> Result<SolveReport> {
        if f.grid() != self.op.kt.grid() {
            return Err(FracError::GridMismatch);
        }
        f.check_finite()?;
        let omega_max = self
            .op
            .interior
            .iter()
            .map(|&i| f.values()[i].abs())
            .fold(0.0, f64::max);
        if omega_max != 0.0 {
            return Err(FracError::DataNotExterior(omega_max));
        }
        let b = self.op.rhs(f);
        let (x, iterations) = match &self.factor {
            Some(fac) => (fac.solve(&b)?, 0),
            None => self.cg(&b)?,
        };
        let relative_residual = relative_residual(&self.op.matrix, &x, &b);
        if !relative_residual.is_finite() {
            return Err(FracError::NonFinite("solver residual"));
        }
        if self.factor.is_some() && relative_residual > self.opts.tol {
            return Err(FracError::SingularSystem);
        }
        Ok(SolveReport {
            u: self.op.extend(f, &x)?,
            iterations,
            relative_residual,
            method: self.method,
        })
    }

    fn cg(&self, b: &DVector<f64>) -> Result<(DVector<f64>, usize)> {
        let a = &self.op.matrix;
        let n = b.len();
        let max_iter = self.opts.max_iter.unwrap_or(10 * n);
        let bnorm = b.norm();
        let mut x = DVector::zeros(n);
        if bnorm == 0.0 {
            return Ok((x, 0));
        }
        let inv_diag: Option<DVector<f64>> = self.opts.jacobi.then(|| a.diagonal().map(|d| 1.0 / d));
        let precondition = |r: &DVector<f64>| match &inv_diag {
            Some(d) => r.component_mul(d),
            None => r.clone(),
        };
        let mut iterations = 0;
        // restarts guard against drift between the recursive and true residuals
        loop {
            let mut r = b - a * &x;
            if r.norm() <= self.opts.tol * bnorm {
                return Ok((x, iterations));
            }
            let mut z = precondition(&r);
            let mut p = z.clone();
            let mut rz = r.dot(&z);
            loop {
                if iterations >= max_iter {
                    return Err(FracError::NoConvergence {
                        iterations,
                        residual: (b - a * &x).norm() / bnorm,
                    });
                }
                iterations += 1;
                let ap = a * &p;
                let pap = p.dot(&ap);
                if !(pap > 0.0) {
                    return Err(FracError::IndefiniteOperator);
                }
                let alpha = rz / pap;
                x.axpy(alpha, &p, 1.0);
                r.axpy(-alpha, &ap, 1.0);
                if r.norm() <= 0.1 * self.opts.tol * bnorm {
                    break;
                }
                z = precondition(&r);
                let rz_next = r.dot(&z);
                let beta = rz_next / rz;
                rz = rz_next;
                p = &z + beta * &p;
            }
        }
    }
}

fn relative_residual(a: &DMatrix<f64>, x: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let bnorm = b.norm();
    let r = (b - a * x).norm();
    if bnorm == 0.0 {
        r
    } else {
        r / bnorm
    }
}

pub fn solve(p: &DirichletProblem<'_>, kt: &KernelTable, opts: SolveOptions) -> Result<SolveReport> {
    Solver::new(p.kind, kt, p.omega, opts)?.solve(&p.f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{energy, liouville_potential, LaplacianVariant};
    use crate::grid::{Bounds, Grid};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bump(x: f64, c: f64, r: f64) -> f64 {
        let t = (x - c) / r;
        if t.abs() < 1.0 {
            (1.0 - 1.0 / (1.0 - t * t)).exp()
        } else {
            0.0
        }
    }

    struct Setup {
        grid: Grid,
        kt: KernelTable,
        omega: RegionMask,
        window: RegionMask,
    }

    fn setup(m: usize) -> Setup {
        let grid = Grid::new(1, 16.0, m).unwrap();
        let omega = RegionMask::omega(grid, Bounds::interval(-2.0, 2.0)).unwrap();
        let window = RegionMask::window(grid, Bounds::interval(3.0, 7.0), &omega, 0.5).unwrap();
        Setup {
            kt: KernelTable::new(grid, 0.25).unwrap(),
            grid,
            omega,
            window,
        }
    }

    fn window_bump(s: &Setup) -> GridFunction {
        GridFunction::from_fn(s.grid, |x| bump(x[0], 5.0, 1.5))
    }

    #[test]
    fn assembled_matrix_structure() {
        let s = setup(64);
        let one = Conductivity::from_samples(GridFunction::constant(s.grid, 1.0)).unwrap();
        let op = InteriorOperator::assemble(ProblemKind::Conductivity(&one), &s.kt, &s.omega).unwrap();
        let a = op.matrix();
        assert!((a - a.transpose()).amax() <= 1e-12 * a.amax());
        assert!(Cholesky::new(a.clone()).is_some());
        for r in 0..a.nrows() {
            for c in 0..a.ncols() {
                if r != c {
                    assert!(a[(r, c)] <= 0.0);
                }
            }
        }
        // the matrix is the form on interior indicators
        let idx = op.interior();
        for (r, c) in [(0, 0), (0, 3), (5, 2)] {
            let b = bform_conductivity(&one, &s.kt, &s.omega.indicator(idx[c]), &s.omega.indicator(idx[r])).unwrap();
            assert!((a[(r, c)] - b).abs() <= 1e-13 * a.amax());
        }
        let f = window_bump(&s);
        let rhs = op.rhs(&f);
        for r in [0, 7] {
            let b = bform_conductivity(&one, &s.kt, &f, &s.omega.indicator(idx[r])).unwrap();
            assert!((rhs[r] + b).abs() <= 1e-13);
        }
    }

    #[test]
    fn zero_data_gives_zero() {
        let s = setup(64);
        let one = Conductivity::from_samples(GridFunction::constant(s.grid, 1.0)).unwrap();
        let p = DirichletProblem::new(ProblemKind::Conductivity(&one), &s.omega, GridFunction::zeros(s.grid)).unwrap();
        let (_, rhs) = assemble_interior_system(&p, &s.kt).unwrap();
        assert_eq!(rhs.amax(), 0.0);
        let rep = solve(&p, &s.kt, SolveOptions::default()).unwrap();
        assert_eq!(rep.u.max_abs(), 0.0);
    }

    #[test]
    fn constant_exterior_data_is_reproduced() {
        let s = setup(128);
        let c =
            Conductivity::from_samples(GridFunction::from_fn(s.grid, |x| 1.0 + 0.5 * bump(x[0], 0.5, 1.0))).unwrap();
        let f = GridFunction::constant(s.grid, 3.0).restricted(&s.omega.exterior());
        for opts in [SolveOptions::default(), SolveOptions::direct()] {
            let p = DirichletProblem::new(ProblemKind::Conductivity(&c), &s.omega, f.clone()).unwrap();
            let rep = solve(&p, &s.kt, opts).unwrap();
            let err = rep.u.values().iter().map(|v| (v - 3.0).abs()).fold(0.0, f64::max);
            assert!(err <= 1e-9, "{:?}: {err}", opts.method);
            assert!(energy(&c, &s.kt, &rep.u).unwrap().abs() <= 1e-12);
        }
    }

    #[test]
    fn data_on_omega_is_rejected() {
        let s = setup(64);
        let one = Conductivity::from_samples(GridFunction::constant(s.grid, 1.0)).unwrap();
        assert!(matches!(
            DirichletProblem::new(
                ProblemKind::Conductivity(&one),
                &s.omega,
                GridFunction::constant(s.grid, 1.0)
            ),
            Err(FracError::DataNotExterior(_))
        ));
    }

    #[test]
    fn cg_matches_direct_and_keeps_exterior() {
        let s = setup(128);
        let one = Conductivity::from_samples(GridFunction::constant(s.grid, 1.0)).unwrap();
        let f = window_bump(&s);
        let p = DirichletProblem::new(ProblemKind::Conductivity(&one), &s.omega, f.clone()).unwrap();
        let cg = solve(&p, &s.kt, SolveOptions::default()).unwrap();
        let direct = solve(&p, &s.kt, SolveOptions::direct()).unwrap();
        assert_eq!(cg.method, Method::Cg);
        assert!(cg.relative_residual <= 1e-10);
        assert!((&cg.u - &direct.u).max_abs() <= 1e-8);
        let ext = s.omega.exterior();
        assert_eq!((&cg.u - &f).max_abs_on(&ext), 0.0);
        let jac = solve(
            &p,
            &s.kt,
            SolveOptions {
                jacobi: true,
                ..SolveOptions::default()
            },
        )
        .unwrap();
        assert!((&jac.u - &direct.u).max_abs() <= 1e-8);
        assert!(s.window.count() > 0);
    }

    #[test]
    fn liouville_transport_of_solutions() {
        let s = setup(128);
        let c = Conductivity::from_samples(GridFunction::from_fn(s.grid, |x| {
            1.0 + 0.6 * bump(x[0], 1.0, 2.5) + 0.3 * bump(x[0], 5.0, 1.0)
        }))
        .unwrap();
        let q = liouville_potential(&c, &s.kt, LaplacianVariant::Sum).unwrap();
        let f = window_bump(&s);
        let p = DirichletProblem::new(ProblemKind::Conductivity(&c), &s.omega, f.clone()).unwrap();
        let u = solve(&p, &s.kt, SolveOptions::direct()).unwrap().u;
        let gf = c.sqrt_gamma().hadamard(&f).unwrap();
        let p2 = DirichletProblem::new(ProblemKind::Schrodinger(&q), &s.omega, gf).unwrap();
        let v = solve(&p2, &s.kt, SolveOptions::default()).unwrap();
        let gu = c.sqrt_gamma().hadamard(&u).unwrap();
        assert!((&v.u - &gu).max_abs() <= 1e-8);
    }

    #[test]
    fn linearity_and_energy_optimality() {
        let s = setup(128);
        let c =
            Conductivity::from_samples(GridFunction::from_fn(s.grid, |x| 1.0 + 0.4 * bump(x[0], -0.5, 2.0))).unwrap();
        let solver = Solver::new(ProblemKind::Conductivity(&c), &s.kt, &s.omega, SolveOptions::default()).unwrap();
        let f = window_bump(&s);
        let g = GridFunction::from_fn(s.grid, |x| bump(x[0], -5.0, 2.0));
        let uf = solver.solve(&f).unwrap().u;
        let ug = solver.solve(&g).unwrap().u;
        let ufg = solver.solve(&(&(&f * 2.0) - &(&g * 0.5))).unwrap().u;
        assert!((&ufg - &(&(&uf * 2.0) - &(&ug * 0.5))).max_abs() <= 1e-8);

        let e = energy(&c, &s.kt, &uf).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let mut w = uf.clone();
            for i in s.omega.indices() {
                w.values_mut()[i] += rng.random_range(-1e-2..1e-2);
            }
            assert!(e <= energy(&c, &s.kt, &w).unwrap());
        }
    }

    #[test]
    fn indefinite_schrodinger_needs_direct() {
        let s = setup(64);
        let q = Potential::explicit(GridFunction::constant(s.grid, -50.0)).unwrap();
        let kind = ProblemKind::Schrodinger(&q);
        let strict = SolveOptions {
            indefinite_fallback: IndefiniteFallback::Error,
            ..SolveOptions::default()
        };
        assert!(matches!(
            Solver::new(kind, &s.kt, &s.omega, strict),
            Err(FracError::IndefiniteOperator)
        ));
        let solver = Solver::new(kind, &s.kt, &s.omega, SolveOptions::default()).unwrap();
        assert_eq!(solver.method(), Method::Direct);
        let f = window_bump(&s);
        assert!(solver.solve(&f).unwrap().relative_residual <= 1e-10);
    }
}
