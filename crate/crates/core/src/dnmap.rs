//! Exterior Dirichlet-to-Neumann maps on measurement windows.
//!
//! `<Lambda f, g> = B(u_f, g)` for exterior data `f` and test data `g`. The
//! windowed matrix holds this pairing on nodal indicators. Operator norms of
//! differences are taken in the `H^s` pairing of those indicators, with the
//! Gram matrix `G_ij = h^n <<D>^s e_i, <D>^s e_j>`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{FracError, Result};
use crate::grid::{GridFunction, RegionLabel, RegionMask};
use crate::operators::{KernelTable, SpectralEngine};
use crate::solver::{ProblemKind, SolveOptions, Solver};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DnKind {
    Conductivity,
    Schrodinger,
}

impl From<ProblemKind<'_>> for DnKind {
    fn from(k: ProblemKind<'_>) -> Self {
        match k {
            ProblemKind::Conductivity(_) => DnKind::Conductivity,
            ProblemKind::Schrodinger(_) => DnKind::Schrodinger,
        }
    }
}

/// `entries[(i, j)] = <Lambda e_j, e_i>` for `e_j` on `window_in`, `e_i` on `window_out`.
#[derive(Debug, Clone)]
pub struct DnMatrix {
    window_in: RegionMask,
    window_out: RegionMask,
    in_nodes: Vec<usize>,
    out_nodes: Vec<usize>,
    entries: DMatrix<f64>,
    kind: DnKind,
    max_residual: f64,
}

impl DnMatrix {
    pub fn from_parts(
        window_in: RegionMask,
        window_out: RegionMask,
        entries: DMatrix<f64>,
        kind: DnKind,
    ) -> Result<Self> {
        let in_nodes = window_in.indices();
        let out_nodes = window_out.indices();
        if entries.shape() != (out_nodes.len(), in_nodes.len()) {
            return Err(FracError::InvalidArgument(format!(
                "DN matrix must be {}x{}, got {}x{}",
                out_nodes.len(),
                in_nodes.len(),
                entries.nrows(),
                entries.ncols()
            )));
        }
        Ok(Self {
            window_in,
            window_out,
            in_nodes,
            out_nodes,
            entries,
            kind,
            max_residual: 0.0,
        })
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn window_in(&self) -> &RegionMask {
        &self.window_in
    }

    pub fn window_out(&self) -> &RegionMask {
        &self.window_out
    }

    pub fn in_nodes(&self) -> &[usize] {
        &self.in_nodes
    }

    pub fn out_nodes(&self) -> &[usize] {
        &self.out_nodes
    }

    pub fn kind(&self) -> DnKind {
        self.kind
    }

    /// Largest relative residual over the column solves.
    pub fn max_residual(&self) -> f64 {
        self.max_residual
    }

    fn check_compatible(&self, other: &DnMatrix) -> Result<()> {
        if self.in_nodes != other.in_nodes
            || self.out_nodes != other.out_nodes
            || self.window_in.grid() != other.window_in.grid()
        {
            return Err(FracError::InvalidArgument(
                "DN matrices are defined on different windows".into(),
            ));
        }
        Ok(())
    }

    /// Relative Frobenius distance `||A - B||_F / max(||A||_F, ||B||_F)`.
    pub fn relative_discrepancy(&self, other: &DnMatrix) -> Result<f64> {
        self.check_compatible(other)?;
        let scale = self.entries.norm().max(other.entries.norm());
        if scale == 0.0 {
            return Ok(0.0);
        }
        Ok((&self.entries - &other.entries).norm() / scale)
    }
}

fn check_test_data(omega: &RegionMask, g: &GridFunction) -> Result<()> {
    if g.grid() != omega.grid() {
        return Err(FracError::GridMismatch);
    }
    let on_omega = g.max_abs_on(omega);
    if on_omega != 0.0 {
        return Err(FracError::DataNotExterior(on_omega));
    }
    Ok(())
}

/// `<Lambda f, g> = B(u_f, g)`.
pub fn dn_apply(
    kind: ProblemKind<'_>,
    kt: &KernelTable,
    omega: &RegionMask,
    f: &GridFunction,
    g: &GridFunction,
    opts: SolveOptions,
) -> Result<f64> {
    check_test_data(omega, g)?;
    let solver = Solver::new(kind, kt, omega, opts)?;
    let u = solver.solve(f)?.u;
    kind.form(kt, &u, g)
}

/// `B(u, e_x)` expanded on the single row `x`.
fn pair_with_indicator(kind: ProblemKind<'_>, kt: &KernelTable, u: &[f64], x: usize) -> f64 {
    let hn = kt.grid().cell_volume();
    match kind {
        ProblemKind::Conductivity(c) => {
            let g = c.sqrt_gamma().values();
            let mut acc = 0.0;
            for y in 0..u.len() {
                acc += kt.weight(x, y) * g[y] * (u[x] - u[y]);
            }
            hn * g[x] * acc
        }
        ProblemKind::Schrodinger(q) => {
            let mut acc = 0.0;
            for y in 0..u.len() {
                acc += kt.weight(x, y) * (u[x] - u[y]);
            }
            hn * (acc + q.values().values()[x] * u[x])
        }
    }
}

/// One solve per excitation node; columns are computed in parallel and
/// assembled in node order.
pub fn dn_matrix(
    kind: ProblemKind<'_>,
    kt: &KernelTable,
    omega: &RegionMask,
    window_in: &RegionMask,
    window_out: &RegionMask,
    opts: SolveOptions,
) -> Result<DnMatrix> {
    for w in [window_in, window_out] {
        if w.label() != RegionLabel::Window {
            return Err(FracError::InvalidArgument("DN windows must be Window masks".into()));
        }
        if w.grid() != kt.grid() {
            return Err(FracError::GridMismatch);
        }
    }
    let solver = Solver::new(kind, kt, omega, opts)?;
    let in_nodes = window_in.indices();
    let out_nodes = window_out.indices();
    let columns: Vec<Result<(Vec<f64>, f64)>> = in_nodes
        .par_iter()
        .map(|&j| {
            let rep = solver.solve(&window_in.indicator(j))?;
            let u = rep.u.values();
            let col = out_nodes.iter().map(|&i| pair_with_indicator(kind, kt, u, i)).collect();
            Ok((col, rep.relative_residual))
        })
        .collect();
    let mut entries = DMatrix::zeros(out_nodes.len(), in_nodes.len());
    let mut max_residual: f64 = 0.0;
    for (j, col) in columns.into_iter().enumerate() {
        let (col, res) = col?;
        max_residual = max_residual.max(res);
        for (i, v) in col.into_iter().enumerate() {
            entries[(i, j)] = v;
        }
    }
    Ok(DnMatrix {
        window_in: window_in.clone(),
        window_out: window_out.clone(),
        in_nodes,
        out_nodes,
        entries,
        kind: kind.into(),
        max_residual,
    })
}

/// `G_ij = h^n <<D>^s e_i, <D>^s e_j>` on the given nodes.
pub fn sobolev_gram(eng: &SpectralEngine, nodes: &[usize], s: f64) -> Result<DMatrix<f64>> {
    let grid = *eng.grid();
    let hn = grid.cell_volume();
    let cols: Vec<Result<Vec<f64>>> = nodes
        .par_iter()
        .map(|&j| {
            let mut e = GridFunction::zeros(grid);
            e.values_mut()[j] = 1.0;
            let ge = eng.apply(&e, |xi| (1.0 + xi * xi).powf(s))?;
            Ok(nodes.iter().map(|&i| hn * ge.values()[i]).collect())
        })
        .collect();
    let n = nodes.len();
    let mut g = DMatrix::zeros(n, n);
    for (j, col) in cols.into_iter().enumerate() {
        for (i, v) in col?.into_iter().enumerate() {
            g[(i, j)] = v;
        }
    }
    Ok((&g + g.transpose()) * 0.5)
}

/// `G^{-1/2}` of a symmetric positive definite Gram matrix.
pub fn inverse_sqrt(g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::new(g.clone());
    let max = eig.eigenvalues.amax();
    if !(max > 0.0) || eig.eigenvalues.iter().any(|&l| !(l > 1e-13 * max)) {
        return Err(FracError::DegenerateGram);
    }
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
    Ok(&eig.eigenvectors * d * eig.eigenvectors.transpose())
}

/// `G_out^{-1/2} (A - B) G_in^{-1/2}`.
pub fn whitened_difference(a: &DnMatrix, b: &DnMatrix, eng: &SpectralEngine, s: f64) -> Result<DMatrix<f64>> {
    a.check_compatible(b)?;
    if eng.grid() != a.window_in.grid() {
        return Err(FracError::GridMismatch);
    }
    let gin = inverse_sqrt(&sobolev_gram(eng, &a.in_nodes, s)?)?;
    let gout = if a.out_nodes == a.in_nodes {
        gin.clone()
    } else {
        inverse_sqrt(&sobolev_gram(eng, &a.out_nodes, s)?)?
    };
    Ok(gout * (&a.entries - &b.entries) * gin)
}

/// Largest singular value by power iteration on `K^T K`, accelerated by
/// repeated squaring so clustered top singular values still converge: after
/// `j` squarings the iterate is `(K^T K)^{2^j}` applied to a start vector.
pub fn largest_singular_value(k: &DMatrix<f64>) -> Result<f64> {
    if k.amax() == 0.0 {
        return Ok(0.0);
    }
    let ktk = k.transpose() * k;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let start = DVector::from_fn(ktk.ncols(), |_, _| rng.random_range(0.5..1.5));
    let rayleigh = |v: &DVector<f64>| v.dot(&(&ktk * v)) / v.dot(v);
    let mut power = &ktk / ktk.amax();
    let mut lambda = rayleigh(&(&power * &start));
    for _ in 0..64 {
        power = &power * &power;
        let scale = power.amax();
        if !(scale > 0.0 && scale.is_finite()) {
            break;
        }
        power /= scale;
        let next = rayleigh(&(&power * &start));
        if !next.is_finite() {
            return Err(FracError::NonFinite("power iteration"));
        }
        if (next - lambda).abs() <= 1e-15 * next {
            return Ok(next.max(0.0).sqrt());
        }
        lambda = next;
    }
    if lambda.is_finite() {
        Ok(lambda.max(0.0).sqrt())
    } else {
        Err(FracError::NonFinite("power iteration"))
    }
}

/// `||Lambda_A - Lambda_B||` between window data spaces with the `H^s` norm.
pub fn dn_opnorm_diff(a: &DnMatrix, b: &DnMatrix, eng: &SpectralEngine, s: f64) -> Result<f64> {
    largest_singular_value(&whitened_difference(a, b, eng, s)?)
}
