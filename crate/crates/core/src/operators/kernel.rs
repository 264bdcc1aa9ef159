use rayon::prelude::*;

use super::lattice::{periodic_kernel_1d, periodic_kernel_2d};
use super::{check_order, cns};
use crate::error::{FracError, Result};
use crate::grid::{Grid, GridFunction};

/// Quadrature weights of the singular kernel,
/// `w(x, y) = C * h^n * sum_k |x - y + kL|^{-(n+2s)}` for `x != y`.
///
/// The kernel is summed over all periodic images of the box, so it is the
/// singular-integral form of the same torus operator the spectral engine
/// applies. It depends only on the wrapped index offset, so one value per
/// offset class is stored (`O(m^n)` memory) and every pair weight is a lookup.
#[derive(Debug, Clone)]
pub struct KernelTable {
    grid: Grid,
    s: f64,
    prefactor: f64,
    /// Circulant row: weight for wrapped offset `(d0, d1)` at `d0 * m + d1`.
    circulant: Vec<f64>,
}

impl KernelTable {
    pub fn new(grid: Grid, s: f64) -> Result<Self> {
        let c = cns(grid.dim(), s)?;
        Self::with_prefactor(grid, s, c)
    }

    /// Same kernel with an arbitrary positive constant in place of `C_{n,s}`.
    pub fn with_prefactor(grid: Grid, s: f64, prefactor: f64) -> Result<Self> {
        check_order(grid.dim(), s)?;
        if !(prefactor.is_finite() && prefactor > 0.0) {
            return Err(FracError::InvalidArgument("kernel prefactor must be positive".into()));
        }
        let m = grid.nodes_per_axis();
        let h = grid.spacing();
        let l = grid.length();
        let p = grid.dim() as f64 + 2.0 * s;
        let scale = prefactor * grid.cell_volume();
        let half = m / 2;
        // distinct |wrapped offset| per axis: 0..=m/2
        let distinct: Vec<f64> = match grid.dim() {
            1 => (0..=half)
                .into_par_iter()
                .map(|d| {
                    if d == 0 {
                        0.0
                    } else {
                        periodic_kernel_1d(d as f64 * h, l, p)
                    }
                })
                .collect(),
            _ => (0..(half + 1) * (half + 1))
                .into_par_iter()
                .map(|k| {
                    let (d0, d1) = (k / (half + 1), k % (half + 1));
                    if d0 == 0 && d1 == 0 {
                        0.0
                    } else {
                        periodic_kernel_2d([d0 as f64 * h, d1 as f64 * h], l, p)
                    }
                })
                .collect(),
        };
        let fold = |d: usize| d.min(m - d);
        let circulant = match grid.dim() {
            1 => (0..m).map(|d| scale * distinct[fold(d)]).collect(),
            _ => (0..m * m)
                .map(|k| {
                    let (d0, d1) = (fold(k / m), fold(k % m));
                    scale * distinct[d0 * (half + 1) + d1]
                })
                .collect(),
        };
        Ok(Self {
            grid,
            s,
            prefactor,
            circulant,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn order(&self) -> f64 {
        self.s
    }

    pub fn prefactor(&self) -> f64 {
        self.prefactor
    }

    #[inline]
    fn offset_index(&self, x: usize, y: usize) -> usize {
        let m = self.grid.nodes_per_axis();
        let mask = m - 1;
        match self.grid.dim() {
            1 => x.wrapping_sub(y) & mask,
            _ => {
                let (x0, x1) = (x / m, x & mask);
                let (y0, y1) = (y / m, y & mask);
                (x0.wrapping_sub(y0) & mask) * m + (x1.wrapping_sub(y1) & mask)
            }
        }
    }

    /// Pair weight `w(x, y)`; zero on the diagonal.
    #[inline]
    pub fn weight(&self, x: usize, y: usize) -> f64 {
        self.circulant[self.offset_index(x, y)]
    }

    /// `sum_{y != x} w(x, y)`, identical for every node.
    pub fn row_sum(&self) -> f64 {
        self.circulant.iter().sum()
    }

    fn check(&self, u: &GridFunction) -> Result<()> {
        if *u.grid() == self.grid {
            Ok(())
        } else {
            Err(FracError::GridMismatch)
        }
    }

    /// Per-row partial sums of `f(x, y, w(x, y))` over `y != x`, computed in
    /// parallel by rows; each row sums in index order so results do not
    /// depend on scheduling.
    pub(crate) fn row_partials<F>(&self, f: F) -> Vec<f64>
    where
        F: Fn(usize, usize, f64) -> f64 + Sync,
    {
        let n = self.grid.node_count();
        (0..n)
            .into_par_iter()
            .map(|x| {
                let mut acc = 0.0;
                for y in 0..n {
                    if y != x {
                        acc += f(x, y, self.weight(x, y));
                    }
                }
                acc
            })
            .collect()
    }

    /// `(1/2) h^n sum_{x != y} w g(x) g(y) (u(x)-u(y)) (v(x)-v(y))`, with
    /// `g = 1` when absent.
    pub fn pair_form(&self, g: Option<&GridFunction>, u: &GridFunction, v: &GridFunction) -> Result<f64> {
        self.check(u)?;
        self.check(v)?;
        let (u, v) = (u.values(), v.values());
        let partials = match g {
            None => self.row_partials(|x, y, w| w * (u[x] - u[y]) * (v[x] - v[y])),
            Some(g) => {
                self.check(g)?;
                let g = g.values();
                self.row_partials(|x, y, w| w * g[x] * g[y] * (u[x] - u[y]) * (v[x] - v[y]))
            }
        };
        Ok(0.5 * self.grid.cell_volume() * partials.iter().sum::<f64>())
    }
}

/// Singular-sum fractional Laplacian `v(x) = sum_{y != x} w(x, y) (u(x) - u(y))`.
pub fn frac_laplacian_sum(kt: &KernelTable, u: &GridFunction) -> Result<GridFunction> {
    kt.check(u)?;
    let vals = u.values();
    let out = kt.row_partials(|x, y, w| w * (vals[x] - vals[y]));
    GridFunction::from_values(kt.grid, out)
}

/// Double-sum Gagliardo seminorm `(1/2) h^n sum_{x != y} w (u(x) - u(y))^2`.
pub fn gagliardo_seminorm_sq(kt: &KernelTable, u: &GridFunction) -> Result<f64> {
    kt.pair_form(None, u, u)
}
