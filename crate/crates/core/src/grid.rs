//! Truncated periodic box `[-L/2, L/2)^n`, node masks for the regions
//! Omega / exterior / measurement window, and grid functions with the
//! quadrature inner product `h^n * sum(u * v)`.
//!
//! Node `i` on an axis sits at `-L/2 + i*h`. In two dimensions nodes are
//! stored row-major: flat index `i0 * m + i1`.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use serde::Serialize;

use crate::error::{FracError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    dim: usize,
    length: f64,
    nodes_per_axis: usize,
    spacing: f64,
}

impl Grid {
    pub fn new(dim: usize, length: f64, nodes_per_axis: usize) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(FracError::UnsupportedDimension(dim));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(FracError::InvalidLength(length));
        }
        if nodes_per_axis < 16 || !nodes_per_axis.is_power_of_two() {
            return Err(FracError::InvalidResolution(nodes_per_axis));
        }
        Ok(Self {
            dim,
            length,
            nodes_per_axis,
            spacing: length / nodes_per_axis as f64,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn nodes_per_axis(&self) -> usize {
        self.nodes_per_axis
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn node_count(&self) -> usize {
        self.nodes_per_axis.pow(self.dim as u32)
    }

    /// Quadrature weight `h^n` of one node.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    pub fn axis_coord(&self, i: usize) -> f64 {
        -0.5 * self.length + i as f64 * self.spacing
    }

    pub fn multi_index(&self, idx: usize) -> [usize; 2] {
        match self.dim {
            1 => [idx, 0],
            _ => [idx / self.nodes_per_axis, idx % self.nodes_per_axis],
        }
    }

    pub fn flat_index(&self, mi: [usize; 2]) -> usize {
        match self.dim {
            1 => mi[0],
            _ => mi[0] * self.nodes_per_axis + mi[1],
        }
    }

    /// Coordinates of a node; the second entry is 0 in one dimension.
    pub fn coords(&self, idx: usize) -> [f64; 2] {
        let mi = self.multi_index(idx);
        let mut x = [0.0; 2];
        for (a, xa) in x.iter_mut().enumerate().take(self.dim) {
            *xa = self.axis_coord(mi[a]);
        }
        x
    }

    /// Periodic index difference `i - j` wrapped into `[-m/2, m/2)`.
    pub fn wrapped_offset(&self, i: usize, j: usize) -> isize {
        let m = self.nodes_per_axis as isize;
        let d = (i as isize - j as isize).rem_euclid(m);
        if d >= m / 2 {
            d - m
        } else {
            d
        }
    }

    /// Signed integer wavenumber for FFT bin `k`, in `[-m/2, m/2)`.
    pub fn signed_wavenumber(&self, k: usize) -> isize {
        let m = self.nodes_per_axis as isize;
        let k = k as isize;
        if k >= m / 2 {
            k - m
        } else {
            k
        }
    }

    /// Angular frequency `2 pi k / L` of FFT bin `k`.
    pub fn frequency(&self, k: usize) -> f64 {
        2.0 * PI * self.signed_wavenumber(k) as f64 / self.length
    }

    /// Nearest node to `point` and the Euclidean snap distance.
    pub fn nearest_node(&self, point: &[f64]) -> Result<(usize, f64)> {
        if point.len() != self.dim {
            return Err(FracError::InvalidArgument(format!(
                "point has {} coordinates, grid has dimension {}",
                point.len(),
                self.dim
            )));
        }
        let mut mi = [0usize; 2];
        let mut dist2 = 0.0;
        for a in 0..self.dim {
            let t = (point[a] + 0.5 * self.length) / self.spacing;
            if !t.is_finite() {
                return Err(FracError::InvalidArgument("non-finite point".into()));
            }
            let i = (t.round() as isize).rem_euclid(self.nodes_per_axis as isize) as usize;
            mi[a] = i;
            let d = point[a] - self.axis_coord(i);
            dist2 += d * d;
        }
        Ok((self.flat_index(mi), dist2.sqrt()))
    }

    fn check_bounds(&self, bounds: &Bounds) -> Result<()> {
        if bounds.axes.len() != self.dim {
            return Err(FracError::InvalidBounds(format!(
                "expected {} intervals, got {}",
                self.dim,
                bounds.axes.len()
            )));
        }
        let half = 0.5 * self.length;
        for &(lo, hi) in &bounds.axes {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(FracError::InvalidBounds(format!("({lo}, {hi}) is not an interval")));
            }
            if lo < -half || hi > half {
                return Err(FracError::InvalidBounds(format!(
                    "({lo}, {hi}) leaves the box [{}, {})",
                    -half, half
                )));
            }
        }
        Ok(())
    }
}

/// An open axis-aligned box, one interval per axis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bounds {
    axes: Vec<(f64, f64)>,
}

impl Bounds {
    pub fn new(axes: Vec<(f64, f64)>) -> Self {
        Self { axes }
    }

    pub fn interval(lo: f64, hi: f64) -> Self {
        Self::new(vec![(lo, hi)])
    }

    pub fn rect(x: (f64, f64), y: (f64, f64)) -> Self {
        Self::new(vec![x, y])
    }

    pub fn axes(&self) -> &[(f64, f64)] {
        &self.axes
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        self.axes.iter().zip(point).all(|(&(lo, hi), &x)| lo < x && x < hi)
    }

    /// Closed cube `center + [-r, r]^n` lies inside the open box.
    pub fn contains_cube(&self, center: &[f64], r: f64) -> bool {
        self.axes
            .iter()
            .zip(center)
            .all(|(&(lo, hi), &c)| lo < c - r && c + r < hi)
    }

    /// Distance between two boxes on the torus of side `period`; zero when
    /// they overlap or touch. The second value reports a genuine overlap.
    pub fn periodic_distance(&self, other: &Bounds, period: f64) -> (f64, bool) {
        let mut d2 = 0.0;
        let mut overlap = true;
        for (&(a1, b1), &(a2, b2)) in self.axes.iter().zip(&other.axes) {
            let mut gap = f64::INFINITY;
            let mut axis_overlap = false;
            for shift in [-period, 0.0, period] {
                let (c, d) = (a2 + shift, b2 + shift);
                if c < b1 && a1 < d {
                    axis_overlap = true;
                }
                gap = gap.min((c - b1).max(a1 - d).max(0.0));
            }
            overlap &= axis_overlap;
            d2 += gap * gap;
        }
        (d2.sqrt(), overlap)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RegionLabel {
    Omega,
    OmegaExt,
    Window,
}

/// Boolean node mask for one of the regions of the exterior value problem.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionMask {
    grid: Grid,
    inside: Vec<bool>,
    label: RegionLabel,
    bounds: Option<Bounds>,
    separation: Option<f64>,
}

impl RegionMask {
    fn from_bounds(grid: Grid, bounds: Bounds, label: RegionLabel) -> Result<Self> {
        grid.check_bounds(&bounds)?;
        let inside: Vec<bool> = (0..grid.node_count())
            .map(|i| bounds.contains(&grid.coords(i)[..grid.dim()]))
            .collect();
        if !inside.iter().any(|&b| b) {
            return Err(FracError::EmptyRegion);
        }
        Ok(Self {
            grid,
            inside,
            label,
            bounds: Some(bounds),
            separation: None,
        })
    }

    /// Omega: the nodes strictly inside `bounds`.
    pub fn omega(grid: Grid, bounds: Bounds) -> Result<Self> {
        Self::from_bounds(grid, bounds, RegionLabel::Omega)
    }

    /// A measurement window at distance at least `min_separation > 0` from
    /// Omega (measured between the open boxes, periodically).
    pub fn window(grid: Grid, bounds: Bounds, omega: &RegionMask, min_separation: f64) -> Result<Self> {
        if omega.label != RegionLabel::Omega || omega.grid != grid {
            return Err(FracError::InvalidArgument(
                "window separation must be checked against an Omega mask on the same grid".into(),
            ));
        }
        if !(min_separation > 0.0) {
            return Err(FracError::InvalidArgument("window separation must be positive".into()));
        }
        let mut mask = Self::from_bounds(grid, bounds, RegionLabel::Window)?;
        let omega_bounds = omega.bounds.as_ref().expect("Omega masks carry bounds");
        let (dist, overlap) = mask
            .bounds
            .as_ref()
            .unwrap()
            .periodic_distance(omega_bounds, grid.length());
        if overlap {
            return Err(FracError::WindowOverlapsOmega);
        }
        if dist < min_separation {
            return Err(FracError::WindowTooClose {
                dist,
                required: min_separation,
            });
        }
        mask.separation = Some(dist);
        Ok(mask)
    }

    /// The complement of this mask, labelled as the exterior.
    pub fn exterior(&self) -> Self {
        Self {
            grid: self.grid,
            inside: self.inside.iter().map(|b| !b).collect(),
            label: RegionLabel::OmegaExt,
            bounds: None,
            separation: None,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn label(&self) -> RegionLabel {
        self.label
    }

    pub fn bounds(&self) -> Option<&Bounds> {
        self.bounds.as_ref()
    }

    /// Distance to Omega, recorded for windows.
    pub fn separation(&self) -> Option<f64> {
        self.separation
    }

    pub fn contains(&self, idx: usize) -> bool {
        self.inside[idx]
    }

    pub fn mask(&self) -> &[bool] {
        &self.inside
    }

    pub fn count(&self) -> usize {
        self.inside.iter().filter(|&&b| b).count()
    }

    pub fn indices(&self) -> Vec<usize> {
        self.inside
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }

    /// Nodal indicator of node `idx`.
    pub fn indicator(&self, idx: usize) -> GridFunction {
        let mut f = GridFunction::zeros(self.grid);
        f.values[idx] = 1.0;
        f
    }
}

/// Real samples on every node of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.node_count()],
        }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(FracError::GridMismatch);
        }
        let f = Self { grid, values };
        f.check_finite()?;
        Ok(f)
    }

    /// Samples `f` at every node; `f` receives the first `n` coordinates.
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..grid.node_count())
            .map(|i| f(&grid.coords(i)[..grid.dim()]))
            .collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn check_finite(&self) -> Result<()> {
        if self.values.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(FracError::NonFinite("grid function"))
        }
    }

    pub fn same_grid(&self, other: &GridFunction) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(FracError::GridMismatch)
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise product.
    pub fn hadamard(&self, other: &GridFunction) -> Result<Self> {
        self.same_grid(other)?;
        Ok(Self {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect(),
        })
    }

    /// Copy that vanishes outside `mask`.
    pub fn restricted(&self, mask: &RegionMask) -> Self {
        Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(mask.mask())
                .map(|(&v, &b)| if b { v } else { 0.0 })
                .collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_on(&self, mask: &RegionMask) -> f64 {
        self.values
            .iter()
            .zip(mask.mask())
            .filter(|(_, &b)| b)
            .fold(0.0, |m, (v, _)| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn l2_norm(&self) -> f64 {
        (self.grid.cell_volume() * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    /// Circular shift by whole nodes along every axis.
    pub fn shifted(&self, shift: [isize; 2]) -> Self {
        let g = self.grid;
        let m = g.nodes_per_axis() as isize;
        let mut out = vec![0.0; self.values.len()];
        for (idx, &v) in self.values.iter().enumerate() {
            let mi = g.multi_index(idx);
            let mut tgt = [0usize; 2];
            for a in 0..g.dim() {
                tgt[a] = (mi[a] as isize + shift[a]).rem_euclid(m) as usize;
            }
            out[g.flat_index(tgt)] = v;
        }
        Self { grid: g, values: out }
    }
}

/// Quadrature inner product `h^n * sum(u * v)`.
pub fn l2_inner(u: &GridFunction, v: &GridFunction) -> Result<f64> {
    u.same_grid(v)?;
    let s: f64 = u.values.iter().zip(&v.values).map(|(a, b)| a * b).sum();
    Ok(u.grid.cell_volume() * s)
}

// Operator sugar. These panic on mismatched grids, like shape mismatches in
// array libraries; the fallible forms are `hadamard` and `l2_inner`.

impl Add for &GridFunction {
    type Output = GridFunction;
    fn add(self, rhs: &GridFunction) -> GridFunction {
        assert_eq!(self.grid, rhs.grid, "grid mismatch");
        GridFunction {
            grid: self.grid,
            values: self.values.iter().zip(&rhs.values).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &GridFunction {
    type Output = GridFunction;
    fn sub(self, rhs: &GridFunction) -> GridFunction {
        assert_eq!(self.grid, rhs.grid, "grid mismatch");
        GridFunction {
            grid: self.grid,
            values: self.values.iter().zip(&rhs.values).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul<f64> for &GridFunction {
    type Output = GridFunction;
    fn mul(self, c: f64) -> GridFunction {
        self.map(|v| c * v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn grid_examples() {
        let g = Grid::new(1, 16.0, 256).unwrap();
        assert_eq!(g.spacing(), 0.0625);
        assert_eq!(g.node_count(), 256);
        let g2 = Grid::new(2, 8.0, 64).unwrap();
        assert_eq!(g2.spacing(), 0.125);
        assert_eq!(g2.node_count(), 4096);
        assert_eq!(Grid::new(3, 16.0, 256), Err(FracError::UnsupportedDimension(3)));
        assert_eq!(Grid::new(1, 16.0, 100), Err(FracError::InvalidResolution(100)));
        assert_eq!(Grid::new(1, 16.0, 8), Err(FracError::InvalidResolution(8)));
        assert!(Grid::new(1, -1.0, 64).is_err());
    }

    #[test]
    fn spacing_times_nodes_is_length() {
        for (l, m) in [(16.0, 256), (3.7, 1024), (0.1, 16)] {
            let g = Grid::new(1, l, m).unwrap();
            assert_eq!(g.spacing() * m as f64, l);
        }
    }

    #[test]
    fn node_coordinates() {
        let g = Grid::new(2, 8.0, 64).unwrap();
        assert_eq!(g.coords(0), [-4.0, -4.0]);
        let idx = g.flat_index([32, 1]);
        assert_eq!(g.coords(idx), [0.0, -4.0 + 0.125]);
        assert_eq!(g.multi_index(idx), [32, 1]);
    }

    #[test]
    fn frequency_lattice_is_bijective() {
        let g = Grid::new(1, 16.0, 64).unwrap();
        let mut ks: Vec<isize> = (0..64).map(|k| g.signed_wavenumber(k)).collect();
        ks.sort();
        assert_eq!(ks, (-32..32).collect::<Vec<_>>());
        assert!((g.frequency(1) - 2.0 * PI / 16.0).abs() < 1e-15);
    }

    #[test]
    fn region_examples() {
        let g = Grid::new(1, 16.0, 256).unwrap();
        let omega = RegionMask::omega(g, Bounds::interval(-2.0, 2.0)).unwrap();
        for i in 0..g.node_count() {
            let x = g.coords(i)[0];
            assert_eq!(omega.contains(i), x.abs() < 2.0);
        }
        let w = RegionMask::window(g, Bounds::interval(4.0, 6.0), &omega, g.spacing()).unwrap();
        assert_eq!(w.separation(), Some(2.0));
        assert_eq!(
            RegionMask::window(g, Bounds::interval(1.0, 3.0), &omega, g.spacing()),
            Err(FracError::WindowOverlapsOmega)
        );
        assert!(matches!(
            RegionMask::window(g, Bounds::interval(2.0, 3.0), &omega, g.spacing()),
            Err(FracError::WindowTooClose { .. })
        ));
        assert_eq!(
            RegionMask::omega(g, Bounds::interval(0.01, 0.02)),
            Err(FracError::EmptyRegion)
        );
        assert!(RegionMask::omega(g, Bounds::interval(-9.0, 0.0)).is_err());
    }

    #[test]
    fn window_wraps_around_the_torus() {
        let g = Grid::new(1, 16.0, 256).unwrap();
        let omega = RegionMask::omega(g, Bounds::interval(-8.0, -6.0)).unwrap();
        let err = RegionMask::window(g, Bounds::interval(7.5, 7.9), &omega, 0.5).unwrap_err();
        assert!(matches!(err, FracError::WindowTooClose { .. }));
    }

    #[test]
    fn masks_partition_nodes() {
        let g = Grid::new(2, 8.0, 32).unwrap();
        let omega = RegionMask::omega(g, Bounds::rect((-1.0, 1.0), (-2.0, 0.5))).unwrap();
        let ext = omega.exterior();
        let w = RegionMask::window(g, Bounds::rect((2.0, 3.0), (-1.0, 1.0)), &omega, 0.5).unwrap();
        for i in 0..g.node_count() {
            assert!(omega.contains(i) ^ ext.contains(i));
            if w.contains(i) {
                assert!(ext.contains(i));
            }
        }
        assert_eq!(omega.count() + ext.count(), g.node_count());
    }

    #[test]
    fn l2_inner_examples() {
        let g = Grid::new(1, 16.0, 256).unwrap();
        let one = GridFunction::constant(g, 1.0);
        assert!((l2_inner(&one, &one).unwrap() - 16.0).abs() < 1e-12);
        // odd about 0 (node m/2 sits at the origin; node 0 at -L/2 pairs with itself)
        let odd = GridFunction::from_fn(g, |x| if x[0] == -8.0 { 0.0 } else { x[0].sin() });
        assert!(l2_inner(&one, &odd).unwrap().abs() < 1e-12);
        let mut ind = GridFunction::zeros(g);
        for i in 10..17 {
            ind.values_mut()[i] = 1.0;
        }
        assert!((l2_inner(&ind, &one).unwrap() - 7.0 * g.spacing()).abs() < 1e-15);
        let other = GridFunction::zeros(Grid::new(1, 8.0, 256).unwrap());
        assert_eq!(l2_inner(&one, &other), Err(FracError::GridMismatch));
    }

    #[test]
    fn nearest_node_snaps() {
        let g = Grid::new(1, 16.0, 256).unwrap();
        let (i, d) = g.nearest_node(&[5.03]).unwrap();
        assert!((g.coords(i)[0] - 5.0).abs() < 1e-15);
        assert!((d - 0.03).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn l2_inner_symmetric_positive(vals in proptest::collection::vec(-1.0f64..1.0, 32), other in proptest::collection::vec(-1.0f64..1.0, 32)) {
            let g = Grid::new(1, 4.0, 32).unwrap();
            let u = GridFunction::from_values(g, vals).unwrap();
            let v = GridFunction::from_values(g, other).unwrap();
            let a = l2_inner(&u, &v).unwrap();
            let b = l2_inner(&v, &u).unwrap();
            prop_assert!((a - b).abs() <= 1e-15 * (1.0 + a.abs()));
            let uu = l2_inner(&u, &u).unwrap();
            prop_assert!(uu >= 0.0);
            if u.max_abs() > 0.0 {
                prop_assert!(uu > 0.0);
            }
        }
    }
}
