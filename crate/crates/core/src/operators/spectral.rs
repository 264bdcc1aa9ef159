use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::Result;
use crate::grid::{Grid, GridFunction};

/// Fourier multipliers on the periodic box.
///
/// Holds FFT plans for one axis length and the per-bin frequency magnitude
/// `|xi|`. Multipliers are functions of `|xi|` only, so real inputs stay real.
pub struct SpectralEngine {
    grid: Grid,
    freq_abs: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for SpectralEngine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralEngine").field("grid", &self.grid).finish()
    }
}

impl SpectralEngine {
    pub fn new(grid: Grid) -> Self {
        let m = grid.nodes_per_axis();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(m);
        let inverse = planner.plan_fft_inverse(m);
        let freq_abs = (0..grid.node_count())
            .map(|k| {
                let mi = grid.multi_index(k);
                (0..grid.dim())
                    .map(|a| grid.frequency(mi[a]).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .collect();
        Self {
            grid,
            freq_abs,
            forward,
            inverse,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// `|xi|` for every FFT bin, in grid storage order.
    pub fn frequency_magnitudes(&self) -> &[f64] {
        &self.freq_abs
    }

    fn transform(&self, buf: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let m = self.grid.nodes_per_axis();
        // rows (the only axis in 1D)
        plan.process(buf);
        if self.grid.dim() == 2 {
            let mut t = vec![Complex64::new(0.0, 0.0); buf.len()];
            transpose(buf, &mut t, m);
            plan.process(&mut t);
            transpose(&t, buf, m);
        }
    }

    /// Unnormalized forward DFT of the samples.
    pub fn forward(&self, u: &GridFunction) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = u.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut buf, &self.forward);
        buf
    }

    /// Inverse DFT (normalized), keeping the real part.
    pub fn inverse_real(&self, mut spectrum: Vec<Complex64>) -> GridFunction {
        self.transform(&mut spectrum, &self.inverse);
        let scale = 1.0 / self.grid.node_count() as f64;
        let values = spectrum.iter().map(|c| c.re * scale).collect();
        GridFunction::from_values(self.grid, values).expect("inverse transform of finite data")
    }

    /// Applies the radial multiplier `w(|xi|)`.
    pub fn apply(&self, u: &GridFunction, w: impl Fn(f64) -> f64) -> Result<GridFunction> {
        self.check(u)?;
        let mut spec = self.forward(u);
        for (c, &xi) in spec.iter_mut().zip(&self.freq_abs) {
            *c *= w(xi);
        }
        let out = self.inverse_real(spec);
        out.check_finite()?;
        Ok(out)
    }

    /// Quadrature norm of `w(D) u`, evaluated on the Fourier side (Parseval).
    pub fn multiplier_norm(&self, u: &GridFunction, w: impl Fn(f64) -> f64) -> Result<f64> {
        self.check(u)?;
        let spec = self.forward(u);
        let sum: f64 = spec
            .iter()
            .zip(&self.freq_abs)
            .map(|(c, &xi)| w(xi).powi(2) * c.norm_sqr())
            .sum();
        Ok((self.grid.cell_volume() * sum / self.grid.node_count() as f64).sqrt())
    }

    /// Bessel potential `<D>^t u`.
    pub fn bessel(&self, u: &GridFunction, t: f64) -> Result<GridFunction> {
        self.apply(u, |xi| (1.0 + xi * xi).powf(0.5 * t))
    }

    fn check(&self, u: &GridFunction) -> Result<()> {
        if *u.grid() == self.grid {
            Ok(())
        } else {
            Err(crate::error::FracError::GridMismatch)
        }
    }
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], m: usize) {
    for i in 0..m {
        for j in 0..m {
            dst[j * m + i] = src[i * m + j];
        }
    }
}
