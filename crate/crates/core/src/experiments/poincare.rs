use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{FracError, Result};
use crate::grid::{GridFunction, RegionLabel, RegionMask};
use crate::operators::{check_order, sobolev_norm, SobolevFlavor, SpectralEngine};

/// Sine modes per axis in the random samples.
const MODES: usize = 6;
/// Largest Omega for which the exact discrete constant is computed.
const EXACT_LIMIT: usize = 2048;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoincareReport {
    /// `||u||_{L^2} / ||(-Delta)^{s/2} u||` per sample.
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    /// Supremum over all nodal functions supported in Omega, from the
    /// smallest eigenvalue of the compressed operator.
    pub discrete_constant: Option<f64>,
}

/// Random smooth function supported in the box of `omega`: a sine series
/// vanishing on the box boundary, with `1/k` decaying random coefficients.
fn sample(omega: &RegionMask, rng: &mut ChaCha8Rng) -> Result<GridFunction> {
    let grid = *omega.grid();
    let bounds = omega
        .bounds()
        .ok_or_else(|| FracError::InvalidArgument("Omega has no bounds".into()))?;
    let axes = bounds.axes().to_vec();
    let dim = grid.dim();
    let coeffs: Vec<f64> = (0..MODES.pow(dim as u32))
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    let mut u = GridFunction::zeros(grid);
    for i in omega.indices() {
        let x = grid.coords(i);
        let mut acc = 0.0;
        for (c, &a) in coeffs.iter().enumerate() {
            let mut term = a;
            let mut rest = c;
            for (d, &(lo, hi)) in axes.iter().enumerate().take(dim) {
                let k = (rest % MODES + 1) as f64;
                rest /= MODES;
                term *= (k * std::f64::consts::PI * (x[d] - lo) / (hi - lo)).sin() / k;
            }
            acc += term;
        }
        u.values_mut()[i] = acc;
    }
    Ok(u)
}

pub fn poincare_check(
    omega: &RegionMask,
    eng: &SpectralEngine,
    s: f64,
    sample_count: usize,
    seed: u64,
) -> Result<PoincareReport> {
    let grid = *omega.grid();
    check_order(grid.dim(), s)?;
    if omega.label() != RegionLabel::Omega {
        return Err(FracError::InvalidArgument(
            "Poincare check runs on an Omega mask".into(),
        ));
    }
    if *eng.grid() != grid {
        return Err(FracError::GridMismatch);
    }
    if sample_count == 0 {
        return Err(FracError::InvalidArgument("need at least one sample".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ratios = (0..sample_count)
        .map(|_| {
            let u = sample(omega, &mut rng)?;
            ratio(eng, &u, s)
        })
        .collect::<Result<Vec<_>>>()?;
    let discrete_constant = if omega.count() <= EXACT_LIMIT {
        Some(discrete_constant(omega, eng, s)?)
    } else {
        None
    };
    Ok(PoincareReport {
        max_ratio: ratios.iter().cloned().fold(0.0, f64::max),
        ratios,
        discrete_constant,
    })
}

/// `||u||_{L^2} / ||(-Delta)^{s/2} u||`.
pub(crate) fn ratio(eng: &SpectralEngine, u: &GridFunction, s: f64) -> Result<f64> {
    let l2 = u.l2_norm();
    if l2 == 0.0 {
        return Err(FracError::DegenerateSample("sample vanishes identically"));
    }
    let semi = sobolev_norm(eng, u, s, SobolevFlavor::Homogeneous)?;
    if !(semi > 0.0) {
        return Err(FracError::DegenerateSample("sample has zero seminorm"));
    }
    Ok(l2 / semi)
}

fn discrete_constant(omega: &RegionMask, eng: &SpectralEngine, s: f64) -> Result<f64> {
    let nodes = omega.indices();
    let n = nodes.len();
    let mut a = DMatrix::zeros(n, n);
    for (j, &node) in nodes.iter().enumerate() {
        let lap = eng.apply(&omega.indicator(node), |xi| xi.powf(2.0 * s))?;
        for (i, &row) in nodes.iter().enumerate() {
            a[(i, j)] = lap.values()[row];
        }
    }
    let a = (&a + a.transpose()) * 0.5;
    let lmin = SymmetricEigen::new(a).eigenvalues.min();
    if !(lmin > 0.0) {
        return Err(FracError::DegenerateSample("compressed operator is not positive"));
    }
    Ok(1.0 / lmin.sqrt())
}
