//! Discrete fractional Laplacians and fractional Sobolev norms.
//!
//! Two discretizations of `(-Delta)^s` live here and are kept independent
//! of each other so they can cross-check:
//!
//! * [`frac_laplacian_spectral`] applies the Fourier multiplier `|xi|^{2s}`;
//! * [`frac_laplacian_sum`] evaluates the singular sum with the kernel
//!   `C_{n,s} |x - y|^{-(n+2s)}`, skipping the diagonal cell.
//!
//! Norm conventions: `||u||_{H^t} = ||<D>^t u||`, the homogeneous seminorm
//! is `|| |xi|^t u_hat ||`, and `||u||_{W^t}^2 = ||u||^2 + ||(-Delta)^{t/2} u||^2`.

mod kernel;
pub mod lattice;
mod spectral;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

pub use kernel::{frac_laplacian_sum, gagliardo_seminorm_sq, KernelTable};
pub use spectral::SpectralEngine;

use crate::error::{FracError, Result};
use crate::grid::GridFunction;

/// Rejects orders outside `0 < s < min(1, n/2)`.
pub fn check_order(n: usize, s: f64) -> Result<()> {
    let upper = f64::min(1.0, n as f64 / 2.0);
    if s.is_finite() && s > 0.0 && s < upper {
        Ok(())
    } else {
        Err(FracError::OrderOutOfRange { s, n })
    }
}

/// `C_{n,s} = 4^s Gamma(n/2 + s) / (pi^{n/2} |Gamma(-s)|)`.
pub fn cns(n: usize, s: f64) -> Result<f64> {
    check_order(n, s)?;
    let nf = n as f64;
    // |Gamma(-s)| = Gamma(1 - s) / s on 0 < s < 1
    let abs_gamma_neg = gamma(1.0 - s) / s;
    Ok(4f64.powf(s) * gamma(0.5 * nf + s) / (std::f64::consts::PI.powf(0.5 * nf) * abs_gamma_neg))
}

/// Spectral fractional Laplacian `F^{-1}(|xi|^{2s} u_hat)`, for any `s >= 0`.
pub fn frac_laplacian_spectral(eng: &SpectralEngine, u: &GridFunction, s: f64) -> Result<GridFunction> {
    if !(s >= 0.0) {
        return Err(FracError::InvalidArgument(format!(
            "order must be nonnegative, got {s}"
        )));
    }
    eng.apply(u, |xi| xi.powf(2.0 * s))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SobolevFlavor {
    Bessel,
    Homogeneous,
    Ws,
}

pub fn sobolev_norm(eng: &SpectralEngine, u: &GridFunction, t: f64, flavor: SobolevFlavor) -> Result<f64> {
    match flavor {
        SobolevFlavor::Bessel => eng.multiplier_norm(u, |xi| (1.0 + xi * xi).powf(0.5 * t)),
        SobolevFlavor::Homogeneous | SobolevFlavor::Ws if !(t >= 0.0) => Err(FracError::InvalidArgument(format!(
            "homogeneous orders must be nonnegative, got {t}"
        ))),
        SobolevFlavor::Homogeneous => eng.multiplier_norm(u, |xi| xi.powf(t)),
        SobolevFlavor::Ws => eng.multiplier_norm(u, |xi| (1.0 + xi.powf(2.0 * t)).sqrt()),
    }
}
