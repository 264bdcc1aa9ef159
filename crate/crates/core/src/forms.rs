//! Conductivities, potentials, and the two nonlocal bilinear forms.
//!
//! With `g = gamma^{1/2}` and the kernel weights `w` of [`KernelTable`],
//!
//! ```text
//! B_gamma(u, v) = (1/2) h^n sum_{x != y} w g(x) g(y) (u(x)-u(y)) (v(x)-v(y))
//! B_q(u, v)     = (1/2) h^n sum_{x != y} w (u(x)-u(y)) (v(x)-v(y)) + h^n sum q u v
//! ```
//!
//! Both use the same double sum, so the Liouville reduction
//! `B_gamma(u, v) = B_q(g u, g v)` with `q = -(L m)/g`, `m = g - 1`, `L` the
//! sum Laplacian, holds exactly up to rounding.

use serde::Serialize;

use crate::error::{FracError, Result};
use crate::grid::{l2_inner, GridFunction};
use crate::operators::{frac_laplacian_spectral, frac_laplacian_sum, KernelTable, SpectralEngine};

#[derive(Debug, Clone, PartialEq)]
pub struct Conductivity {
    gamma: GridFunction,
    gamma0: f64,
    sqrt_gamma: GridFunction,
    deviation: GridFunction,
}

impl Conductivity {
    /// Checks `min(gamma) >= gamma0 > 0`.
    pub fn new(gamma: GridFunction, gamma0: f64) -> Result<Self> {
        gamma.check_finite()?;
        let min = gamma.min();
        if !(gamma0 > 0.0) || min < gamma0 {
            return Err(FracError::ConductivityNotPositive { min, gamma0 });
        }
        let sqrt_gamma = gamma.map(f64::sqrt);
        let deviation = sqrt_gamma.map(|g| g - 1.0);
        Ok(Self {
            gamma,
            gamma0,
            sqrt_gamma,
            deviation,
        })
    }

    /// Uses the sampled minimum as the lower bound.
    pub fn from_samples(gamma: GridFunction) -> Result<Self> {
        let min = gamma.min();
        Self::new(gamma, min)
    }

    pub fn gamma(&self) -> &GridFunction {
        &self.gamma
    }

    pub fn gamma0(&self) -> f64 {
        self.gamma0
    }

    pub fn sqrt_gamma(&self) -> &GridFunction {
        &self.sqrt_gamma
    }

    /// Background deviation `m = gamma^{1/2} - 1`.
    pub fn deviation(&self) -> &GridFunction {
        &self.deviation
    }

    pub fn sup(&self) -> f64 {
        self.gamma.max()
    }

    /// `c * gamma` for `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(&self.gamma * c, self.gamma0 * c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LaplacianVariant {
    Sum,
    Spectral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PotentialProvenance {
    Liouville(LaplacianVariant),
    Explicit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    q: GridFunction,
    provenance: PotentialProvenance,
}

impl Potential {
    pub fn explicit(q: GridFunction) -> Result<Self> {
        q.check_finite()?;
        Ok(Self {
            q,
            provenance: PotentialProvenance::Explicit,
        })
    }

    pub fn values(&self) -> &GridFunction {
        &self.q
    }

    pub fn provenance(&self) -> PotentialProvenance {
        self.provenance
    }
}

/// `q = -((-Delta)^s m) / gamma^{1/2}` with the chosen Laplacian.
pub fn liouville_potential(c: &Conductivity, kt: &KernelTable, variant: LaplacianVariant) -> Result<Potential> {
    c.gamma.same_grid(&GridFunction::zeros(*kt.grid()))?;
    let lap = match variant {
        LaplacianVariant::Sum => frac_laplacian_sum(kt, &c.deviation)?,
        LaplacianVariant::Spectral => {
            let eng = SpectralEngine::new(*kt.grid());
            frac_laplacian_spectral(&eng, &c.deviation, kt.order())?
        }
    };
    let q: Vec<f64> = lap
        .values()
        .iter()
        .zip(c.sqrt_gamma.values())
        .map(|(l, g)| -l / g)
        .collect();
    Ok(Potential {
        q: GridFunction::from_values(*kt.grid(), q)?,
        provenance: PotentialProvenance::Liouville(variant),
    })
}

pub fn bform_conductivity(c: &Conductivity, kt: &KernelTable, u: &GridFunction, v: &GridFunction) -> Result<f64> {
    kt.pair_form(Some(&c.sqrt_gamma), u, v)
}

/// Dirichlet energy `E_gamma(u) = B_gamma(u, u)`.
pub fn energy(c: &Conductivity, kt: &KernelTable, u: &GridFunction) -> Result<f64> {
    bform_conductivity(c, kt, u, u)
}

pub fn bform_schrodinger(q: &Potential, kt: &KernelTable, u: &GridFunction, v: &GridFunction) -> Result<f64> {
    let grad = kt.pair_form(None, u, v)?;
    let pot = l2_inner(&q.q.hadamard(u)?, v)?;
    Ok(grad + pot)
}

/// `|B_gamma(u, v) - B_q(g u, g v)|` with `q` the sum-Laplacian Liouville potential.
pub fn liouville_residual(c: &Conductivity, kt: &KernelTable, u: &GridFunction, v: &GridFunction) -> Result<f64> {
    let q = liouville_potential(c, kt, LaplacianVariant::Sum)?;
    let lhs = bform_conductivity(c, kt, u, v)?;
    let rhs = bform_schrodinger(&q, kt, &c.sqrt_gamma.hadamard(u)?, &c.sqrt_gamma.hadamard(v)?)?;
    Ok((lhs - rhs).abs())
}
