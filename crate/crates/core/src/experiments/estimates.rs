use serde::Serialize;

use crate::error::{FracError, Result};
use crate::grid::{GridFunction, RegionMask};
use crate::operators::{sobolev_norm, KernelTable, SobolevFlavor, SpectralEngine};
use crate::solver::{ProblemKind, SolveOptions, Solver};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyEstimateRow {
    /// `||f||_{L^2(W)}`.
    pub data_norm: f64,
    /// `||u_f - f||_{H^s}` (Bessel).
    pub correction_norm: f64,
    /// Their quotient; 0 for `f = 0`.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyEstimateReport {
    pub separation: f64,
    pub rows: Vec<EnergyEstimateRow>,
    pub max_ratio: f64,
}

/// `||u_f - f||_{H^s} / ||f||_{L^2(W)}` for data supported in the window.
#[allow(clippy::too_many_arguments)]
pub fn energy_estimate_check(
    kind: ProblemKind<'_>,
    kt: &KernelTable,
    eng: &SpectralEngine,
    omega: &RegionMask,
    window: &RegionMask,
    f_list: &[GridFunction],
    opts: SolveOptions,
) -> Result<EnergyEstimateReport> {
    let separation = window
        .separation()
        .ok_or_else(|| FracError::InvalidArgument("energy estimates need a Window mask".into()))?;
    let exterior = window.exterior();
    let solver = Solver::new(kind, kt, omega, opts)?;
    let rows = f_list
        .iter()
        .map(|f| {
            let leak = f.max_abs_on(&exterior);
            if leak != 0.0 {
                return Err(FracError::InvalidArgument(format!(
                    "data must be supported in the window (max |f| outside = {leak})"
                )));
            }
            let data_norm = f.restricted(window).l2_norm();
            if data_norm == 0.0 {
                return Ok(EnergyEstimateRow {
                    data_norm,
                    correction_norm: 0.0,
                    ratio: 0.0,
                });
            }
            let u = solver.solve(f)?.u;
            let correction_norm = sobolev_norm(eng, &(&u - f), kt.order(), SobolevFlavor::Bessel)?;
            Ok(EnergyEstimateRow {
                data_norm,
                correction_norm,
                ratio: correction_norm / data_norm,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EnergyEstimateReport {
        separation,
        max_ratio: rows.iter().map(|r| r.ratio).fold(0.0, f64::max),
        rows,
    })
}
