use serde::Serialize;

use super::check_sequence_in_window;
use crate::error::{FracError, Result};
use crate::extcond::ExteriorSequence;
use crate::forms::{bform_conductivity, energy, Conductivity};
use crate::grid::{GridFunction, RegionMask};
use crate::operators::KernelTable;
use crate::solver::{ProblemKind, SolveOptions, Solver};

/// How the limit `N -> infinity` is read off a finite schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    /// `E_gamma(u_N)` at the largest `N`.
    LastValue,
    /// `E_gamma(u_N) / E_1(u_N^1)` at the largest `N`, with `u_N^1` the
    /// solution for unit conductivity. Same limit; the normalization residue
    /// common to both energies cancels, so constant conductivities are exact.
    ReferenceRatio,
    /// Two-point extrapolation linear in `1/(N + N0)` from the two largest `N`.
    Richardson,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyRow {
    pub n: usize,
    /// `E_gamma(phi_N)`.
    pub e_phi: f64,
    /// `E_gamma(u_N)`.
    pub e_u: f64,
    /// `<Lambda_gamma phi_N, phi_N> = B_gamma(u_N, phi_N)`.
    pub dn_pairing: f64,
    /// `|e_u - dn_pairing| / |e_u|`.
    pub pairing_defect: f64,
    /// `E_1(u_N^1)` for unit conductivity.
    pub e_unit: f64,
    pub l2_norm: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReconstructionReport {
    pub x0: Vec<f64>,
    pub snap_distance: f64,
    pub rows: Vec<EnergyRow>,
    pub estimator: Estimator,
    pub estimate: f64,
    pub truth: f64,
    pub relative_error: f64,
    pub last_value: f64,
    pub reference_ratio: f64,
    /// Present when the schedule has at least two scales.
    pub richardson: Option<f64>,
    pub max_pairing_defect: f64,
}

pub fn reconstruct_point(
    c: &Conductivity,
    kt: &KernelTable,
    omega: &RegionMask,
    window: &RegionMask,
    seq: &ExteriorSequence,
    opts: SolveOptions,
    estimator: Estimator,
) -> Result<ReconstructionReport> {
    check_sequence_in_window(seq, window)?;
    let grid = *kt.grid();
    let unit = Conductivity::from_samples(GridFunction::constant(grid, 1.0))?;
    let solver = Solver::new(ProblemKind::Conductivity(c), kt, omega, opts)?;
    let unit_solver = Solver::new(ProblemKind::Conductivity(&unit), kt, omega, opts)?;
    let mut rows = Vec::with_capacity(seq.scales().len());
    for ((&n, phi), &l2_norm) in seq.scales().iter().zip(seq.members()).zip(seq.l2_norms()) {
        let rep = solver.solve(phi)?;
        let e_phi = energy(c, kt, phi)?;
        let e_u = energy(c, kt, &rep.u)?;
        let dn_pairing = bform_conductivity(c, kt, &rep.u, phi)?;
        let e_unit = energy(&unit, kt, &unit_solver.solve(phi)?.u)?;
        if !(e_u.is_finite() && e_phi.is_finite() && e_unit > 0.0) {
            return Err(FracError::NonFinite("exterior energies"));
        }
        rows.push(EnergyRow {
            n,
            e_phi,
            e_u,
            dn_pairing,
            pairing_defect: (e_u - dn_pairing).abs() / e_u.abs(),
            e_unit,
            l2_norm,
            iterations: rep.iterations,
        });
    }
    let last = rows.last().expect("sequences are nonempty");
    let last_value = last.e_u;
    let reference_ratio = last.e_u / last.e_unit;
    let richardson = (rows.len() >= 2).then(|| {
        let prev = &rows[rows.len() - 2];
        let a1 = (prev.n + seq.n0()) as f64;
        let a2 = (last.n + seq.n0()) as f64;
        (a2 * last.e_u - a1 * prev.e_u) / (a2 - a1)
    });
    let estimate = match estimator {
        Estimator::LastValue => last_value,
        Estimator::ReferenceRatio => reference_ratio,
        Estimator::Richardson => richardson
            .ok_or_else(|| FracError::InvalidArgument("Richardson extrapolation needs at least two scales".into()))?,
    };
    let truth = c.gamma().values()[seq.x0_index()];
    Ok(ReconstructionReport {
        x0: seq.x0().to_vec(),
        snap_distance: seq.snap_distance(),
        max_pairing_defect: rows.iter().map(|r| r.pairing_defect).fold(0.0, f64::max),
        rows,
        estimator,
        estimate,
        truth,
        relative_error: (estimate - truth).abs() / truth,
        last_value,
        reference_ratio,
        richardson,
    })
}

/// `E(u_N) = E(u_N - phi_N) + 2 B(phi_N, u_N - phi_N) + E(phi_N)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecompositionRow {
    pub n: usize,
    pub interior: f64,
    pub cross: f64,
    pub exterior: f64,
    pub e_u: f64,
    /// `|interior + cross + exterior - e_u| / |e_u|`.
    pub defect: f64,
    /// `interior / exterior`.
    pub interior_ratio: f64,
}

/// Splits `E(u_f)` around the exterior data `f`.
pub fn decompose_energy(c: &Conductivity, kt: &KernelTable, f: &GridFunction, u: &GridFunction) -> Result<[f64; 4]> {
    let d = u - f;
    Ok([
        energy(c, kt, &d)?,
        2.0 * bform_conductivity(c, kt, f, &d)?,
        energy(c, kt, f)?,
        energy(c, kt, u)?,
    ])
}

pub fn energy_decomposition_check(
    c: &Conductivity,
    kt: &KernelTable,
    omega: &RegionMask,
    seq: &ExteriorSequence,
    opts: SolveOptions,
) -> Result<Vec<DecompositionRow>> {
    let solver = Solver::new(ProblemKind::Conductivity(c), kt, omega, opts)?;
    seq.scales()
        .iter()
        .zip(seq.members())
        .map(|(&n, phi)| {
            let u = solver.solve(phi)?.u;
            let [interior, cross, exterior, e_u] = decompose_energy(c, kt, phi, &u)?;
            let total = interior + cross + exterior;
            Ok(DecompositionRow {
                n,
                interior,
                cross,
                exterior,
                e_u,
                defect: if e_u == 0.0 {
                    total.abs()
                } else {
                    (total - e_u).abs() / e_u.abs()
                },
                interior_ratio: interior / exterior,
            })
        })
        .collect()
}
