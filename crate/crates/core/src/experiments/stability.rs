use serde::Serialize;

use super::reconstruction::{reconstruct_point, Estimator};
use crate::dnmap::{dn_matrix, dn_opnorm_diff};
use crate::error::{FracError, Result};
use crate::extcond::ExteriorSequence;
use crate::forms::Conductivity;
use crate::grid::RegionMask;
use crate::operators::{KernelTable, SpectralEngine};
use crate::solver::{ProblemKind, SolveOptions};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityPoint {
    pub x0: Vec<f64>,
    /// `|gamma_1(x0) - gamma_2(x0)|` from the samples.
    pub lhs_direct: f64,
    /// The same difference from the two reconstructed values.
    pub lhs_reconstructed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub points: Vec<StabilityPoint>,
    /// `max_{W nodes} |gamma_1 - gamma_2|`.
    pub lhs_max: f64,
    /// `||Lambda_1 - Lambda_2||` on the window.
    pub opnorm: f64,
    /// `2^s * opnorm`.
    pub rhs: f64,
    /// `rhs - lhs_max`.
    pub margin: f64,
    /// `rhs - max |reconstructed difference|` over the points.
    pub margin_reconstructed: f64,
}

/// Checks `||gamma_1 - gamma_2||_{L^inf(W)} <= 2^s ||Lambda_1 - Lambda_2||`.
#[allow(clippy::too_many_arguments)]
pub fn stability_check(
    c1: &Conductivity,
    c2: &Conductivity,
    kt: &KernelTable,
    eng: &SpectralEngine,
    omega: &RegionMask,
    window: &RegionMask,
    seqs: &[ExteriorSequence],
    opts: SolveOptions,
) -> Result<StabilityReport> {
    let s = kt.order();
    let a = dn_matrix(ProblemKind::Conductivity(c1), kt, omega, window, window, opts)?;
    let b = dn_matrix(ProblemKind::Conductivity(c2), kt, omega, window, window, opts)?;
    let opnorm = dn_opnorm_diff(&a, &b, eng, s)?;
    let rhs = 2f64.powf(s) * opnorm;
    let (g1, g2) = (c1.gamma().values(), c2.gamma().values());
    let lhs_max = window
        .indices()
        .into_iter()
        .map(|i| (g1[i] - g2[i]).abs())
        .fold(0.0, f64::max);
    let points = seqs
        .iter()
        .map(|seq| {
            let r1 = reconstruct_point(c1, kt, omega, window, seq, opts, Estimator::ReferenceRatio)?;
            let r2 = reconstruct_point(c2, kt, omega, window, seq, opts, Estimator::ReferenceRatio)?;
            let i = seq.x0_index();
            Ok(StabilityPoint {
                x0: seq.x0().to_vec(),
                lhs_direct: (g1[i] - g2[i]).abs(),
                lhs_reconstructed: (r1.estimate - r2.estimate).abs(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_rec = points.iter().map(|p| p.lhs_reconstructed).fold(0.0, f64::max);
    Ok(StabilityReport {
        points,
        lhs_max,
        opnorm,
        rhs,
        margin: rhs - lhs_max,
        margin_reconstructed: rhs - max_rec,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvarianceReport {
    /// Always "consistency probe": a positive discrepancy is evidence of
    /// detectability, not a verification of unique continuation.
    pub label: &'static str,
    /// `||Lambda_1 - Lambda_2||_F / max(||Lambda_1||_F, ||Lambda_2||_F)`.
    pub discrepancy: f64,
    pub frobenius_difference: f64,
    pub reference_norm: f64,
    pub max_residual: f64,
}

/// Partial-data discrepancy: excitations on `w1`, observations on `w2`.
/// The conductivities must agree on both windows.
#[allow(clippy::too_many_arguments)]
pub fn invariance_probe(
    c1: &Conductivity,
    c2: &Conductivity,
    kt: &KernelTable,
    omega: &RegionMask,
    w1: &RegionMask,
    w2: &RegionMask,
    opts: SolveOptions,
) -> Result<InvarianceReport> {
    let (g1, g2) = (c1.gamma().values(), c2.gamma().values());
    let differ = w1.indices().into_iter().chain(w2.indices()).any(|i| g1[i] != g2[i]);
    if differ {
        return Err(FracError::InvalidArgument(
            "invariance probe needs conductivities that agree on both windows".into(),
        ));
    }
    let a = dn_matrix(ProblemKind::Conductivity(c1), kt, omega, w1, w2, opts)?;
    let b = dn_matrix(ProblemKind::Conductivity(c2), kt, omega, w1, w2, opts)?;
    let reference_norm = a.entries().norm().max(b.entries().norm());
    Ok(InvarianceReport {
        label: "consistency probe",
        discrepancy: a.relative_discrepancy(&b)?,
        frobenius_difference: (a.entries() - b.entries()).norm(),
        reference_norm,
        max_residual: a.max_residual().max(b.max_residual()),
    })
}
