//! Numerical experiments on exterior determination: energy concentration,
//! reconstruction of exterior conductivity values, energy estimates, the
//! Lipschitz stability inequality, a partial-data invariance probe, and the
//! Poincare constant.

mod estimates;
mod poincare;
mod reconstruction;
mod stability;

pub use estimates::{energy_estimate_check, EnergyEstimateReport, EnergyEstimateRow};
pub use poincare::{poincare_check, PoincareReport};
pub use reconstruction::{
    decompose_energy, energy_decomposition_check, reconstruct_point, DecompositionRow, EnergyRow, Estimator,
    ReconstructionReport,
};
pub use stability::{invariance_probe, stability_check, InvarianceReport, StabilityPoint, StabilityReport};

use crate::error::{FracError, Result};
use crate::extcond::ExteriorSequence;
use crate::grid::RegionMask;

fn check_sequence_in_window(seq: &ExteriorSequence, window: &RegionMask) -> Result<()> {
    if seq.grid() != window.grid() {
        return Err(FracError::GridMismatch);
    }
    for u in seq.members() {
        let leaks = u
            .values()
            .iter()
            .enumerate()
            .any(|(i, &v)| v != 0.0 && !window.contains(i));
        if leaks {
            return Err(FracError::InvalidArgument(
                "sequence member is not supported in the window".into(),
            ));
        }
    }
    Ok(())
}
