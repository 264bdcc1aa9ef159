//! Numerical laboratory for the fractional conductivity equation on a
//! periodic box: discrete fractional Laplacians and Sobolev norms, the
//! conductivity and Schrodinger bilinear forms with their Liouville
//! reduction, Galerkin exterior-value solvers, exterior DN maps, the
//! vanishing-moment exterior sequence, and experiments that probe exterior
//! reconstruction and stability.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dnmap;
pub mod error;
pub mod experiments;
pub mod extcond;
pub mod forms;
pub mod grid;
pub mod operators;
pub mod solver;

pub use dnmap::{dn_apply, dn_matrix, dn_opnorm_diff, DnKind, DnMatrix};
pub use error::{FracError, Result};
pub use experiments::{
    energy_decomposition_check, energy_estimate_check, invariance_probe, poincare_check, reconstruct_point,
    stability_check, Estimator, InvarianceReport, PoincareReport, ReconstructionReport, StabilityReport,
};
pub use extcond::{build_sequence, bump, moment_profile, scaling_report, ExteriorSequence, MomentProfile, ScalingRow};
pub use forms::{
    bform_conductivity, bform_schrodinger, energy, liouville_potential, liouville_residual, Conductivity,
    LaplacianVariant, Potential, PotentialProvenance,
};
pub use grid::{l2_inner, Bounds, Grid, GridFunction, RegionLabel, RegionMask};
pub use operators::{
    cns, frac_laplacian_spectral, frac_laplacian_sum, gagliardo_seminorm_sq, sobolev_norm, KernelTable, SobolevFlavor,
    SpectralEngine,
};
pub use solver::{
    assemble_interior_system, solve, DirichletProblem, IndefiniteFallback, InteriorOperator, Method, ProblemKind,
    SolveOptions, SolveReport, Solver,
};
