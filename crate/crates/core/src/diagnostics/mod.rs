//! Diagnostics of slab trajectories: averaged fields, thin-layer
//! inequalities, residuals of the averaged balance laws, the filtered
//! momentum decomposition, and constraint checks.

mod decomposition;
mod fields;
mod identities;
mod inequalities;
mod record;

pub use decomposition::{
    commutator, commutator_norm, commutator_slope, constraint_check, decomposition_check, dyadic_random_field,
    nondegeneracy_measure, nondegeneracy_monte_carlo, quadrature_for, theta_field, theta_identity_error,
    ConstraintReport, Decomposition,
};
pub use fields::{averaged_fields, curl_div_flux, fluctuation, vorticity_forcing, AveragedFields};
pub use identities::{
    mass_identity_residual, uniform_spacing, vorticity_eq_residual, wave_residual, TimedResidual, WaveResidual,
};
pub use inequalities::{
    averaging_product_defect, jensen_l2, jensen_linf, poincare_defect, AveragingDefect, JensenPair, PoincareDefect,
    POINCARE_CONSTANT,
};
pub use record::{diagnostics_record, DiagnosticsRecord};
