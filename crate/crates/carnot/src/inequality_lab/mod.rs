//! Numerical checks of the integral identities and inequalities for
//! hypersurfaces: coarea, divergence and first variation, linear and strong
//! isoperimetric inequalities, monotonicity, Poincaré, Rayleigh-type
//! estimates of the isoperimetric constant, asymptotics and Sobolev.
//!
//! Every check returns an [`InequalityReport`] carrying both sides with error
//! bars, the slack, a verdict and the constants that entered it.

mod coarea;
mod fields;
mod functional;
mod isoperimetric;
mod monotone;
mod report;
mod variation;

use thiserror::Error;

use crate::blowup::BlowupError;
use crate::hypersurface::SurfaceError;

pub use coarea::{coarea_check, LevelSets, CRITICAL_WINDOW, Segment, IDENTITY_ABS_TOL, IDENTITY_REL_TOL};
pub use fields::{
    circumradius, diameter, diameter_where, layer_gradient_norms, layer_weight, tangential_gradient,
    DilationGenerator, HorizontalField, ScalarField,
};
pub use functional::{
    poincare_check, radial_bump, rayleigh_isop_estimate, sobolev_check, CutoffQuotient, RayleighEstimate,
    RayleighMode, SobolevForm, Split, SplitQuotient, TestFunction,
};
pub use isoperimetric::{
    a_infinity, b_infinity, isoperimetric_constant, isoperimetric_report, isoperimetric_with,
    linear_isoperimetric_check, BoundaryTerm,
};
pub use monotone::{asymptotic_check, BALL_REL_TOL, monotonicity_scan, Anchor, MonotonicityRow, MonotonicityScan};
pub use report::{norm_label, InequalityReport, Provenance, Relation, Verdict};
pub use variation::{
    divergence_check, divergence_refinement, refinement_study, first_variation_check, minkowski_check, variation_divergence_check,
    RefinementStudy, RESIDUAL_FLOOR, VARIATION_STEP,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error(transparent)]
    Blowup(#[from] BlowupError),
    #[error("capability: {0}")]
    Capability(String),
    #[error("precondition: {0}")]
    Precondition(String),
    #[error("radius {radius} exceeds the admissible radius {admissible} (R_U = {r_u})")]
    RadiusTooLarge { radius: f64, admissible: f64, r_u: f64 },
    #[error("admissibility: {0}")]
    Admissibility(String),
    #[error("inapplicable: {0}")]
    Inapplicable(String),
}
