//! Hypersurface patches, their intrinsic frames and measures.

mod domain;
mod geometry;
mod height;
mod measure;
mod patch;
pub mod presets;

pub use domain::{Domain, Face, Side};
pub use geometry::{
    boundary_frame, ch_constant, ch_nu, ch_nu_from, frame_tangents, horizontal_mean_curvature, hs_basis,
    hs_divergence, mean_curvature, point_data, point_data_from_normal, project_filtration, project_layer_s,
    surface_frame, BoundaryFrameData, SurfacePointData, EPS_CHAR, FD_STEP,
};
pub use height::{Evaluator, Height, Polynomial};
pub use measure::{
    boundary_measure, boundary_perimeter, characteristic_locus, check_inside, h_perimeter, h_perimeter_patch,
    integrate_boundary, integrate_boundary_h, integrate_patch, integrate_patch_h, integrate_piece, integrate_piece_h, integrate_surface_h, locus_mass,
    riemann_area, sum_patches, BoundaryPiece, LocusCell, ParamCurve, Region,
};
pub use patch::{GraphSurface, Patch, Surface, Transform, Transformed};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SurfaceError {
    #[error("parameter {0:?} lies outside the patch domain")]
    OutsideDomain(Vec<f64>),
    #[error("the point is characteristic: the horizontal normal is undefined")]
    Characteristic,
    #[error("geometry error: {0}")]
    Geometry(String),
}
