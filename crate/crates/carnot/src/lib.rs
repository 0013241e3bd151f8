//! Geometry of Carnot groups and intrinsic measures on their hypersurfaces,
//! with numerical checks of the associated integral identities and
//! isoperimetric-type inequalities.
//!
//! The algebraic core is generic over [`Scalar`]; everything built on
//! quadrature works in `f64` through the aliases below.

pub mod algebra;
pub mod blowup;
pub mod hypersurface;
pub mod inequality_lab;
pub mod linalg;
pub mod metrics;
pub mod quadrature;
pub mod sampling;
pub mod scalar;

pub use algebra::{verify_structure, AlgebraError, GroupPoint, StratifiedAlgebra, StructureReport, StructureTable, TangentVector};
pub use metrics::{
    layer_constants, layer_constants_with, metric_factor_bounds, metric_factor_bounds_with, HomogeneousNorm, LayerConstants, MetricError, MetricFactorBounds, NormKind,
};
pub use quadrature::{Estimate, QuadratureSpec};
pub use scalar::Scalar;

pub type Algebra = StratifiedAlgebra<f64>;
pub type Point = GroupPoint<f64>;
pub type Tangent = TangentVector<f64>;
pub type Norm = HomogeneousNorm<f64>;
pub type Layers = LayerConstants<f64>;
pub type FactorBounds = MetricFactorBounds<f64>;

pub type AlgebraF32 = StratifiedAlgebra<f32>;
pub type PointF32 = GroupPoint<f32>;
pub type NormF32 = HomogeneousNorm<f32>;
