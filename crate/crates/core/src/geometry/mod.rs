//! Primitive-shape geometry: containment, overlap, volume, projected area,
//! convex hulls, and triangle-mesh export.
//!
//! A design is the set-union of its primitives. All sets are closed, so
//! touching shapes overlap.

mod aabb;
mod hull;
mod mesh;
mod overlap;
mod primitive;
mod projection;
mod transform;
mod volume;

#[cfg(test)]
pub(crate) mod testutil;

pub use aabb::{within_bounds, Aabb};
pub use hull::ConvexHull;
pub use mesh::{format_sig9, tessellate, TriangleMesh};
pub use overlap::{
    boxes_overlap_sat, convex_overlap_gjk, primitives_overlap, sampled_overlap, CONTACT_EPS,
};
pub use primitive::{PreparedPrimitive, Primitive, Shape};
pub use projection::{
    projected_area, projected_area_of, projection_basis, LineOccluder, Plate, MIN_GRID_RESOLUTION,
};
pub use transform::{apply_transform, Transform};
pub use volume::monte_carlo_volume;

use thiserror::Error;

pub type Vec3 = nalgebra::Vector3<f64>;

/// Tolerance for boundary-inclusive containment.
pub(crate) const CONTAINS_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("direction is not a unit vector (norm {0})")]
    DegenerateDirection(f64),
    #[error("grid resolution {0} is below the minimum of {MIN_GRID_RESOLUTION}")]
    GridTooCoarse(usize),
    #[error("invalid shape parameter: {0}")]
    InvalidShape(String),
    #[error("rotation quaternion norm {0} differs from 1")]
    NonUnitRotation(f64),
    #[error("invalid box: {0}")]
    InvalidAabb(String),
    #[error("point set spans no volume")]
    DegenerateHull,
}

pub(crate) fn to_vec3(a: [f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

pub(crate) fn to_array(v: &Vec3) -> [f64; 3] {
    [v.x, v.y, v.z]
}
