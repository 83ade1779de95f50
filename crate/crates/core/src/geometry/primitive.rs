use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use super::{Aabb, GeometryError, Transform, Vec3, CONTAINS_TOL};

/// Local-frame shape parameters, in metres. Cylinders run along local z.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Shape {
    Cuboid { half_extents: [f64; 3] },
    Cylinder { radius: f64, half_height: f64 },
    Sphere { radius: f64 },
}

impl Shape {
    pub fn validate(&self) -> Result<(), GeometryError> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        let good = match *self {
            Shape::Cuboid { half_extents } => half_extents.iter().all(|&h| ok(h)),
            Shape::Cylinder {
                radius,
                half_height,
            } => ok(radius) && ok(half_height),
            Shape::Sphere { radius } => ok(radius),
        };
        if good {
            Ok(())
        } else {
            Err(GeometryError::InvalidShape(format!("{self:?}")))
        }
    }

    pub fn volume(&self) -> f64 {
        match *self {
            Shape::Cuboid { half_extents: h } => 8.0 * h[0] * h[1] * h[2],
            Shape::Cylinder {
                radius,
                half_height,
            } => std::f64::consts::PI * radius * radius * 2.0 * half_height,
            Shape::Sphere { radius } => 4.0 / 3.0 * std::f64::consts::PI * radius.powi(3),
        }
    }

    /// Multiplies every size parameter by `factor`.
    pub fn scaled(&self, factor: f64) -> Shape {
        match *self {
            Shape::Cuboid { half_extents: h } => Shape::Cuboid {
                half_extents: [h[0] * factor, h[1] * factor, h[2] * factor],
            },
            Shape::Cylinder {
                radius,
                half_height,
            } => Shape::Cylinder {
                radius: radius * factor,
                half_height: half_height * factor,
            },
            Shape::Sphere { radius } => Shape::Sphere {
                radius: radius * factor,
            },
        }
    }

    /// Largest distance from the local origin to any point of the shape.
    pub fn bounding_radius(&self) -> f64 {
        match *self {
            Shape::Cuboid { half_extents: h } => (h[0] * h[0] + h[1] * h[1] + h[2] * h[2]).sqrt(),
            Shape::Cylinder {
                radius,
                half_height,
            } => (radius * radius + half_height * half_height).sqrt(),
            Shape::Sphere { radius } => radius,
        }
    }

    fn local_distance(&self, p: &Vec3) -> f64 {
        match *self {
            Shape::Cuboid { half_extents: h } => {
                let dx = (p.x.abs() - h[0]).max(0.0);
                let dy = (p.y.abs() - h[1]).max(0.0);
                let dz = (p.z.abs() - h[2]).max(0.0);
                (dx * dx + dy * dy + dz * dz).sqrt()
            }
            Shape::Cylinder {
                radius,
                half_height,
            } => {
                let dr = ((p.x * p.x + p.y * p.y).sqrt() - radius).max(0.0);
                let dz = (p.z.abs() - half_height).max(0.0);
                (dr * dr + dz * dz).sqrt()
            }
            Shape::Sphere { radius } => (p.norm() - radius).max(0.0),
        }
    }

    fn local_contains(&self, p: &Vec3) -> bool {
        match *self {
            Shape::Cuboid { half_extents: h } => {
                p.x.abs() <= h[0] + CONTAINS_TOL
                    && p.y.abs() <= h[1] + CONTAINS_TOL
                    && p.z.abs() <= h[2] + CONTAINS_TOL
            }
            Shape::Cylinder {
                radius,
                half_height,
            } => {
                p.z.abs() <= half_height + CONTAINS_TOL
                    && p.x * p.x + p.y * p.y <= (radius + CONTAINS_TOL).powi(2)
            }
            Shape::Sphere { radius } => p.norm_squared() <= (radius + CONTAINS_TOL).powi(2),
        }
    }

    fn local_support(&self, d: &Vec3) -> Vec3 {
        let sign = |v: f64| if v < 0.0 { -1.0 } else { 1.0 };
        match *self {
            Shape::Cuboid { half_extents: h } => {
                Vec3::new(sign(d.x) * h[0], sign(d.y) * h[1], sign(d.z) * h[2])
            }
            Shape::Cylinder {
                radius,
                half_height,
            } => {
                let n = (d.x * d.x + d.y * d.y).sqrt();
                let (x, y) = if n > 0.0 {
                    (radius * d.x / n, radius * d.y / n)
                } else {
                    (0.0, 0.0)
                };
                Vec3::new(x, y, sign(d.z) * half_height)
            }
            Shape::Sphere { radius } => {
                let n = d.norm();
                if n > 0.0 {
                    d * (radius / n)
                } else {
                    Vec3::new(radius, 0.0, 0.0)
                }
            }
        }
    }

    /// Parameter interval where the local-frame line `o + t d` lies inside the shape.
    fn local_line_interval(&self, o: &Vec3, d: &Vec3) -> Option<(f64, f64)> {
        const PARALLEL: f64 = 1e-15;
        let slab = |o: f64, d: f64, h: f64, lo: &mut f64, hi: &mut f64| -> bool {
            if d.abs() < PARALLEL {
                return o.abs() <= h;
            }
            let (a, b) = ((-h - o) / d, (h - o) / d);
            let (a, b) = if a <= b { (a, b) } else { (b, a) };
            *lo = lo.max(a);
            *hi = hi.min(b);
            lo <= hi
        };
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        match *self {
            Shape::Cuboid { half_extents: h } => {
                for i in 0..3 {
                    if !slab(o[i], d[i], h[i], &mut lo, &mut hi) {
                        return None;
                    }
                }
            }
            Shape::Sphere { radius } => {
                let dd = d.norm_squared();
                let t0 = -o.dot(d) / dd;
                let closest = o + d * t0;
                let r2 = radius * radius - closest.norm_squared();
                if r2 < 0.0 {
                    return None;
                }
                let half = (r2 / dd).sqrt();
                lo = t0 - half;
                hi = t0 + half;
            }
            Shape::Cylinder {
                radius,
                half_height,
            } => {
                let a = d.x * d.x + d.y * d.y;
                let c = o.x * o.x + o.y * o.y - radius * radius;
                if a < PARALLEL {
                    if c > 0.0 {
                        return None;
                    }
                } else {
                    let b = 2.0 * (o.x * d.x + o.y * d.y);
                    let disc = b * b - 4.0 * a * c;
                    if disc < 0.0 {
                        return None;
                    }
                    let s = disc.sqrt();
                    lo = (-b - s) / (2.0 * a);
                    hi = (-b + s) / (2.0 * a);
                }
                if !slab(o.z, d.z, half_height, &mut lo, &mut hi) {
                    return None;
                }
            }
        }
        (lo <= hi).then_some((lo, hi))
    }
}

/// A posed shape in some parent frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPrimitive", into = "RawPrimitive")]
pub struct Primitive {
    shape: Shape,
    pose: Transform,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPrimitive {
    shape: Shape,
    pose: Transform,
}

impl TryFrom<RawPrimitive> for Primitive {
    type Error = GeometryError;

    fn try_from(raw: RawPrimitive) -> Result<Self, Self::Error> {
        Primitive::new(raw.shape, raw.pose)
    }
}

impl From<Primitive> for RawPrimitive {
    fn from(p: Primitive) -> Self {
        RawPrimitive {
            shape: p.shape,
            pose: p.pose,
        }
    }
}

impl Primitive {
    pub fn new(shape: Shape, pose: Transform) -> Result<Self, GeometryError> {
        shape.validate()?;
        Ok(Self { shape, pose })
    }

    pub fn cuboid(half_extents: [f64; 3], pose: Transform) -> Result<Self, GeometryError> {
        Self::new(Shape::Cuboid { half_extents }, pose)
    }

    pub fn cylinder(radius: f64, half_height: f64, pose: Transform) -> Result<Self, GeometryError> {
        Self::new(
            Shape::Cylinder {
                radius,
                half_height,
            },
            pose,
        )
    }

    pub fn sphere(radius: f64, pose: Transform) -> Result<Self, GeometryError> {
        Self::new(Shape::Sphere { radius }, pose)
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn pose(&self) -> &Transform {
        &self.pose
    }

    pub fn with_pose(&self, pose: Transform) -> Primitive {
        Primitive {
            shape: self.shape,
            pose,
        }
    }

    pub fn with_shape(&self, shape: Shape) -> Result<Primitive, GeometryError> {
        Primitive::new(shape, self.pose)
    }

    /// Applies `t` on top of the current pose.
    pub fn transformed(&self, t: &Transform) -> Primitive {
        self.with_pose(t.compose(&self.pose))
    }

    /// Scales size and position about the origin of the parent frame.
    pub fn scaled(&self, factor: f64) -> Primitive {
        Primitive {
            shape: self.shape.scaled(factor),
            pose: self.pose.with_translation(self.pose.translation() * factor),
        }
    }

    pub fn center(&self) -> Vec3 {
        *self.pose.translation()
    }

    pub fn volume(&self) -> f64 {
        self.shape.volume()
    }

    /// Boundary-inclusive membership test.
    pub fn contains_point(&self, p: &Vec3) -> bool {
        self.shape.local_contains(&self.pose.inverse_apply(p))
    }

    /// Euclidean distance from `p` to the solid (zero inside).
    pub fn distance_to_point(&self, p: &Vec3) -> f64 {
        self.shape.local_distance(&self.pose.inverse_apply(p))
    }

    /// Farthest point of the solid along `d`.
    pub fn support(&self, d: &Vec3) -> Vec3 {
        let local = self.pose.rotation().inverse_transform_vector(d);
        self.pose.apply(&self.shape.local_support(&local))
    }

    /// Whether the infinite line `o + t d` meets the solid.
    pub fn line_hits(&self, o: &Vec3, d: &Vec3) -> bool {
        let lo = self.pose.inverse_apply(o);
        let ld = self.pose.rotation().inverse_transform_vector(d);
        self.shape.local_line_interval(&lo, &ld).is_some()
    }

    /// Tight world-frame box, accounting for rotation.
    pub fn aabb(&self) -> Aabb {
        let r = self.pose.rotation().to_rotation_matrix();
        let m = r.matrix();
        let half = match self.shape {
            Shape::Cuboid { half_extents: h } => {
                Vec3::from_fn(|j, _| (0..3).map(|i| h[i] * m[(j, i)].abs()).sum())
            }
            Shape::Sphere { radius } => Vec3::repeat(radius),
            Shape::Cylinder {
                radius,
                half_height,
            } => Vec3::from_fn(|j, _| {
                let a = m[(j, 2)];
                half_height * a.abs() + radius * (1.0 - a * a).max(0.0).sqrt()
            }),
        };
        Aabb::from_center_half_extents(self.center(), half)
    }

    /// Caches the inverse rotation for repeated point queries.
    pub fn prepare(&self) -> PreparedPrimitive {
        PreparedPrimitive {
            shape: self.shape,
            inv_rotation: self
                .pose
                .rotation()
                .inverse()
                .to_rotation_matrix()
                .into_inner(),
            translation: *self.pose.translation(),
        }
    }
}

/// A primitive with its world-to-local rotation precomputed.
#[derive(Debug, Clone, Copy)]
pub struct PreparedPrimitive {
    shape: Shape,
    inv_rotation: Matrix3<f64>,
    translation: Vec3,
}

impl PreparedPrimitive {
    #[inline]
    pub fn contains_point(&self, p: &Vec3) -> bool {
        self.shape
            .local_contains(&(self.inv_rotation * (p - self.translation)))
    }

    #[inline]
    pub fn line_hits(&self, o: &Vec3, d: &Vec3) -> bool {
        let lo = self.inv_rotation * (o - self.translation);
        let ld = self.inv_rotation * d;
        self.shape.local_line_interval(&lo, &ld).is_some()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::testutil::{random_primitive, random_rotation, random_transform};
    use crate::rng::RngStream;
    use std::f64::consts::FRAC_PI_4;

    fn unit_cube() -> Primitive {
        Primitive::cuboid([0.5; 3], Transform::identity()).unwrap()
    }

    #[test]
    fn cube_center_and_boundary_are_inside() {
        let c = unit_cube();
        assert!(c.contains_point(&Vec3::zeros()));
        assert!(c.contains_point(&Vec3::new(0.5, 0.0, 0.0)));
        assert!(!c.contains_point(&Vec3::new(0.5 + 1e-9, 0.0, 0.0)));
    }

    #[test]
    fn rotated_sphere_excludes_just_outside() {
        let mut rng = RngStream::new(1, 1);
        for _ in 0..50 {
            let s = Primitive::sphere(1.0, random_rotation(&mut rng)).unwrap();
            assert!(!s.contains_point(&Vec3::new(0.0, 0.0, 1.0000001)));
            assert!(s.contains_point(&Vec3::new(0.0, 0.0, 0.9999999)));
        }
    }

    #[test]
    fn rejects_non_positive_sizes() {
        assert!(Primitive::sphere(0.0, Transform::identity()).is_err());
        assert!(Primitive::cylinder(1.0, -1.0, Transform::identity()).is_err());
        assert!(Primitive::cuboid([1.0, f64::NAN, 1.0], Transform::identity()).is_err());
    }

    #[test]
    fn containment_invariant_under_rigid_motion() {
        let mut rng = RngStream::new(2, 0);
        for _ in 0..300 {
            let p = random_primitive(&mut rng, 0.5);
            let t = random_transform(&mut rng);
            let moved = p.transformed(&t);
            for _ in 0..50 {
                let q = Vec3::new(
                    rng.uniform_in(-2.0, 2.0),
                    rng.uniform_in(-2.0, 2.0),
                    rng.uniform_in(-2.0, 2.0),
                );
                assert_eq!(p.contains_point(&q), moved.contains_point(&t.apply(&q)));
            }
        }
    }

    #[test]
    fn rotated_aabb_of_cube() {
        let c =
            Primitive::cuboid([0.5; 3], Transform::from_axis_angle(Vec3::z(), FRAC_PI_4)).unwrap();
        let b = c.aabb();
        let half = 2f64.sqrt() / 2.0;
        assert!((b.max().x - half).abs() < 1e-12);
        assert!((b.max().z - 0.5).abs() < 1e-12);
    }

    #[test]
    fn aabb_encloses_samples_and_supports() {
        let mut rng = RngStream::new(3, 0);
        for _ in 0..200 {
            let p = random_primitive(&mut rng, 1.0);
            let b = p.aabb();
            for axis in [Vec3::x(), Vec3::y(), Vec3::z()] {
                let hi = p.support(&axis);
                let lo = p.support(&-axis);
                assert!(b.contains_point(&hi, 1e-9));
                assert!(b.contains_point(&lo, 1e-9));
                // The box is tight: supports touch its faces.
                assert!((hi.dot(&axis) - b.max().dot(&axis)).abs() < 1e-9);
                assert!((lo.dot(&axis) - b.min().dot(&axis)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn distance_matches_containment() {
        let mut rng = RngStream::new(4, 0);
        for _ in 0..100 {
            let p = random_primitive(&mut rng, 0.5);
            for _ in 0..50 {
                let q = Vec3::new(
                    rng.uniform_in(-2.0, 2.0),
                    rng.uniform_in(-2.0, 2.0),
                    rng.uniform_in(-2.0, 2.0),
                );
                let d = p.distance_to_point(&q);
                if p.contains_point(&q) {
                    assert!(d < 1e-9);
                } else {
                    assert!(d > 0.0);
                }
            }
        }
    }

    #[test]
    fn line_hits_agree_with_dense_point_walk() {
        let mut rng = RngStream::new(5, 0);
        for _ in 0..200 {
            let p = random_primitive(&mut rng, 0.3);
            let prepared = p.prepare();
            let o = Vec3::new(rng.uniform_in(-1.5, 1.5), rng.uniform_in(-1.5, 1.5), -4.0);
            let d = crate::geometry::testutil::random_unit(&mut rng);
            let walk = (0..20_000)
                .any(|i| p.contains_point(&(o + d * (-8.0 + 16.0 * i as f64 / 20_000.0))));
            let hit = p.line_hits(&o, &d);
            assert_eq!(hit, prepared.line_hits(&o, &d));
            // The walk can only miss thin grazing chords.
            if walk {
                assert!(hit);
            }
        }
    }
}
