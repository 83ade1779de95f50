use serde::{Deserialize, Serialize};

use super::{to_array, to_vec3, GeometryError, Primitive, Vec3, CONTAINS_TOL};

/// Axis-aligned box, closed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawAabb", into = "RawAabb")]
pub struct Aabb {
    min: Vec3,
    max: Vec3,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAabb {
    min: [f64; 3],
    max: [f64; 3],
}

impl TryFrom<RawAabb> for Aabb {
    type Error = GeometryError;

    fn try_from(raw: RawAabb) -> Result<Self, Self::Error> {
        Aabb::new(to_vec3(raw.min), to_vec3(raw.max))
    }
}

impl From<Aabb> for RawAabb {
    fn from(b: Aabb) -> Self {
        RawAabb {
            min: to_array(&b.min),
            max: to_array(&b.max),
        }
    }
}

impl Aabb {
    pub fn new(min: Vec3, max: Vec3) -> Result<Self, GeometryError> {
        if min.iter().chain(max.iter()).any(|c| !c.is_finite()) {
            return Err(GeometryError::InvalidAabb("non-finite corner".into()));
        }
        if (0..3).any(|i| min[i] > max[i]) {
            return Err(GeometryError::InvalidAabb(format!(
                "min {min:?} exceeds max {max:?}"
            )));
        }
        Ok(Self { min, max })
    }

    /// Box centred on the origin with the given full side lengths.
    pub fn centered(size: [f64; 3]) -> Self {
        let h = to_vec3(size) / 2.0;
        Self::new(-h, h).expect("finite non-negative size")
    }

    pub fn from_center_half_extents(center: Vec3, half: Vec3) -> Self {
        Self::new(center - half, center + half).expect("valid half extents")
    }

    pub fn min(&self) -> &Vec3 {
        &self.min
    }

    pub fn max(&self) -> &Vec3 {
        &self.max
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) / 2.0
    }

    pub fn size(&self) -> Vec3 {
        self.max - self.min
    }

    pub fn volume(&self) -> f64 {
        let s = self.size();
        s.x * s.y * s.z
    }

    pub fn union(&self, other: &Aabb) -> Aabb {
        Aabb {
            min: self.min.inf(&other.min),
            max: self.max.sup(&other.max),
        }
    }

    pub fn contains_point(&self, p: &Vec3, tol: f64) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] - tol && p[i] <= self.max[i] + tol)
    }

    pub fn contains_aabb(&self, other: &Aabb, tol: f64) -> bool {
        (0..3).all(|i| other.min[i] >= self.min[i] - tol && other.max[i] <= self.max[i] + tol)
    }

    /// Gap between the boxes along the most separated axis; negative when they overlap.
    pub fn separation(&self, other: &Aabb) -> f64 {
        (0..3)
            .map(|i| (other.min[i] - self.max[i]).max(self.min[i] - other.max[i]))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn corners(&self) -> [Vec3; 8] {
        let (a, b) = (self.min, self.max);
        [
            Vec3::new(a.x, a.y, a.z),
            Vec3::new(b.x, a.y, a.z),
            Vec3::new(a.x, b.y, a.z),
            Vec3::new(b.x, b.y, a.z),
            Vec3::new(a.x, a.y, b.z),
            Vec3::new(b.x, a.y, b.z),
            Vec3::new(a.x, b.y, b.z),
            Vec3::new(b.x, b.y, b.z),
        ]
    }
}

/// Every shape's rotation-aware tight box lies inside `bounds`.
pub fn within_bounds(shapes: &[Primitive], bounds: &Aabb) -> bool {
    shapes
        .iter()
        .all(|s| bounds.contains_aabb(&s.aabb(), CONTAINS_TOL))
}
