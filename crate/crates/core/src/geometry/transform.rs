use nalgebra::{Quaternion, Unit, UnitQuaternion};
use serde::{Deserialize, Serialize};

use super::{to_array, to_vec3, GeometryError, Vec3};

/// Rigid transform: rotation followed by translation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTransform", into = "RawTransform")]
pub struct Transform {
    rotation: UnitQuaternion<f64>,
    translation: Vec3,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTransform {
    /// `[w, x, y, z]`
    rotation: [f64; 4],
    translation: [f64; 3],
}

impl TryFrom<RawTransform> for Transform {
    type Error = GeometryError;

    fn try_from(raw: RawTransform) -> Result<Self, Self::Error> {
        let [w, x, y, z] = raw.rotation;
        let q = Quaternion::new(w, x, y, z);
        let norm = q.norm();
        if !norm.is_finite() || (norm - 1.0).abs() > 1e-9 {
            return Err(GeometryError::NonUnitRotation(norm));
        }
        if raw.translation.iter().any(|c| !c.is_finite()) {
            return Err(GeometryError::InvalidShape("non-finite translation".into()));
        }
        Ok(Transform {
            rotation: UnitQuaternion::new_unchecked(q),
            translation: to_vec3(raw.translation),
        })
    }
}

impl From<Transform> for RawTransform {
    fn from(t: Transform) -> Self {
        let q = t.rotation.quaternion();
        RawTransform {
            rotation: [q.w, q.i, q.j, q.k],
            translation: to_array(&t.translation),
        }
    }
}

impl Default for Transform {
    fn default() -> Self {
        Self::identity()
    }
}

impl Transform {
    pub fn identity() -> Self {
        Self {
            rotation: UnitQuaternion::identity(),
            translation: Vec3::zeros(),
        }
    }

    pub fn new(rotation: UnitQuaternion<f64>, translation: Vec3) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn from_translation(translation: Vec3) -> Self {
        Self::new(UnitQuaternion::identity(), translation)
    }

    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Self {
        Self::new(
            UnitQuaternion::from_axis_angle(&Unit::new_normalize(axis), angle),
            Vec3::zeros(),
        )
    }

    pub fn rotation(&self) -> &UnitQuaternion<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vec3 {
        &self.translation
    }

    pub fn with_translation(mut self, translation: Vec3) -> Self {
        self.translation = translation;
        self
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    pub fn apply_vector(&self, v: &Vec3) -> Vec3 {
        self.rotation * v
    }

    pub fn inverse_apply(&self, p: &Vec3) -> Vec3 {
        self.rotation
            .inverse_transform_vector(&(p - self.translation))
    }

    pub fn inverse(&self) -> Self {
        let inv = self.rotation.inverse();
        Self::new(inv, -(inv * self.translation))
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &Transform) -> Self {
        let rotation = UnitQuaternion::new_normalize((self.rotation * other.rotation).into_inner());
        Self::new(rotation, self.apply(&other.translation))
    }
}

pub fn apply_transform(t: &Transform, p: &Vec3) -> Vec3 {
    t.apply(p)
}
