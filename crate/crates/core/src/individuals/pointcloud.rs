//! Variable-length vertex lists whose convex hull is the spacecraft body.
//! A fixed cargo box must stay enclosed and two fixed solar panels sit on the
//! ±y faces of the envelope.

use serde::{Deserialize, Serialize};

use super::{twelve_u_bounds, InvalidReason, MutationRates, Validity};
use crate::geometry::{
    to_array, to_vec3, Aabb, ConvexHull, Plate, TriangleMesh, Vec3, CONTAINS_TOL,
};
use crate::rng::RngStream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PointCloudParams {
    pub bounds: Aabb,
    pub cargo: Aabb,
    pub panels: Vec<Plate>,
    pub max_vertices: usize,
}

impl Default for PointCloudParams {
    fn default() -> Self {
        let bounds = twelve_u_bounds();
        let y = bounds.max().y;
        let panel = |sign: f64| {
            Plate::new(
                Vec3::new(0.0, sign * y, 0.0),
                Vec3::new(0.0, sign, 0.0),
                0.2,
                0.3,
            )
            .expect("valid default panel")
        };
        Self {
            bounds,
            cargo: Aabb::centered([0.16, 0.16, 0.24]),
            panels: vec![panel(1.0), panel(-1.0)],
            max_vertices: 64,
        }
    }
}

impl PointCloudParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.max_vertices < 8 {
            return Err(format!(
                "max_vertices must be >= 8, got {}",
                self.max_vertices
            ));
        }
        if !self.bounds.contains_aabb(&self.cargo, CONTAINS_TOL) {
            return Err("cargo box must lie inside bounds".into());
        }
        if self.cargo.volume() <= 0.0 {
            return Err("cargo box must have positive volume".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointCloudGenome {
    pub vertices: Vec<[f64; 3]>,
    pub cargo: Aabb,
    pub panels: Vec<Plate>,
    pub bounds: Aabb,
    pub max_vertices: usize,
}

impl PointCloudGenome {
    pub fn points(&self) -> Vec<Vec3> {
        self.vertices.iter().map(|&v| to_vec3(v)).collect()
    }

    pub fn hull(&self) -> Option<ConvexHull> {
        ConvexHull::from_points(&self.points()).ok()
    }

    /// Hull volume in m³, zero for degenerate clouds.
    pub fn enclosed_volume(&self) -> f64 {
        self.hull().map_or(0.0, |h| h.volume())
    }

    pub fn mesh(&self) -> TriangleMesh {
        let mut mesh = self
            .hull()
            .map(|h| TriangleMesh::from_hull(&h))
            .unwrap_or_default();
        for p in &self.panels {
            mesh.append(&TriangleMesh::from_plate(p));
        }
        mesh
    }

    /// Eight vertices outside the cargo corners, each pulled a random
    /// fraction of the way to the envelope corner, plus random fill points.
    pub fn random(params: &PointCloudParams, rng: &mut RngStream) -> Self {
        let n = 8 + rng.index(9);
        let (c, b) = (params.cargo.corners(), params.bounds.corners());
        let mut vertices: Vec<[f64; 3]> = c
            .iter()
            .zip(&b)
            .map(|(cc, bc)| to_array(&(cc + (bc - cc) * rng.next_uniform())))
            .collect();
        let (lo, hi) = (params.bounds.min(), params.bounds.max());
        for _ in 8..n {
            vertices.push([0, 1, 2].map(|i| rng.uniform_in(lo[i], hi[i])));
        }
        Self {
            vertices,
            cargo: params.cargo,
            panels: params.panels.clone(),
            bounds: params.bounds,
            max_vertices: params.max_vertices,
        }
    }

    pub fn validate(&self) -> Validity {
        if self.vertices.len() < 4 || self.vertices.len() > self.max_vertices {
            return Validity::Invalid(InvalidReason::VertexCount);
        }
        let points = self.points();
        if !points
            .iter()
            .all(|p| self.bounds.contains_point(p, CONTAINS_TOL))
        {
            return Validity::Invalid(InvalidReason::OutOfBounds);
        }
        match ConvexHull::from_points(&points) {
            Ok(h) if self.cargo.corners().iter().all(|c| h.contains(c)) => Validity::Valid,
            _ => Validity::Invalid(InvalidReason::InsufficientCargo),
        }
    }

    pub fn perturb_vertex(&self, rates: &MutationRates, rng: &mut RngStream) -> Self {
        let mut out = self.clone();
        let i = rng.index(self.vertices.len());
        for c in &mut out.vertices[i] {
            *c += rates.vertex_sigma * rng.normal();
        }
        out
    }

    /// Inserts a point near the midpoint of two existing vertices.
    pub fn add_vertex(&self, rates: &MutationRates, rng: &mut RngStream) -> Self {
        let mut out = self.clone();
        let pair = rng.sample_indices(self.vertices.len(), 2);
        let mid = (to_vec3(self.vertices[pair[0]]) + to_vec3(self.vertices[pair[1]])) / 2.0;
        let noise = Vec3::new(rng.normal(), rng.normal(), rng.normal()) * rates.vertex_sigma;
        let at = rng.index(self.vertices.len() + 1);
        out.vertices.insert(at, to_array(&(mid + noise)));
        out
    }

    pub fn remove_vertex(&self, rng: &mut RngStream) -> Self {
        let mut out = self.clone();
        out.vertices.remove(rng.index(self.vertices.len()));
        out
    }

    /// Splits both vertex lists by a random plane through the cargo centre:
    /// this side from `self`, the other from `other`.
    pub fn crossover(&self, other: &Self, rng: &mut RngStream) -> Self {
        let n = Vec3::new(rng.normal(), rng.normal(), rng.normal());
        let c = self.cargo.center();
        let side = |v: &[f64; 3]| n.dot(&(to_vec3(*v) - c)) >= 0.0;
        let mut out = self.clone();
        out.vertices = self
            .vertices
            .iter()
            .filter(|v| side(v))
            .chain(other.vertices.iter().filter(|v| !side(v)))
            .copied()
            .collect();
        out
    }
}
