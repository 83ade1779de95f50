//! Silhouette area of a union of solids, by casting a square grid of
//! parallel lines along the view direction.

use serde::{Deserialize, Serialize};

use super::{to_array, to_vec3, GeometryError, PreparedPrimitive, Primitive, Vec3};

pub const MIN_GRID_RESOLUTION: usize = 16;

/// Anything a line along the view direction can be tested against.
pub trait LineOccluder {
    /// Whether the infinite line `o + t d` meets the solid.
    fn line_hits(&self, o: &Vec3, d: &Vec3) -> bool;
    /// Farthest point along `d`.
    fn support(&self, d: &Vec3) -> Vec3;
}

impl LineOccluder for Primitive {
    fn line_hits(&self, o: &Vec3, d: &Vec3) -> bool {
        Primitive::line_hits(self, o, d)
    }

    fn support(&self, d: &Vec3) -> Vec3 {
        Primitive::support(self, d)
    }
}

struct FastPrimitive {
    primitive: Primitive,
    prepared: PreparedPrimitive,
}

impl LineOccluder for FastPrimitive {
    fn line_hits(&self, o: &Vec3, d: &Vec3) -> bool {
        self.prepared.line_hits(o, d)
    }

    fn support(&self, d: &Vec3) -> Vec3 {
        self.primitive.support(d)
    }
}

/// Zero-thickness rectangle. The width axis is `up × normal` with `up = +z`
/// (or `+x` when the normal is nearly vertical); the height axis completes
/// the right-handed frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPlate", into = "RawPlate")]
pub struct Plate {
    center: Vec3,
    normal: Vec3,
    width: f64,
    height: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPlate {
    center: [f64; 3],
    normal: [f64; 3],
    width: f64,
    height: f64,
}

impl TryFrom<RawPlate> for Plate {
    type Error = GeometryError;

    fn try_from(raw: RawPlate) -> Result<Self, Self::Error> {
        Plate::new(
            to_vec3(raw.center),
            to_vec3(raw.normal),
            raw.width,
            raw.height,
        )
    }
}

impl From<Plate> for RawPlate {
    fn from(p: Plate) -> Self {
        RawPlate {
            center: to_array(&p.center),
            normal: to_array(&p.normal),
            width: p.width,
            height: p.height,
        }
    }
}

impl Plate {
    pub fn new(center: Vec3, normal: Vec3, width: f64, height: f64) -> Result<Self, GeometryError> {
        let n = normal.norm();
        if !n.is_finite() || (n - 1.0).abs() > 1e-9 {
            return Err(GeometryError::DegenerateDirection(n));
        }
        if !(width.is_finite() && width > 0.0 && height.is_finite() && height > 0.0) {
            return Err(GeometryError::InvalidShape(format!(
                "plate {width} x {height}"
            )));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(GeometryError::InvalidShape(
                "non-finite plate center".into(),
            ));
        }
        Ok(Self {
            center,
            normal,
            width,
            height,
        })
    }

    pub fn center(&self) -> &Vec3 {
        &self.center
    }

    pub fn normal(&self) -> &Vec3 {
        &self.normal
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    pub fn axes(&self) -> (Vec3, Vec3) {
        let up = if self.normal.z.abs() > 0.99 {
            Vec3::x()
        } else {
            Vec3::z()
        };
        let w = up.cross(&self.normal).normalize();
        let h = self.normal.cross(&w);
        (w, h)
    }

    /// Corners in counter-clockwise order seen from the normal side.
    pub fn corners(&self) -> [Vec3; 4] {
        let (w, h) = self.axes();
        let (hw, hh) = (w * (self.width / 2.0), h * (self.height / 2.0));
        [
            self.center - hw - hh,
            self.center + hw - hh,
            self.center + hw + hh,
            self.center - hw + hh,
        ]
    }
}

impl LineOccluder for Plate {
    fn line_hits(&self, o: &Vec3, d: &Vec3) -> bool {
        let denom = d.dot(&self.normal);
        // Edge-on plates have no projected area.
        if denom.abs() < 1e-12 {
            return false;
        }
        let t = (self.center - o).dot(&self.normal) / denom;
        let rel = o + d * t - self.center;
        let (w, h) = self.axes();
        rel.dot(&w).abs() <= self.width / 2.0 && rel.dot(&h).abs() <= self.height / 2.0
    }

    fn support(&self, d: &Vec3) -> Vec3 {
        let (w, h) = self.axes();
        let sw = if d.dot(&w) < 0.0 { -1.0 } else { 1.0 };
        let sh = if d.dot(&h) < 0.0 { -1.0 } else { 1.0 };
        self.center + w * (sw * self.width / 2.0) + h * (sh * self.height / 2.0)
    }
}

/// Orthonormal `(u, v)` spanning the plane perpendicular to `d`.
pub fn projection_basis(d: &Vec3) -> (Vec3, Vec3) {
    let helper = if d.x.abs() < 0.9 {
        Vec3::x()
    } else {
        Vec3::y()
    };
    let u = helper.cross(d).normalize();
    let v = d.cross(&u);
    (u, v)
}

fn check_inputs(direction: &Vec3, grid_resolution: usize) -> Result<(), GeometryError> {
    let n = direction.norm();
    if !n.is_finite() || (n - 1.0).abs() > 1e-6 {
        return Err(GeometryError::DegenerateDirection(n));
    }
    if grid_resolution < MIN_GRID_RESOLUTION {
        return Err(GeometryError::GridTooCoarse(grid_resolution));
    }
    Ok(())
}

/// Area of the union silhouette of `shapes` on the plane perpendicular to
/// `direction`, from a `grid_resolution²` line grid over the projected bounds.
pub fn projected_area(
    shapes: &[Primitive],
    direction: &Vec3,
    grid_resolution: usize,
) -> Result<f64, GeometryError> {
    let fast: Vec<FastPrimitive> = shapes
        .iter()
        .map(|p| FastPrimitive {
            primitive: *p,
            prepared: p.prepare(),
        })
        .collect();
    let refs: Vec<&dyn LineOccluder> = fast.iter().map(|f| f as &dyn LineOccluder).collect();
    projected_area_of(&refs, direction, grid_resolution)
}

pub fn projected_area_of(
    occluders: &[&dyn LineOccluder],
    direction: &Vec3,
    grid_resolution: usize,
) -> Result<f64, GeometryError> {
    check_inputs(direction, grid_resolution)?;
    if occluders.is_empty() {
        return Ok(0.0);
    }
    let d = direction.normalize();
    let (u, v) = projection_basis(&d);
    let extents: Vec<[f64; 4]> = occluders
        .iter()
        .map(|o| {
            [
                o.support(&-u).dot(&u),
                o.support(&u).dot(&u),
                o.support(&-v).dot(&v),
                o.support(&v).dot(&v),
            ]
        })
        .collect();
    let u0 = extents.iter().map(|e| e[0]).fold(f64::INFINITY, f64::min);
    let u1 = extents
        .iter()
        .map(|e| e[1])
        .fold(f64::NEG_INFINITY, f64::max);
    let v0 = extents.iter().map(|e| e[2]).fold(f64::INFINITY, f64::min);
    let v1 = extents
        .iter()
        .map(|e| e[3])
        .fold(f64::NEG_INFINITY, f64::max);
    let (du, dv) = (
        (u1 - u0) / grid_resolution as f64,
        (v1 - v0) / grid_resolution as f64,
    );
    if du <= 0.0 || dv <= 0.0 {
        return Ok(0.0);
    }

    let res = grid_resolution;
    let cell_range = |lo: f64, hi: f64, origin: f64, step: f64| -> (usize, usize) {
        let a = ((lo - origin) / step - 0.5).floor().max(0.0) as usize;
        let b = (((hi - origin) / step - 0.5).ceil().max(0.0) as usize).min(res - 1);
        (a.min(res - 1), b)
    };
    let mut covered = vec![false; res * res];
    let mut count = 0usize;
    for (occ, e) in occluders.iter().zip(&extents) {
        let (i0, i1) = cell_range(e[0], e[1], u0, du);
        let (j0, j1) = cell_range(e[2], e[3], v0, dv);
        for j in j0..=j1 {
            let cv = v0 + (j as f64 + 0.5) * dv;
            for i in i0..=i1 {
                let cell = &mut covered[j * res + i];
                if *cell {
                    continue;
                }
                let cu = u0 + (i as f64 + 0.5) * du;
                if occ.line_hits(&(u * cu + v * cv), &d) {
                    *cell = true;
                    count += 1;
                }
            }
        }
    }
    Ok(count as f64 * du * dv)
}
