//! Triangle soups and the OBJ subset used for simulator input.

use std::f64::consts::PI;
use std::fmt::Write as _;

use super::{ConvexHull, Plate, Primitive, Shape, Vec3};

const CYLINDER_SEGMENTS: usize = 32;
const SPHERE_SLICES: usize = 32;
const SPHERE_STACKS: usize = 16;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[usize; 3]>,
}

impl TriangleMesh {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends `other`, offsetting its indices past the current vertices.
    pub fn append(&mut self, other: &TriangleMesh) {
        let base = self.vertices.len();
        self.vertices.extend_from_slice(&other.vertices);
        self.triangles
            .extend(other.triangles.iter().map(|t| t.map(|i| i + base)));
    }

    pub fn from_primitive(p: &Primitive) -> Self {
        let local = match *p.shape() {
            Shape::Cuboid { half_extents: h } => cuboid(h),
            Shape::Cylinder {
                radius,
                half_height,
            } => cylinder(radius, half_height),
            Shape::Sphere { radius } => sphere(radius),
        };
        TriangleMesh {
            vertices: local.vertices.iter().map(|v| p.pose().apply(v)).collect(),
            triangles: local.triangles,
        }
    }

    pub fn from_hull(hull: &ConvexHull) -> Self {
        TriangleMesh {
            vertices: hull.vertices().to_vec(),
            triangles: hull.faces().to_vec(),
        }
    }

    /// Two triangles facing along the plate normal.
    pub fn from_plate(plate: &Plate) -> Self {
        TriangleMesh {
            vertices: plate.corners().to_vec(),
            triangles: vec![[0, 1, 2], [0, 2, 3]],
        }
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|i| self.vertices[i]);
        (b - a).cross(&(c - a)).norm() / 2.0
    }

    pub fn to_obj(&self) -> String {
        let mut out = String::with_capacity(40 * (self.vertices.len() + self.triangles.len()));
        for v in &self.vertices {
            let _ = writeln!(
                out,
                "v {} {} {}",
                format_sig9(v.x),
                format_sig9(v.y),
                format_sig9(v.z)
            );
        }
        for t in &self.triangles {
            let _ = writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
        }
        out
    }
}

/// Concatenated per-primitive meshes; no boolean union.
pub fn tessellate(shapes: &[Primitive]) -> TriangleMesh {
    let mut mesh = TriangleMesh::new();
    for s in shapes {
        mesh.append(&TriangleMesh::from_primitive(s));
    }
    mesh
}

fn cuboid(h: [f64; 3]) -> TriangleMesh {
    let vertices = (0..8)
        .map(|i| {
            let s = |bit: usize, e: f64| if i & bit == 0 { -e } else { e };
            Vec3::new(s(1, h[0]), s(2, h[1]), s(4, h[2]))
        })
        .collect();
    // Vertex index bits are (x, y, z) = (1, 2, 4).
    let triangles = vec![
        [0, 2, 3],
        [0, 3, 1], // -z
        [4, 5, 7],
        [4, 7, 6], // +z
        [0, 1, 5],
        [0, 5, 4], // -y
        [2, 6, 7],
        [2, 7, 3], // +y
        [0, 4, 6],
        [0, 6, 2], // -x
        [1, 3, 7],
        [1, 7, 5], // +x
    ];
    TriangleMesh {
        vertices,
        triangles,
    }
}

fn cylinder(r: f64, hh: f64) -> TriangleMesh {
    let n = CYLINDER_SEGMENTS;
    let mut vertices = vec![Vec3::new(0.0, 0.0, -hh), Vec3::new(0.0, 0.0, hh)];
    for z in [-hh, hh] {
        for k in 0..n {
            let a = 2.0 * PI * k as f64 / n as f64;
            vertices.push(Vec3::new(r * a.cos(), r * a.sin(), z));
        }
    }
    let bottom = |k: usize| 2 + k % n;
    let top = |k: usize| 2 + n + k % n;
    let mut triangles = Vec::with_capacity(4 * n);
    for k in 0..n {
        triangles.push([0, bottom(k + 1), bottom(k)]);
        triangles.push([1, top(k), top(k + 1)]);
        triangles.push([bottom(k), bottom(k + 1), top(k + 1)]);
        triangles.push([bottom(k), top(k + 1), top(k)]);
    }
    TriangleMesh {
        vertices,
        triangles,
    }
}

fn sphere(r: f64) -> TriangleMesh {
    let (slices, stacks) = (SPHERE_SLICES, SPHERE_STACKS);
    let mut vertices = vec![Vec3::new(0.0, 0.0, r), Vec3::new(0.0, 0.0, -r)];
    for i in 1..stacks {
        let theta = PI * i as f64 / stacks as f64;
        for j in 0..slices {
            let phi = 2.0 * PI * j as f64 / slices as f64;
            vertices.push(
                r * Vec3::new(
                    theta.sin() * phi.cos(),
                    theta.sin() * phi.sin(),
                    theta.cos(),
                ),
            );
        }
    }
    let ring = |i: usize, j: usize| 2 + (i - 1) * slices + j % slices;
    let mut triangles = Vec::with_capacity(2 * slices * (stacks - 1));
    for j in 0..slices {
        triangles.push([0, ring(1, j), ring(1, j + 1)]);
        triangles.push([1, ring(stacks - 1, j + 1), ring(stacks - 1, j)]);
    }
    for i in 1..stacks - 1 {
        for j in 0..slices {
            triangles.push([ring(i, j), ring(i + 1, j), ring(i + 1, j + 1)]);
            triangles.push([ring(i, j), ring(i + 1, j + 1), ring(i, j + 1)]);
        }
    }
    TriangleMesh {
        vertices,
        triangles,
    }
}

/// C's `%.9g`: nine significant digits, trailing zeros stripped, exponent
/// form outside `1e-4 ≤ |x| < 1e9`.
pub fn format_sig9(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..9).contains(&exp) {
        let decimals = (8 - exp) as usize;
        strip_zeros(&format!("{x:.decimals$}")).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", strip_zeros(mantissa), exp.abs())
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::testutil::random_primitive;
    use crate::geometry::Transform;
    use crate::rng::RngStream;
    use std::collections::HashMap;

    /// Every undirected edge is shared by exactly two triangles, traversed in
    /// opposite directions.
    fn assert_watertight(m: &TriangleMesh) {
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        for t in &m.triangles {
            for k in 0..3 {
                *directed.entry((t[k], t[(k + 1) % 3])).or_default() += 1;
            }
        }
        for (&(a, b), &count) in &directed {
            assert_eq!(count, 1, "edge {a}-{b} repeated");
            assert_eq!(directed.get(&(b, a)), Some(&1), "edge {a}-{b} unmatched");
        }
    }

    fn enclosed_volume(m: &TriangleMesh) -> f64 {
        m.triangles
            .iter()
            .map(|t| {
                let [a, b, c] = t.map(|i| m.vertices[i]);
                a.dot(&b.cross(&c)) / 6.0
            })
            .sum()
    }

    #[test]
    fn counts_per_primitive() {
        let cube = Primitive::cuboid([0.5; 3], Transform::identity()).unwrap();
        let m = tessellate(&[cube]);
        assert_eq!((m.vertices.len(), m.triangles.len()), (8, 12));

        let s = Primitive::sphere(1.0, Transform::identity()).unwrap();
        let m = tessellate(&[s]);
        assert_eq!(m.vertices.len(), 2 + SPHERE_SLICES * (SPHERE_STACKS - 1));
        assert_eq!(
            m.triangles.len(),
            2 * SPHERE_SLICES + 2 * SPHERE_SLICES * (SPHERE_STACKS - 2)
        );
        assert_eq!((m.vertices.len(), m.triangles.len()), (482, 960));

        let c = Primitive::cylinder(0.1, 0.5, Transform::identity()).unwrap();
        let m = tessellate(&[c]);
        assert_eq!((m.vertices.len(), m.triangles.len()), (66, 128));
    }

    #[test]
    fn meshes_are_closed_outward_and_nondegenerate() {
        let mut rng = RngStream::new(9, 0);
        for _ in 0..30 {
            let p = random_primitive(&mut rng, 1.0);
            let m = TriangleMesh::from_primitive(&p);
            assert_watertight(&m);
            for t in 0..m.triangles.len() {
                assert!(m.triangle_area(t) > 1e-12);
            }
            let v = enclosed_volume(&m);
            // Polyhedral approximations sit inside curved surfaces.
            assert!(
                v > 0.0 && v <= p.volume() * (1.0 + 1e-9),
                "{v} vs {}",
                p.volume()
            );
            if matches!(p.shape(), Shape::Cuboid { .. }) {
                assert!((v - p.volume()).abs() < 1e-9 * p.volume().max(1.0));
            } else {
                assert!(v > 0.95 * p.volume());
            }
            for vert in &m.vertices {
                assert!(p.distance_to_point(vert) < 1e-9);
            }
        }
    }

    #[test]
    fn concatenation_offsets_indices() {
        let a = Primitive::cuboid([0.5; 3], Transform::identity()).unwrap();
        let b = Primitive::sphere(0.3, Transform::from_translation(Vec3::x() * 3.0)).unwrap();
        let m = tessellate(&[a, b]);
        let ma = tessellate(&[a]);
        let mb = tessellate(&[b]);
        assert_eq!(m.vertices.len(), 8 + 482);
        assert_eq!(&m.triangles[..12], &ma.triangles[..]);
        for (t, u) in m.triangles[12..].iter().zip(&mb.triangles) {
            assert_eq!(*t, u.map(|i| i + 8));
        }
        assert_eq!(tessellate(&[]), TriangleMesh::new());
    }

    #[test]
    fn obj_text() {
        let cube = Primitive::cuboid([0.5; 3], Transform::identity()).unwrap();
        let obj = tessellate(&[cube]).to_obj();
        let lines: Vec<&str> = obj.split('\n').collect();
        assert_eq!(lines.len(), 21);
        assert_eq!(lines[0], "v -0.5 -0.5 -0.5");
        assert_eq!(lines[8], "f 1 3 4");
        assert_eq!(lines[20], "");
        assert!(!obj.contains('\r'));
    }

    #[test]
    fn sig9_matches_printf() {
        let cases = [
            (1.0, "1"),
            (0.5, "0.5"),
            (-0.25, "-0.25"),
            (0.1, "0.1"),
            (1.0 / 3.0, "0.333333333"),
            (2.0 / 3.0, "0.666666667"),
            (123456789.0, "123456789"),
            (1234567890.0, "1.23456789e+09"),
            (0.0001, "0.0001"),
            (0.00001234, "1.234e-05"),
            (999999999.5, "1e+09"),
            (1e100, "1e+100"),
            (std::f64::consts::PI, "3.14159265"),
            (-0.0, "-0"),
            (0.0, "0"),
            (0.09999999999, "0.1"),
        ];
        for (x, want) in cases {
            assert_eq!(format_sig9(x), want, "{x}");
        }
    }

    #[test]
    fn sig9_round_trips_nine_digits() {
        let mut rng = RngStream::new(10, 0);
        for _ in 0..10_000 {
            let x = (rng.next_uniform() - 0.5) * 10f64.powi(rng.index(20) as i32 - 10);
            let back: f64 = format_sig9(x).parse().unwrap();
            assert!((back - x).abs() <= 5e-9 * x.abs(), "{x} {back}");
        }
    }
}
