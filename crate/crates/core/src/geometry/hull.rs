//! Incremental 3D convex hull.

use std::collections::HashSet;

use super::{Aabb, GeometryError, LineOccluder, Vec3};

#[derive(Debug, Clone)]
struct Face {
    v: [usize; 3],
    normal: Vec3,
    offset: f64,
}

/// Closed convex hull of a point set, stored as outward-facing triangles.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexHull {
    vertices: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
    planes: Vec<(Vec3, f64)>,
    eps: f64,
}

impl ConvexHull {
    pub fn from_points(points: &[Vec3]) -> Result<Self, GeometryError> {
        if points.iter().any(|p| p.iter().any(|c| !c.is_finite())) {
            return Err(GeometryError::InvalidShape("non-finite hull point".into()));
        }
        if points.len() < 4 {
            return Err(GeometryError::DegenerateHull);
        }
        let p0 = points[0];
        let scale = points.iter().map(|p| (p - p0).norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return Err(GeometryError::DegenerateHull);
        }
        let eps = 1e-10 * scale;

        let argmax = |f: &dyn Fn(&Vec3) -> f64| {
            let mut best = (0, f64::NEG_INFINITY);
            for (i, p) in points.iter().enumerate() {
                let v = f(p);
                if v > best.1 {
                    best = (i, v);
                }
            }
            best
        };
        let (i1, _) = argmax(&|p| (p - p0).norm());
        let axis = (points[i1] - p0).normalize();
        let (i2, d2) = argmax(&|p| (p - p0).cross(&axis).norm());
        if d2 <= eps {
            return Err(GeometryError::DegenerateHull);
        }
        let n = (points[i1] - p0).cross(&(points[i2] - p0)).normalize();
        let (i3, d3) = argmax(&|p| n.dot(&(p - p0)).abs());
        if d3 <= eps {
            return Err(GeometryError::DegenerateHull);
        }

        let seed = [0, i1, i2, i3];
        let interior = seed.iter().map(|&i| points[i]).sum::<Vec3>() / 4.0;
        let make = |a: usize, b: usize, c: usize| -> Option<Face> {
            let cross = (points[b] - points[a]).cross(&(points[c] - points[a]));
            let len = cross.norm();
            // Sliver faces from collinear input carry no area; dropping them
            // leaves every plane of positive-area faces intact.
            if len <= eps * scale {
                return None;
            }
            let normal = cross / len;
            Some(Face {
                v: [a, b, c],
                normal,
                offset: normal.dot(&points[a]),
            })
        };
        let oriented = |a: usize, b: usize, c: usize| -> Face {
            let f = make(a, b, c).expect("seed tetrahedron is non-degenerate");
            if f.normal.dot(&interior) > f.offset {
                make(a, c, b).unwrap()
            } else {
                f
            }
        };
        let mut faces = vec![
            oriented(seed[0], seed[1], seed[2]),
            oriented(seed[0], seed[1], seed[3]),
            oriented(seed[0], seed[2], seed[3]),
            oriented(seed[1], seed[2], seed[3]),
        ];

        for (pi, p) in points.iter().enumerate() {
            if seed.contains(&pi) {
                continue;
            }
            let visible: Vec<bool> = faces
                .iter()
                .map(|f| f.normal.dot(p) - f.offset > eps)
                .collect();
            if !visible.iter().any(|&v| v) {
                continue;
            }
            let mut edges = Vec::new();
            for (f, _) in faces.iter().zip(&visible).filter(|(_, &v)| v) {
                for k in 0..3 {
                    edges.push((f.v[k], f.v[(k + 1) % 3]));
                }
            }
            let edge_set: HashSet<(usize, usize)> = edges.iter().copied().collect();
            let mut kept: Vec<Face> = faces
                .into_iter()
                .zip(&visible)
                .filter(|(_, &v)| !v)
                .map(|(f, _)| f)
                .collect();
            for &(a, b) in &edges {
                if !edge_set.contains(&(b, a)) {
                    kept.extend(make(a, b, pi));
                }
            }
            faces = kept;
        }

        let mut used: Vec<usize> = faces.iter().flat_map(|f| f.v).collect();
        used.sort_unstable();
        used.dedup();
        let remap = |i: usize| used.binary_search(&i).unwrap();
        Ok(Self {
            vertices: used.iter().map(|&i| points[i]).collect(),
            faces: faces.iter().map(|f| f.v.map(remap)).collect(),
            planes: faces.iter().map(|f| (f.normal, f.offset)).collect(),
            eps,
        })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    /// Outward-oriented (counter-clockwise from outside) vertex triples.
    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    /// Unit outward normal and offset of each face plane (`n·x = offset`).
    pub fn planes(&self) -> &[(Vec3, f64)] {
        &self.planes
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        self.planes
            .iter()
            .all(|(n, off)| n.dot(p) - off <= self.eps)
    }

    pub fn volume(&self) -> f64 {
        let c = self.vertices.iter().sum::<Vec3>() / self.vertices.len() as f64;
        self.faces
            .iter()
            .map(|f| {
                let [a, b, d] = f.map(|i| self.vertices[i] - c);
                a.dot(&b.cross(&d)) / 6.0
            })
            .sum()
    }

    pub fn aabb(&self) -> Aabb {
        let mut lo = self.vertices[0];
        let mut hi = self.vertices[0];
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        Aabb::new(lo, hi).expect("hull vertices are finite")
    }
}

impl LineOccluder for ConvexHull {
    fn line_hits(&self, o: &Vec3, d: &Vec3) -> bool {
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for (n, off) in &self.planes {
            let denom = n.dot(d);
            let num = off - n.dot(o);
            if denom.abs() < 1e-15 {
                if num < -self.eps {
                    return false;
                }
            } else if denom > 0.0 {
                hi = hi.min(num / denom);
            } else {
                lo = lo.max(num / denom);
            }
        }
        lo <= hi + self.eps
    }

    fn support(&self, d: &Vec3) -> Vec3 {
        *self
            .vertices
            .iter()
            .max_by(|a, b| a.dot(d).total_cmp(&b.dot(d)))
            .expect("hull has vertices")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::testutil::random_unit;
    use crate::geometry::{Primitive, Transform};
    use crate::rng::RngStream;

    fn random_cloud(rng: &mut RngStream, n: usize) -> Vec<Vec3> {
        (0..n)
            .map(|_| {
                Vec3::new(
                    rng.uniform_in(-1.0, 1.0),
                    rng.uniform_in(-1.0, 1.0),
                    rng.uniform_in(-1.0, 1.0),
                )
            })
            .collect()
    }

    /// All supporting planes through point triples, oriented outward.
    fn brute_facets(points: &[Vec3]) -> Vec<([usize; 3], Vec3, f64)> {
        let mut out = Vec::new();
        let n = points.len();
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    let cross = (points[j] - points[i]).cross(&(points[k] - points[i]));
                    if cross.norm() < 1e-12 {
                        continue;
                    }
                    let nrm = cross.normalize();
                    let off = nrm.dot(&points[i]);
                    let side: Vec<f64> = points.iter().map(|p| nrm.dot(p) - off).collect();
                    if side.iter().all(|&s| s <= 1e-12) {
                        out.push(([i, j, k], nrm, off));
                    } else if side.iter().all(|&s| s >= -1e-12) {
                        out.push(([i, k, j], -nrm, -off));
                    }
                }
            }
        }
        out
    }

    #[test]
    fn cube_corners_with_interior_points() {
        let mut pts: Vec<Vec3> = Primitive::cuboid([0.5; 3], Transform::identity())
            .unwrap()
            .aabb()
            .corners()
            .to_vec();
        let mut rng = RngStream::new(5, 0);
        pts.extend(random_cloud(&mut rng, 30).into_iter().map(|p| p * 0.49));
        let hull = ConvexHull::from_points(&pts).unwrap();
        assert_eq!(hull.vertices().len(), 8);
        assert_eq!(hull.faces().len(), 12);
        assert!((hull.volume() - 1.0).abs() < 1e-12);
        for p in &pts {
            assert!(hull.contains(p));
        }
        assert!(!hull.contains(&Vec3::new(0.5 + 1e-6, 0.0, 0.0)));
    }

    #[test]
    fn matches_brute_force_facets() {
        let mut rng = RngStream::new(6, 0);
        for _ in 0..30 {
            let n = 4 + rng.index(20);
            let pts = random_cloud(&mut rng, n);
            let hull = ConvexHull::from_points(&pts).unwrap();
            let facets = brute_facets(&pts);

            let c = pts.iter().sum::<Vec3>() / n as f64;
            let brute_volume: f64 = facets
                .iter()
                .map(|(f, _, _)| {
                    let [a, b, d] = f.map(|i| pts[i] - c);
                    a.dot(&b.cross(&d)) / 6.0
                })
                .sum();
            assert!(
                (hull.volume() - brute_volume).abs() < 1e-12,
                "{} {}",
                hull.volume(),
                brute_volume
            );
            assert_eq!(hull.faces().len(), facets.len());

            let mut brute_vertices: Vec<usize> = facets.iter().flat_map(|(f, _, _)| *f).collect();
            brute_vertices.sort_unstable();
            brute_vertices.dedup();
            assert_eq!(hull.vertices().len(), brute_vertices.len());

            for _ in 0..200 {
                let q = Vec3::new(
                    rng.uniform_in(-1.2, 1.2),
                    rng.uniform_in(-1.2, 1.2),
                    rng.uniform_in(-1.2, 1.2),
                );
                let inside = facets
                    .iter()
                    .all(|(_, nrm, off)| nrm.dot(&q) <= off + 1e-12);
                assert_eq!(hull.contains(&q), inside);
            }
        }
    }

    #[test]
    fn faces_point_outward() {
        let mut rng = RngStream::new(7, 0);
        let pts = random_cloud(&mut rng, 40);
        let hull = ConvexHull::from_points(&pts).unwrap();
        let c = hull.vertices().iter().sum::<Vec3>() / hull.vertices().len() as f64;
        for (f, (n, off)) in hull.faces().iter().zip(hull.planes()) {
            let v = f.map(|i| hull.vertices()[i]);
            let cross = (v[1] - v[0]).cross(&(v[2] - v[0]));
            assert!(cross.dot(n) > 0.0);
            assert!(n.dot(&c) < *off);
        }
    }

    #[test]
    fn degenerate_inputs() {
        let flat: Vec<Vec3> = (0..10)
            .map(|i| Vec3::new(i as f64, (i * i) as f64, 0.0))
            .collect();
        assert_eq!(
            ConvexHull::from_points(&flat),
            Err(GeometryError::DegenerateHull)
        );
        let line: Vec<Vec3> = (0..10).map(|i| Vec3::new(i as f64, 0.0, 0.0)).collect();
        assert_eq!(
            ConvexHull::from_points(&line),
            Err(GeometryError::DegenerateHull)
        );
        assert_eq!(
            ConvexHull::from_points(&flat[..3]),
            Err(GeometryError::DegenerateHull)
        );
        assert_eq!(
            ConvexHull::from_points(&[Vec3::zeros(); 5]),
            Err(GeometryError::DegenerateHull)
        );
    }

    #[test]
    fn line_test_matches_cube_primitive() {
        let cube = Primitive::cuboid([0.5; 3], Transform::identity()).unwrap();
        let hull = ConvexHull::from_points(&cube.aabb().corners()).unwrap();
        let mut rng = RngStream::new(8, 0);
        let mut hits = 0;
        for _ in 0..2000 {
            let o = Vec3::new(
                rng.uniform_in(-1.0, 1.0),
                rng.uniform_in(-1.0, 1.0),
                rng.uniform_in(-1.0, 1.0),
            );
            let d = random_unit(&mut rng);
            let h = hull.line_hits(&o, &d);
            assert_eq!(h, cube.line_hits(&o, &d));
            hits += h as usize;
        }
        assert!(hits > 200 && hits < 1800);
        assert_eq!(
            hull.support(&Vec3::new(1.0, 1.0, 1.0)),
            Vec3::new(0.5, 0.5, 0.5)
        );
    }
}
