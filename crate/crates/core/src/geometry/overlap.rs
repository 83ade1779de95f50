//! Pairwise overlap tests between closed primitives.
//!
//! Sphere pairs use exact point-to-solid distances, box pairs use the
//! separating-axis theorem, and anything involving a cylinder goes through
//! GJK on the ε-inflated Minkowski difference. A bounded point-sampling
//! check backs up GJK if it ever fails to converge.

use super::{Primitive, Shape, Vec3};
use crate::rng::RngStream;

/// Shapes closer than this count as touching, in metres.
pub const CONTACT_EPS: f64 = 1e-6;

const GJK_MAX_ITERATIONS: usize = 128;
const FALLBACK_SAMPLES: usize = 2048;

pub fn primitives_overlap(a: &Primitive, b: &Primitive) -> bool {
    if a.aabb().separation(&b.aabb()) > CONTACT_EPS {
        return false;
    }
    match (a.shape(), b.shape()) {
        (Shape::Sphere { radius }, _) => b.distance_to_point(&a.center()) <= radius + CONTACT_EPS,
        (_, Shape::Sphere { radius }) => a.distance_to_point(&b.center()) <= radius + CONTACT_EPS,
        (Shape::Cuboid { .. }, Shape::Cuboid { .. }) => boxes_overlap_sat(a, b, CONTACT_EPS),
        _ => convex_overlap_gjk(a, b, CONTACT_EPS)
            .unwrap_or_else(|| sampled_overlap(a, b, FALLBACK_SAMPLES, CONTACT_EPS)),
    }
}

/// Separating-axis test for two oriented boxes, treating gaps up to `eps` as contact.
///
/// Panics if either primitive is not a cuboid.
pub fn boxes_overlap_sat(a: &Primitive, b: &Primitive, eps: f64) -> bool {
    let (Shape::Cuboid { half_extents: ha }, Shape::Cuboid { half_extents: hb }) =
        (a.shape(), b.shape())
    else {
        panic!("boxes_overlap_sat needs two cuboids");
    };
    let ra = a.pose().rotation().to_rotation_matrix().into_inner();
    let rb = b.pose().rotation().to_rotation_matrix().into_inner();
    let axes_a: [Vec3; 3] = [
        ra.column(0).into(),
        ra.column(1).into(),
        ra.column(2).into(),
    ];
    let axes_b: [Vec3; 3] = [
        rb.column(0).into(),
        rb.column(1).into(),
        rb.column(2).into(),
    ];
    let t = b.center() - a.center();

    let separated_on = |l: &Vec3| -> bool {
        let len = l.norm();
        let rad_a: f64 = (0..3).map(|i| ha[i] * axes_a[i].dot(l).abs()).sum();
        let rad_b: f64 = (0..3).map(|i| hb[i] * axes_b[i].dot(l).abs()).sum();
        t.dot(l).abs() - rad_a - rad_b > eps * len
    };

    if axes_a.iter().chain(axes_b.iter()).any(separated_on) {
        return false;
    }
    for ea in &axes_a {
        for eb in &axes_b {
            let l = ea.cross(eb);
            // Parallel edge pairs are already covered by the face axes.
            if l.norm_squared() > 1e-18 && separated_on(&l) {
                return false;
            }
        }
    }
    true
}

fn minkowski_support(a: &Primitive, b: &Primitive, margin: f64, d: &Vec3) -> Vec3 {
    let n = d.norm();
    let inflate = if n > 0.0 {
        d * (margin / n)
    } else {
        Vec3::zeros()
    };
    a.support(d) - b.support(&-d) + inflate
}

/// GJK intersection test on `a ⊕ (−b)` inflated by `margin`.
///
/// Returns `None` when the iteration budget runs out without a certificate.
pub fn convex_overlap_gjk(a: &Primitive, b: &Primitive, margin: f64) -> Option<bool> {
    let mut d = b.center() - a.center();
    if d.norm_squared() < 1e-24 {
        d = Vec3::x();
    }
    let first = minkowski_support(a, b, margin, &d);
    let mut simplex: Vec<Vec3> = vec![first];
    d = -first;
    for _ in 0..GJK_MAX_ITERATIONS {
        if d.norm_squared() < 1e-24 {
            // Origin lies on the current simplex.
            return Some(true);
        }
        let p = minkowski_support(a, b, margin, &d);
        if p.dot(&d) < 0.0 {
            return Some(false);
        }
        simplex.insert(0, p);
        if next_simplex(&mut simplex, &mut d) {
            return Some(true);
        }
    }
    None
}

#[inline]
fn same_direction(d: &Vec3, ao: &Vec3) -> bool {
    d.dot(ao) > 0.0
}

/// Reduces the simplex (newest point first) to the feature nearest the
/// origin and updates the search direction. True when the origin is enclosed.
fn next_simplex(s: &mut Vec<Vec3>, d: &mut Vec3) -> bool {
    match s.len() {
        2 => {
            line_case(s, d);
            false
        }
        3 => {
            triangle_case(s, d);
            false
        }
        4 => tetrahedron_case(s, d),
        n => unreachable!("simplex of size {n}"),
    }
}

fn line_case(s: &mut Vec<Vec3>, d: &mut Vec3) {
    let (a, b) = (s[0], s[1]);
    let ab = b - a;
    let ao = -a;
    if same_direction(&ab, &ao) {
        *d = ab.cross(&ao).cross(&ab);
        *s = vec![a, b];
    } else {
        *d = ao;
        *s = vec![a];
    }
}

fn triangle_case(s: &mut Vec<Vec3>, d: &mut Vec3) {
    let (a, b, c) = (s[0], s[1], s[2]);
    let ab = b - a;
    let ac = c - a;
    let ao = -a;
    let abc = ab.cross(&ac);
    if same_direction(&abc.cross(&ac), &ao) {
        if same_direction(&ac, &ao) {
            *s = vec![a, c];
            *d = ac.cross(&ao).cross(&ac);
        } else {
            *s = vec![a, b];
            line_case(s, d);
        }
    } else if same_direction(&ab.cross(&abc), &ao) {
        *s = vec![a, b];
        line_case(s, d);
    } else if same_direction(&abc, &ao) {
        *s = vec![a, b, c];
        *d = abc;
    } else {
        *s = vec![a, c, b];
        *d = -abc;
    }
}

fn tetrahedron_case(s: &mut Vec<Vec3>, d: &mut Vec3) -> bool {
    let (a, b, c, dd) = (s[0], s[1], s[2], s[3]);
    let ab = b - a;
    let ac = c - a;
    let ad = dd - a;
    let ao = -a;
    let abc = ab.cross(&ac);
    let acd = ac.cross(&ad);
    let adb = ad.cross(&ab);
    if same_direction(&abc, &ao) {
        *s = vec![a, b, c];
        triangle_case(s, d);
        return false;
    }
    if same_direction(&acd, &ao) {
        *s = vec![a, c, dd];
        triangle_case(s, d);
        return false;
    }
    if same_direction(&adb, &ao) {
        *s = vec![a, dd, b];
        triangle_case(s, d);
        return false;
    }
    true
}

/// Deterministic surface-and-volume sample of a primitive, half of each.
pub(crate) fn sample_points(p: &Primitive, n: usize, rng: &mut RngStream) -> Vec<Vec3> {
    (0..n)
        .map(|i| {
            let local = if i % 2 == 0 {
                sample_surface(p.shape(), rng)
            } else {
                sample_volume(p.shape(), rng)
            };
            p.pose().apply(&local)
        })
        .collect()
}

fn unit_vector(rng: &mut RngStream) -> Vec3 {
    loop {
        let v = Vec3::new(rng.normal(), rng.normal(), rng.normal());
        let n = v.norm();
        if n > 1e-9 {
            return v / n;
        }
    }
}

fn sample_surface(shape: &Shape, rng: &mut RngStream) -> Vec3 {
    match *shape {
        Shape::Sphere { radius } => unit_vector(rng) * radius,
        Shape::Cuboid { half_extents: h } => {
            let areas = [h[1] * h[2], h[0] * h[2], h[0] * h[1]];
            let total: f64 = areas.iter().sum();
            let mut pick = rng.next_uniform() * total;
            let mut axis = 2;
            for (i, a) in areas.iter().enumerate() {
                if pick < *a {
                    axis = i;
                    break;
                }
                pick -= a;
            }
            let mut p = Vec3::new(
                rng.uniform_in(-h[0], h[0]),
                rng.uniform_in(-h[1], h[1]),
                rng.uniform_in(-h[2], h[2]),
            );
            p[axis] = if rng.chance(0.5) { h[axis] } else { -h[axis] };
            p
        }
        Shape::Cylinder {
            radius,
            half_height,
        } => {
            let side = 2.0 * radius * 2.0 * half_height;
            let caps = 2.0 * radius * radius;
            let theta = rng.uniform_in(0.0, std::f64::consts::TAU);
            if rng.next_uniform() * (side + caps) < side {
                Vec3::new(
                    radius * theta.cos(),
                    radius * theta.sin(),
                    rng.uniform_in(-half_height, half_height),
                )
            } else {
                let r = radius * rng.next_uniform().sqrt();
                let z = if rng.chance(0.5) {
                    half_height
                } else {
                    -half_height
                };
                Vec3::new(r * theta.cos(), r * theta.sin(), z)
            }
        }
    }
}

fn sample_volume(shape: &Shape, rng: &mut RngStream) -> Vec3 {
    match *shape {
        Shape::Sphere { radius } => unit_vector(rng) * (radius * rng.next_uniform().cbrt()),
        Shape::Cuboid { half_extents: h } => Vec3::new(
            rng.uniform_in(-h[0], h[0]),
            rng.uniform_in(-h[1], h[1]),
            rng.uniform_in(-h[2], h[2]),
        ),
        Shape::Cylinder {
            radius,
            half_height,
        } => {
            let r = radius * rng.next_uniform().sqrt();
            let theta = rng.uniform_in(0.0, std::f64::consts::TAU);
            Vec3::new(
                r * theta.cos(),
                r * theta.sin(),
                rng.uniform_in(-half_height, half_height),
            )
        }
    }
}

/// Conservative overlap by sampling `n` points split across both shapes and
/// testing each against the other shape inflated by `eps`.
pub fn sampled_overlap(a: &Primitive, b: &Primitive, n: usize, eps: f64) -> bool {
    let mut rng = RngStream::new(0x0BAD_5EED, 0);
    let half = n.div_ceil(2);
    sample_points(a, half, &mut rng)
        .iter()
        .any(|p| b.distance_to_point(p) <= eps)
        || sample_points(b, half, &mut rng)
            .iter()
            .any(|p| a.distance_to_point(p) <= eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::testutil::{random_primitive, random_rotation};
    use crate::geometry::Transform;
    use std::f64::consts::FRAC_PI_4;

    fn cube_at(x: f64) -> Primitive {
        Primitive::cuboid(
            [0.5; 3],
            Transform::from_translation(Vec3::new(x, 0.0, 0.0)),
        )
        .unwrap()
    }

    /// Uniform points in the intersection of the two boxes' AABBs; a point
    /// inside both solids is a witness of overlap.
    fn oracle_shared_point(a: &Primitive, b: &Primitive, n: usize, rng: &mut RngStream) -> bool {
        let (ba, bb) = (a.aabb(), b.aabb());
        let lo = ba.min().sup(bb.min());
        let hi = ba.max().inf(bb.max());
        if (0..3).any(|i| lo[i] > hi[i]) {
            return false;
        }
        (0..n).any(|_| {
            let p = Vec3::new(
                rng.uniform_in(lo.x, hi.x),
                rng.uniform_in(lo.y, hi.y),
                rng.uniform_in(lo.z, hi.z),
            );
            a.contains_point(&p) && b.contains_point(&p)
        })
    }

    #[test]
    fn touching_cubes_overlap() {
        assert!(primitives_overlap(&cube_at(0.0), &cube_at(1.0)));
        assert!(!primitives_overlap(&cube_at(0.0), &cube_at(1.0 + 1e-5)));
    }

    #[test]
    fn separated_spheres() {
        let a = Primitive::sphere(0.5, Transform::identity()).unwrap();
        let b =
            Primitive::sphere(0.5, Transform::from_translation(Vec3::new(1.1, 0.0, 0.0))).unwrap();
        assert!(!primitives_overlap(&a, &b));
        let c =
            Primitive::sphere(0.5, Transform::from_translation(Vec3::new(1.0, 0.0, 0.0))).unwrap();
        assert!(primitives_overlap(&a, &c));
    }

    /// Face-normal-only SAT, used to show the edge-edge case needs cross axes.
    fn face_axes_only_overlap(a: &Primitive, b: &Primitive) -> bool {
        let axes = |p: &Primitive| -> Vec<Vec3> {
            let r = p.pose().rotation().to_rotation_matrix().into_inner();
            (0..3).map(|i| r.column(i).into()).collect()
        };
        axes(a).into_iter().chain(axes(b)).all(|l| {
            let pa = (a.support(&l).dot(&l), -a.support(&-l).dot(&l));
            let pb = (b.support(&l).dot(&l), -b.support(&-l).dot(&l));
            !(pa.0 < -pb.1 || pb.0 < -pa.1)
        })
    }

    #[test]
    fn edge_edge_separation_needs_cross_axis() {
        // A's vertical edge faces +x, B's horizontal (y) edge faces -x.
        let a =
            Primitive::cuboid([0.5; 3], Transform::from_axis_angle(Vec3::z(), FRAC_PI_4)).unwrap();
        let gap = 0.02;
        let b = Primitive::cuboid(
            [0.5; 3],
            Transform::from_axis_angle(Vec3::y(), FRAC_PI_4).with_translation(Vec3::new(
                2f64.sqrt() + gap,
                0.0,
                0.0,
            )),
        )
        .unwrap();
        assert!(
            face_axes_only_overlap(&a, &b),
            "face axes alone cannot separate"
        );
        assert!(!boxes_overlap_sat(&a, &b, CONTACT_EPS));
        let mut rng = RngStream::new(8, 8);
        assert!(!oracle_shared_point(&a, &b, 100_000, &mut rng));
        assert_eq!(convex_overlap_gjk(&a, &b, CONTACT_EPS), Some(false));

        let closer = b.with_pose(
            b.pose()
                .with_translation(Vec3::new(2f64.sqrt() - gap, 0.0, 0.0)),
        );
        assert!(boxes_overlap_sat(&a, &closer, CONTACT_EPS));
    }

    #[test]
    fn sat_never_misses_an_oracle_witness() {
        let mut rng = RngStream::new(21, 0);
        let mut positives = 0;
        for _ in 0..1000 {
            let mk = |rng: &mut RngStream| {
                let h = [
                    rng.uniform_in(0.1, 0.6),
                    rng.uniform_in(0.1, 0.6),
                    rng.uniform_in(0.1, 0.6),
                ];
                let t = Vec3::new(
                    rng.uniform_in(-0.8, 0.8),
                    rng.uniform_in(-0.8, 0.8),
                    rng.uniform_in(-0.8, 0.8),
                );
                Primitive::cuboid(h, random_rotation(rng).with_translation(t)).unwrap()
            };
            let a = mk(&mut rng);
            let b = mk(&mut rng);
            let sat = boxes_overlap_sat(&a, &b, CONTACT_EPS);
            if oracle_shared_point(&a, &b, 10_000, &mut rng) {
                positives += 1;
                assert!(sat);
            }
            assert_eq!(sat, boxes_overlap_sat(&b, &a, CONTACT_EPS));
        }
        assert!(positives > 100);
    }

    #[test]
    fn gjk_agrees_with_sat_on_boxes() {
        let mut rng = RngStream::new(22, 0);
        for _ in 0..2000 {
            let h = [
                rng.uniform_in(0.1, 0.6),
                rng.uniform_in(0.1, 0.6),
                rng.uniform_in(0.1, 0.6),
            ];
            let a = Primitive::cuboid(h, random_rotation(&mut rng)).unwrap();
            let t = Vec3::new(
                rng.uniform_in(-1.2, 1.2),
                rng.uniform_in(-1.2, 1.2),
                rng.uniform_in(-1.2, 1.2),
            );
            let b = Primitive::cuboid(h, random_rotation(&mut rng).with_translation(t)).unwrap();
            let sat = boxes_overlap_sat(&a, &b, CONTACT_EPS);
            if let Some(gjk) = convex_overlap_gjk(&a, &b, CONTACT_EPS) {
                assert_eq!(sat, gjk);
            }
        }
    }

    #[test]
    fn overlap_is_symmetric_and_has_no_false_negatives() {
        let mut rng = RngStream::new(23, 0);
        for _ in 0..1000 {
            let a = random_primitive(&mut rng, 1.0);
            let b = random_primitive(&mut rng, 1.0);
            let ab = primitives_overlap(&a, &b);
            assert_eq!(ab, primitives_overlap(&b, &a));
            if oracle_shared_point(&a, &b, 10_000, &mut rng) {
                assert!(ab, "{a:?} {b:?}");
            }
        }
    }

    #[test]
    fn cylinder_end_to_end_contact() {
        let a = Primitive::cylinder(0.1, 0.5, Transform::identity()).unwrap();
        let touching = Primitive::cylinder(
            0.1,
            0.5,
            Transform::from_translation(Vec3::new(0.0, 0.0, 1.0)),
        )
        .unwrap();
        let apart = Primitive::cylinder(
            0.1,
            0.5,
            Transform::from_translation(Vec3::new(0.0, 0.0, 1.001)),
        )
        .unwrap();
        assert!(primitives_overlap(&a, &touching));
        assert!(!primitives_overlap(&a, &apart));
        let side = Primitive::cuboid(
            [0.1; 3],
            Transform::from_translation(Vec3::new(0.2, 0.0, 0.0)),
        )
        .unwrap();
        assert!(primitives_overlap(&a, &side));
        let off = Primitive::cuboid(
            [0.1; 3],
            Transform::from_translation(Vec3::new(0.2001, 0.0, 0.0)),
        )
        .unwrap();
        assert!(!primitives_overlap(&a, &off));
    }
}
