use super::{Primitive, Shape, Transform, Vec3};
use crate::rng::RngStream;

pub(crate) fn random_unit(rng: &mut RngStream) -> Vec3 {
    loop {
        let v = Vec3::new(rng.normal(), rng.normal(), rng.normal());
        let n = v.norm();
        if n > 1e-6 {
            return v / n;
        }
    }
}

pub(crate) fn random_rotation(rng: &mut RngStream) -> Transform {
    Transform::from_axis_angle(random_unit(rng), rng.uniform_in(-3.2, 3.2))
}

pub(crate) fn random_transform(rng: &mut RngStream) -> Transform {
    let t = Vec3::new(
        rng.uniform_in(-5.0, 5.0),
        rng.uniform_in(-5.0, 5.0),
        rng.uniform_in(-5.0, 5.0),
    );
    random_rotation(rng).with_translation(t)
}

pub(crate) fn random_primitive(rng: &mut RngStream, spread: f64) -> Primitive {
    let shape = match rng.index(3) {
        0 => Shape::Cuboid {
            half_extents: [
                rng.uniform_in(0.1, 1.0),
                rng.uniform_in(0.1, 1.0),
                rng.uniform_in(0.1, 1.0),
            ],
        },
        1 => Shape::Cylinder {
            radius: rng.uniform_in(0.1, 0.8),
            half_height: rng.uniform_in(0.1, 1.0),
        },
        _ => Shape::Sphere {
            radius: rng.uniform_in(0.1, 1.0),
        },
    };
    let pose = random_rotation(rng).with_translation(Vec3::new(
        rng.uniform_in(-spread, spread),
        rng.uniform_in(-spread, spread),
        rng.uniform_in(-spread, spread),
    ));
    Primitive::new(shape, pose).unwrap()
}
