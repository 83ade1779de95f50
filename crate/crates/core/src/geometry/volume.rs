use super::{Aabb, Primitive, Vec3};
use crate::rng::RngStream;

/// Unbiased Monte Carlo estimate of the union volume, sampling uniformly in
/// the shapes' joint bounding box.
pub fn monte_carlo_volume(shapes: &[Primitive], n_samples: usize, rng: &mut RngStream) -> f64 {
    assert!(
        n_samples >= 1,
        "monte_carlo_volume needs at least one sample"
    );
    let Some(bounds) = shapes
        .iter()
        .map(Primitive::aabb)
        .reduce(|a, b| a.union(&b))
    else {
        return 0.0;
    };
    let boxes: Vec<Aabb> = shapes.iter().map(Primitive::aabb).collect();
    let prepared: Vec<_> = shapes.iter().map(Primitive::prepare).collect();
    let (lo, size) = (*bounds.min(), bounds.size());
    let mut hits = 0usize;
    for _ in 0..n_samples {
        let p = Vec3::new(
            lo.x + size.x * rng.next_uniform(),
            lo.y + size.y * rng.next_uniform(),
            lo.z + size.z * rng.next_uniform(),
        );
        if prepared
            .iter()
            .zip(&boxes)
            .any(|(s, b)| b.contains_point(&p, 0.0) && s.contains_point(&p))
        {
            hits += 1;
        }
    }
    bounds.volume() * hits as f64 / n_samples as f64
}
