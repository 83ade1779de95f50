//! Shared inputs for the criterion benches.

use hwevo_core::individuals::{Genome, IndividualKind, IndividualSpec};
use hwevo_core::objective::{Direction, ObjectiveVector};
use hwevo_core::rng::RngStream;

/// A random, valid genome of `kind`, fixed by `seed`.
pub fn genome(kind: IndividualKind, seed: u64) -> Genome {
    let mut rng = RngStream::new(seed, 0);
    Genome::random(&IndividualSpec::defaults_for(kind), &mut rng)
        .expect("defaults always admit a random genome")
}

/// `n` uniform points in the unit square, mixed directions.
pub fn objective_cloud(n: usize, seed: u64) -> Vec<ObjectiveVector> {
    let mut rng = RngStream::new(seed, 1);
    (0..n)
        .map(|_| {
            let v = vec![rng.next_uniform(), rng.next_uniform()];
            ObjectiveVector::new(v, vec![Direction::Minimize, Direction::Maximize]).unwrap()
        })
        .collect()
}
