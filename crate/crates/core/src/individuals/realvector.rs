//! Fixed-length box-bounded real vectors for the analytic benchmarks.

use serde::{Deserialize, Serialize};

use super::{InvalidReason, MutationRates, Validity};
use crate::rng::RngStream;

/// Perturbation scales span this many decades below `real_sigma · range`.
const STEP_DECADES: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RealVectorParams {
    pub dims: usize,
    pub lo: f64,
    pub hi: f64,
}

impl Default for RealVectorParams {
    fn default() -> Self {
        Self {
            dims: 10,
            lo: -5.0,
            hi: 5.0,
        }
    }
}

impl RealVectorParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.dims == 0 {
            return Err("dims must be >= 1".into());
        }
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) {
            return Err(format!(
                "need finite lo < hi, got [{}, {}]",
                self.lo, self.hi
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RealVectorGenome {
    pub values: Vec<f64>,
    pub bounds: Vec<(f64, f64)>,
}

impl RealVectorGenome {
    pub fn new(values: Vec<f64>, bounds: Vec<(f64, f64)>) -> Self {
        Self { values, bounds }
    }

    pub fn random(params: &RealVectorParams, rng: &mut RngStream) -> Self {
        Self {
            values: (0..params.dims)
                .map(|_| rng.uniform_in(params.lo, params.hi))
                .collect(),
            bounds: vec![(params.lo, params.hi); params.dims],
        }
    }

    pub fn validate(&self) -> Validity {
        let ok = self.values.len() == self.bounds.len()
            && !self.values.is_empty()
            && self
                .values
                .iter()
                .zip(&self.bounds)
                .all(|(&v, &(lo, hi))| v.is_finite() && lo <= v && v <= hi);
        if ok {
            Validity::Valid
        } else {
            Validity::Invalid(InvalidReason::OutOfBounds)
        }
    }

    /// Moves one coordinate by a normal step whose scale is drawn
    /// log-uniformly, so both coarse and fine moves stay available.
    pub fn perturb(&self, rates: &MutationRates, rng: &mut RngStream) -> Self {
        let mut out = self.clone();
        let i = rng.index(self.values.len());
        let (lo, hi) = self.bounds[i];
        let scale = (hi - lo) * rates.real_sigma * 10f64.powf(-STEP_DECADES * rng.next_uniform());
        out.values[i] = (self.values[i] + scale * rng.normal()).clamp(lo, hi);
        out
    }

    /// Uniform crossover.
    pub fn crossover(&self, other: &Self, rng: &mut RngStream) -> Self {
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| if rng.chance(0.5) { a } else { b })
            .collect();
        Self {
            values,
            bounds: self.bounds.clone(),
        }
    }
}
