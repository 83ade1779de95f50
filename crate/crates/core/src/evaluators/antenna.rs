//! Antenna stand-in: how far the fed conductor span is from a target length.

use serde::{Deserialize, Serialize};

use super::{EvalJob, EvalStatus, Evaluator, EvaluatorKind, Metrics, Outcome};
use crate::geometry::monte_carlo_volume;
use crate::individuals::{Genome, Material, ShapeGenome};
use crate::rng::RngStream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AntennaProxyParams {
    pub target_length_m: f64,
    pub volume_samples: usize,
}

impl Default for AntennaProxyParams {
    fn default() -> Self {
        Self {
            target_length_m: 0.5,
            volume_samples: 100_000,
        }
    }
}

impl AntennaProxyParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.target_length_m.is_finite() && self.target_length_m > 0.0) {
            return Err("target_length_m must be > 0".into());
        }
        if self.volume_samples == 0 {
            return Err("volume_samples must be >= 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct AntennaProxy {
    params: AntennaProxyParams,
}

impl AntennaProxy {
    pub const METRICS: [&'static str; 2] = ["extent_error_m", "conductor_volume_m3"];

    pub fn new(params: AntennaProxyParams) -> Self {
        Self { params }
    }

    /// `(extent_error_m, conductor_volume_m3)`.
    pub fn measure(&self, g: &ShapeGenome, rng: &mut RngStream) -> (f64, f64) {
        let flat = g.flatten();
        let fed = g.feed_path_conductors();
        let (lo, hi) = fed
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                let b = flat[i].world.aabb();
                (lo.min(b.min().z), hi.max(b.max().z))
            });
        let extent = if fed.is_empty() { 0.0 } else { hi - lo };
        let conductors: Vec<_> = flat
            .iter()
            .filter(|n| n.material == Material::Conductor)
            .map(|n| n.world)
            .collect();
        let volume = monte_carlo_volume(&conductors, self.params.volume_samples, rng);
        ((extent - self.params.target_length_m).abs(), volume)
    }
}

impl Evaluator for AntennaProxy {
    fn kind(&self) -> EvaluatorKind {
        EvaluatorKind::AntennaProxy
    }

    fn metric_names(&self) -> Vec<String> {
        Self::METRICS.iter().map(|s| s.to_string()).collect()
    }

    fn evaluate(&self, job: &EvalJob) -> Outcome {
        let Genome::Shape(g) = &job.genome else {
            return Outcome::failed(EvalStatus::Error, "antenna proxy needs an antenna genome");
        };
        let (err, vol) = self.measure(g, &mut job.rng.clone());
        Outcome::ok(Metrics::from([
            ("extent_error_m".to_string(), err),
            ("conductor_volume_m3".to_string(), vol),
        ]))
    }
}
