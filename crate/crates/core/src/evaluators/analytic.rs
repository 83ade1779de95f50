use std::f64::consts::PI;

use super::{EvalJob, EvalStatus, Evaluator, EvaluatorKind, Metrics, Outcome};
use crate::individuals::Genome;

pub fn eval_sphere(values: &[f64]) -> f64 {
    values.iter().map(|v| v * v).sum()
}

pub fn eval_rastrigin(values: &[f64]) -> f64 {
    10.0 * values.len() as f64
        + values
            .iter()
            .map(|v| v * v - 10.0 * (2.0 * PI * v).cos())
            .sum::<f64>()
}

/// Closed-form benchmarks over real vectors, reporting metric `f`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnalyticEvaluator {
    Sphere,
    Rastrigin,
}

impl Evaluator for AnalyticEvaluator {
    fn kind(&self) -> EvaluatorKind {
        match self {
            AnalyticEvaluator::Sphere => EvaluatorKind::Sphere,
            AnalyticEvaluator::Rastrigin => EvaluatorKind::Rastrigin,
        }
    }

    fn metric_names(&self) -> Vec<String> {
        vec!["f".into()]
    }

    fn evaluate(&self, job: &EvalJob) -> Outcome {
        let Genome::RealVector(g) = &job.genome else {
            return Outcome::failed(
                EvalStatus::Error,
                "analytic evaluators need a realvector genome",
            );
        };
        let f = match self {
            AnalyticEvaluator::Sphere => eval_sphere(&g.values),
            AnalyticEvaluator::Rastrigin => eval_rastrigin(&g.values),
        };
        Outcome::ok(Metrics::from([("f".to_string(), f)]))
    }
}
