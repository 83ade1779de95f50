//! Slow stand-in evaluators for exercising the asynchronous machinery.

use std::thread;
use std::time::Duration;

use super::{eval_sphere, EvalJob, EvalStatus, Evaluator, EvaluatorKind, Metrics, Outcome};
use crate::individuals::Genome;

type DelayFn = dyn Fn(&Genome) -> Duration + Send + Sync;

/// Sleeps for a genome-dependent time, then reports the sphere value as `f`.
/// Accepts real-vector genomes only.
pub struct DelayEvaluator {
    delay: Box<DelayFn>,
}

impl DelayEvaluator {
    pub fn new(delay: impl Fn(&Genome) -> Duration + Send + Sync + 'static) -> Self {
        Self {
            delay: Box::new(delay),
        }
    }

    pub fn fixed(delay: Duration) -> Self {
        Self::new(move |_| delay)
    }

    /// Sleeps `values[0]` seconds.
    pub fn seconds_from_first_value() -> Self {
        Self::new(|g| match g {
            Genome::RealVector(v) => Duration::from_secs_f64(v.values[0].max(0.0)),
            _ => Duration::ZERO,
        })
    }
}

impl Evaluator for DelayEvaluator {
    fn kind(&self) -> EvaluatorKind {
        EvaluatorKind::Sphere
    }

    fn metric_names(&self) -> Vec<String> {
        vec!["f".into()]
    }

    fn evaluate(&self, job: &EvalJob) -> Outcome {
        thread::sleep((self.delay)(&job.genome));
        match &job.genome {
            Genome::RealVector(g) => {
                Outcome::ok(Metrics::from([("f".to_string(), eval_sphere(&g.values))]))
            }
            _ => Outcome::failed(EvalStatus::Error, "needs a realvector genome"),
        }
    }
}
