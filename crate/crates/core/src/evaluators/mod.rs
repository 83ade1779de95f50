//! Turning genomes into metrics: analytic benchmarks, desk-scale physics
//! proxies, an external-process bridge, fitness expressions, and the
//! asynchronous manager that runs them.

mod analytic;
mod antenna;
mod drag;
mod external;
mod fitness;
mod manager;
pub mod mock;

pub use analytic::{eval_rastrigin, eval_sphere, AnalyticEvaluator};
pub use antenna::{AntennaProxy, AntennaProxyParams};
pub use drag::{DragProxy, DragProxyParams};
pub use external::{external_evaluate, ExternalEvaluator, ExternalParams, PROTOCOL_VERSION};
pub use fitness::{apply_fitness, Expr, FitnessError, FitnessSpec, ObjectiveSpec};
pub use manager::{EvaluationManager, ManagerError};

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::individuals::Genome;
use crate::rng::RngStream;

pub type Metrics = BTreeMap<String, f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvaluatorKind {
    Sphere,
    Rastrigin,
    DragProxy,
    AntennaProxy,
    External,
}

impl fmt::Display for EvaluatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EvaluatorKind::Sphere => "sphere",
            EvaluatorKind::Rastrigin => "rastrigin",
            EvaluatorKind::DragProxy => "drag_proxy",
            EvaluatorKind::AntennaProxy => "antenna_proxy",
            EvaluatorKind::External => "external",
        })
    }
}

/// Job identifier, rendered as 16 lowercase hex digits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct JobId(pub u64);

impl fmt::Display for JobId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

#[derive(Debug, Clone)]
pub struct EvalJob {
    pub job_id: JobId,
    pub genome: Genome,
    pub submitted_at_eval_index: u64,
    /// Private stream for stochastic evaluators, keyed by the job id.
    pub rng: RngStream,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalStatus {
    Ok,
    Invalid,
    Error,
    Timeout,
}

/// What an evaluator reports; the manager adds the job id and timing.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub status: EvalStatus,
    pub metrics: Metrics,
    pub message: Option<String>,
}

impl Outcome {
    pub fn ok(metrics: Metrics) -> Self {
        Self {
            status: EvalStatus::Ok,
            metrics,
            message: None,
        }
    }

    pub fn failed(status: EvalStatus, message: impl Into<String>) -> Self {
        Self {
            status,
            metrics: Metrics::new(),
            message: Some(message.into()),
        }
    }

    /// Demotes `ok` outcomes that break the metrics contract to errors.
    pub(crate) fn checked(self) -> Self {
        if self.status != EvalStatus::Ok {
            return self;
        }
        if self.metrics.is_empty() {
            return Outcome::failed(EvalStatus::Error, "ok status with no metrics");
        }
        if let Some((k, v)) = self.metrics.iter().find(|(_, v)| !v.is_finite()) {
            return Outcome::failed(
                EvalStatus::Error,
                format!("metric `{k}` is not finite ({v})"),
            );
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub job_id: JobId,
    pub status: EvalStatus,
    pub metrics: Metrics,
    pub message: Option<String>,
    pub duration_s: f64,
}

pub trait Evaluator: Send + Sync {
    fn kind(&self) -> EvaluatorKind;
    /// Every metric an `ok` outcome may carry.
    fn metric_names(&self) -> Vec<String>;
    fn evaluate(&self, job: &EvalJob) -> Outcome;
}

/// Declarative evaluator choice, as written in a config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EvaluatorSpec {
    Sphere {},
    Rastrigin {},
    DragProxy(DragProxyParams),
    AntennaProxy(AntennaProxyParams),
    External(ExternalParams),
}

impl EvaluatorSpec {
    pub fn kind(&self) -> EvaluatorKind {
        match self {
            EvaluatorSpec::Sphere {} => EvaluatorKind::Sphere,
            EvaluatorSpec::Rastrigin {} => EvaluatorKind::Rastrigin,
            EvaluatorSpec::DragProxy(_) => EvaluatorKind::DragProxy,
            EvaluatorSpec::AntennaProxy(_) => EvaluatorKind::AntennaProxy,
            EvaluatorSpec::External(_) => EvaluatorKind::External,
        }
    }

    pub fn metric_names(&self) -> Vec<String> {
        match self {
            EvaluatorSpec::Sphere {} | EvaluatorSpec::Rastrigin {} => vec!["f".into()],
            EvaluatorSpec::DragProxy(_) => {
                DragProxy::METRICS.iter().map(|s| s.to_string()).collect()
            }
            EvaluatorSpec::AntennaProxy(_) => AntennaProxy::METRICS
                .iter()
                .map(|s| s.to_string())
                .collect(),
            EvaluatorSpec::External(p) => p.metrics.clone(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        match self {
            EvaluatorSpec::Sphere {} | EvaluatorSpec::Rastrigin {} => Ok(()),
            EvaluatorSpec::DragProxy(p) => p.validate(),
            EvaluatorSpec::AntennaProxy(p) => p.validate(),
            EvaluatorSpec::External(p) => p.validate(),
        }
    }

    /// Builds the evaluator; external jobs live under `job_root/jobs/`.
    pub fn build(&self, job_root: &Path) -> Arc<dyn Evaluator> {
        match self {
            EvaluatorSpec::Sphere {} => Arc::new(AnalyticEvaluator::Sphere),
            EvaluatorSpec::Rastrigin {} => Arc::new(AnalyticEvaluator::Rastrigin),
            EvaluatorSpec::DragProxy(p) => Arc::new(DragProxy::new(p.clone())),
            EvaluatorSpec::AntennaProxy(p) => Arc::new(AntennaProxy::new(p.clone())),
            EvaluatorSpec::External(p) => Arc::new(ExternalEvaluator::new(p.clone(), job_root)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn job_id_is_sixteen_hex() {
        assert_eq!(JobId(0xab).to_string(), "00000000000000ab");
        assert_eq!(JobId(u64::MAX).to_string(), "ffffffffffffffff");
    }

    #[test]
    fn spec_parsing_is_strict() {
        let s: EvaluatorSpec = serde_json::from_str(r#"{"kind":"sphere"}"#).unwrap();
        assert_eq!(s.kind(), EvaluatorKind::Sphere);
        assert!(serde_json::from_str::<EvaluatorSpec>(r#"{"kind":"sphere","bogus":1}"#).is_err());
        assert!(
            serde_json::from_str::<EvaluatorSpec>(r#"{"kind":"drag_proxy","grid":3}"#).is_err()
        );
        let d: EvaluatorSpec = serde_json::from_str(r#"{"kind":"drag_proxy"}"#).unwrap();
        let back: EvaluatorSpec =
            serde_json::from_str(&serde_json::to_string(&d).unwrap()).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn ok_outcomes_must_carry_finite_metrics() {
        assert_eq!(
            Outcome::ok(Metrics::new()).checked().status,
            EvalStatus::Error
        );
        let mut m = Metrics::new();
        m.insert("f".into(), f64::NAN);
        assert_eq!(Outcome::ok(m).checked().status, EvalStatus::Error);
    }
}
