//! Experiment configuration: one JSON document with the top-level keys
//! `individual`, `evaluator`, `evolver`, `selection`, `budget`, `seed` and
//! `out_dir`. Unknown keys are rejected everywhere.
//!
//! ```json
//! {
//!   "individual": {"type": "realvector", "dims": 10},
//!   "evaluator": {"kind": "sphere", "fitness": [{"expr": "f", "direction": "minimize"}]},
//!   "evolver": {"kind": "hill_climber"},
//!   "budget": {"max_evaluations": 1000}
//! }
//! ```

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::evaluators::{EvaluatorKind, EvaluatorSpec, FitnessSpec, ObjectiveSpec};
use crate::evolvers::{EvolverSpec, HillClimberParams, SelectorSpec};
use crate::individuals::{compatible, IndividualKind, IndividualSpec};
use crate::objective::Direction;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("config parse error at `{path}`: {message}")]
    Parse { path: String, message: String },
    #[error("invalid config at `{path}`: {message}")]
    Validation { path: String, message: String },
}

fn invalid(path: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Validation {
        path: path.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionConfig {
    pub birth: SelectorSpec,
    pub death: SelectorSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Budget {
    pub max_evaluations: u64,
    pub max_in_flight: usize,
    /// Completed evaluations between checkpoints.
    pub checkpoint_every: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Self {
            max_evaluations: 1000,
            max_in_flight: 1,
            checkpoint_every: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub individual: IndividualSpec,
    pub evaluator: EvaluatorSpec,
    pub fitness: Vec<ObjectiveSpec>,
    pub evolver: EvolverSpec,
    pub selection: SelectionConfig,
    pub budget: Budget,
    pub seed: u64,
    pub out_dir: PathBuf,
}

/// The objective used when a config names none.
pub fn default_fitness(kind: EvaluatorKind) -> Option<Vec<ObjectiveSpec>> {
    let metric = match kind {
        EvaluatorKind::Sphere | EvaluatorKind::Rastrigin => "f",
        EvaluatorKind::DragProxy => "projected_area_m2",
        EvaluatorKind::AntennaProxy => "extent_error_m",
        EvaluatorKind::External => return None,
    };
    Some(vec![ObjectiveSpec::new(metric, Direction::Minimize)])
}

impl ExperimentConfig {
    /// Hill climber, default budget, the evaluator's default fitness.
    pub fn minimal(individual: IndividualSpec, evaluator: EvaluatorSpec) -> Self {
        let fitness = default_fitness(evaluator.kind()).unwrap_or_default();
        Self {
            individual,
            evaluator,
            fitness,
            evolver: EvolverSpec::HillClimber(HillClimberParams::default()),
            selection: SelectionConfig::default(),
            budget: Budget::default(),
            seed: 0,
            out_dir: PathBuf::from(DEFAULT_OUT_DIR),
        }
    }

    pub fn directions(&self) -> Vec<Direction> {
        self.fitness.iter().map(|o| o.direction).collect()
    }

    /// Parsed objectives. Only fails on configs that skipped validation.
    pub fn fitness_spec(&self) -> Result<FitnessSpec, ConfigError> {
        FitnessSpec::parse(&self.fitness).map_err(|e| invalid("evaluator.fitness", e.to_string()))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let b = &self.budget;
        if b.max_evaluations == 0 {
            return Err(invalid("budget.max_evaluations", "must be at least 1"));
        }
        if b.max_in_flight == 0 {
            return Err(invalid("budget.max_in_flight", "must be at least 1"));
        }
        if b.checkpoint_every == 0 {
            return Err(invalid("budget.checkpoint_every", "must be at least 1"));
        }
        self.individual
            .validate()
            .map_err(|m| invalid("individual", m))?;
        self.evaluator
            .validate()
            .map_err(|m| invalid("evaluator", m))?;
        let (ik, ek) = (self.individual.kind(), self.evaluator.kind());
        if !compatible(ik, ek) {
            return Err(invalid(
                "evaluator.kind",
                format!("{ek} cannot evaluate {ik} genomes"),
            ));
        }
        if self.fitness.is_empty() {
            return Err(invalid(
                "evaluator.fitness",
                "at least one objective is required",
            ));
        }
        let known = self.evaluator.metric_names();
        for (i, o) in self.fitness.iter().enumerate() {
            let path = format!("evaluator.fitness[{i}].expr");
            let spec = FitnessSpec::parse(std::slice::from_ref(o))
                .map_err(|e| invalid(&path, e.to_string()))?;
            if let Some(m) = spec
                .referenced_metrics()
                .into_iter()
                .find(|m| !known.contains(m))
            {
                return Err(invalid(
                    &path,
                    format!("metric `{m}` is not reported by {ek}; known: {known:?}"),
                ));
            }
        }
        match &self.evolver {
            EvolverSpec::AlpsSteadyState(p) => p.validate().map_err(|m| invalid("evolver", m))?,
            EvolverSpec::HillClimber(p) => p
                .mutation
                .validate()
                .map_err(|m| invalid("evolver.mutation", m))?,
        }
        let dirs = self.directions();
        self.selection
            .birth
            .check(&dirs)
            .map_err(|m| invalid("selection.birth", m))?;
        self.selection
            .death
            .check(&dirs)
            .map_err(|m| invalid("selection.death", m))?;
        Ok(())
    }
}

const DEFAULT_OUT_DIR: &str = "out";

fn default_out_dir() -> PathBuf {
    PathBuf::from(DEFAULT_OUT_DIR)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    individual: Map<String, Value>,
    evaluator: Map<String, Value>,
    evolver: EvolverSpec,
    #[serde(default)]
    selection: SelectionConfig,
    #[serde(default)]
    budget: Budget,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_out_dir")]
    out_dir: PathBuf,
}

fn parse_error(prefix: &str, e: serde_path_to_error::Error<serde_json::Error>) -> ConfigError {
    let inner = e.path().to_string();
    let path = match (prefix.is_empty(), inner.as_str()) {
        (true, _) => inner.clone(),
        (false, ".") => prefix.to_string(),
        (false, _) => format!("{prefix}.{inner}"),
    };
    ConfigError::Parse {
        path,
        message: e.into_inner().to_string(),
    }
}

fn from_value<T: DeserializeOwned>(prefix: &str, value: Value) -> Result<T, ConfigError> {
    serde_path_to_error::deserialize(value).map_err(|e| parse_error(prefix, e))
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| parse_error("", e))?;
    let individual = parse_individual(raw.individual)?;
    let (evaluator, fitness) = parse_evaluator(raw.evaluator)?;
    let mut evolver = raw.evolver;
    if let EvolverSpec::AlpsSteadyState(p) = &mut evolver {
        p.reseed_interval = Some(p.reseed_interval());
    }
    let config = ExperimentConfig {
        individual,
        evaluator,
        fitness,
        evolver,
        selection: raw.selection,
        budget: raw.budget,
        seed: raw.seed,
        out_dir: raw.out_dir,
    };
    config.validate()?;
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    parse_config(&text)
}

/// Pretty JSON with every default written out; `parse_config` reads it back
/// to an equal config.
pub fn render_config(config: &ExperimentConfig) -> String {
    serde_json::to_string_pretty(config).expect("configs always serialize")
}

/// Kind defaults overlaid with the user's keys, so partial parameter sets
/// are accepted but unknown keys are not.
fn parse_individual(mut map: Map<String, Value>) -> Result<IndividualSpec, ConfigError> {
    let tag = match map.remove("type") {
        Some(Value::String(s)) => s,
        Some(_) => return Err(parse_error_at("individual.type", "expected a string")),
        None => return Err(parse_error_at("individual.type", "missing field `type`")),
    };
    let kind = IndividualKind::from_tag(&tag).ok_or_else(|| {
        parse_error_at(
            "individual.type",
            &format!("unknown individual type `{tag}`"),
        )
    })?;
    let Value::Object(mut merged) = individual_params(&IndividualSpec::defaults_for(kind)) else {
        unreachable!("parameter structs serialize to objects")
    };
    for (k, v) in map {
        if !merged.contains_key(&k) {
            return Err(parse_error_at(
                &format!("individual.{k}"),
                &format!("unknown field `{k}`"),
            ));
        }
        merged.insert(k, v);
    }
    let merged = Value::Object(merged);
    Ok(match kind {
        IndividualKind::Shape => IndividualSpec::Shape(from_value("individual", merged)?),
        IndividualKind::Antenna => IndividualSpec::Antenna(from_value("individual", merged)?),
        IndividualKind::Spacecraft => IndividualSpec::Spacecraft(from_value("individual", merged)?),
        IndividualKind::PointCloud => IndividualSpec::PointCloud(from_value("individual", merged)?),
        IndividualKind::RealVector => IndividualSpec::RealVector(from_value("individual", merged)?),
    })
}

fn parse_error_at(path: &str, message: &str) -> ConfigError {
    ConfigError::Parse {
        path: path.to_string(),
        message: message.to_string(),
    }
}

fn individual_params(spec: &IndividualSpec) -> Value {
    let v = match spec {
        IndividualSpec::Shape(c) | IndividualSpec::Antenna(c) | IndividualSpec::Spacecraft(c) => {
            serde_json::to_value(c)
        }
        IndividualSpec::PointCloud(p) => serde_json::to_value(p),
        IndividualSpec::RealVector(p) => serde_json::to_value(p),
    };
    v.expect("parameter structs serialize")
}

fn parse_evaluator(
    mut map: Map<String, Value>,
) -> Result<(EvaluatorSpec, Vec<ObjectiveSpec>), ConfigError> {
    let fitness = map.remove("fitness");
    let spec: EvaluatorSpec = from_value("evaluator", Value::Object(map))?;
    let fitness = match fitness {
        Some(v) => from_value("evaluator.fitness", v)?,
        None => default_fitness(spec.kind()).ok_or_else(|| {
            invalid(
                "evaluator.fitness",
                "external evaluators need an explicit fitness list",
            )
        })?,
    };
    Ok((spec, fitness))
}

impl Serialize for ExperimentConfig {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::Error;
        let mut individual = match individual_params(&self.individual) {
            Value::Object(m) => m,
            _ => unreachable!(),
        };
        individual.insert(
            "type".into(),
            Value::String(self.individual.kind().tag().into()),
        );
        let mut evaluator = match serde_json::to_value(&self.evaluator).map_err(S::Error::custom)? {
            Value::Object(m) => m,
            _ => unreachable!(),
        };
        evaluator.insert(
            "fitness".into(),
            serde_json::to_value(&self.fitness).map_err(S::Error::custom)?,
        );

        let mut m = s.serialize_map(Some(7))?;
        m.serialize_entry("individual", &individual)?;
        m.serialize_entry("evaluator", &evaluator)?;
        m.serialize_entry("evolver", &self.evolver)?;
        m.serialize_entry("selection", &self.selection)?;
        m.serialize_entry("budget", &self.budget)?;
        m.serialize_entry("seed", &self.seed)?;
        m.serialize_entry("out_dir", &self.out_dir)?;
        m.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolvers::AlpsParams;

    const MINIMAL: &str = r#"{
        "individual": {"type": "realvector"},
        "evaluator": {"kind": "sphere"},
        "evolver": {"kind": "hill_climber"}
    }"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.budget.max_in_flight, 1);
        assert_eq!(c.budget.max_evaluations, 1000);
        assert_eq!(c.seed, 0);
        assert_eq!(
            c.fitness,
            vec![ObjectiveSpec::new("f", Direction::Minimize)]
        );
        assert_eq!(
            c,
            ExperimentConfig::minimal(
                IndividualSpec::RealVector(Default::default()),
                EvaluatorSpec::Sphere {}
            )
        );
    }

    #[test]
    fn nsga2_needs_two_objectives() {
        let text = r#"{
            "individual": {"type": "realvector"},
            "evaluator": {"kind": "sphere"},
            "evolver": {"kind": "alps_steady_state"},
            "selection": {"birth": {"kind": "nsga2"}}
        }"#;
        match parse_config(text) {
            Err(ConfigError::Validation { path, .. }) => assert_eq!(path, "selection.birth"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn roulette_needs_maximize() {
        let text = r#"{
            "individual": {"type": "realvector"},
            "evaluator": {"kind": "sphere"},
            "evolver": {"kind": "alps_steady_state"},
            "selection": {"death": {"kind": "roulette"}}
        }"#;
        assert!(matches!(
            parse_config(text),
            Err(ConfigError::Validation { .. })
        ));
        let ok = text.replace(
            r#""kind": "sphere""#,
            r#""kind": "sphere", "fitness": [{"expr": "1 / (1 + f)", "direction": "maximize"}]"#,
        );
        parse_config(&ok).unwrap();
    }

    #[test]
    fn alps_limits_from_config() {
        let text = r#"{
            "individual": {"type": "realvector"},
            "evaluator": {"kind": "rastrigin"},
            "evolver": {"kind": "alps_steady_state", "layers": 5, "age_gap": 10}
        }"#;
        let c = parse_config(text).unwrap();
        let EvolverSpec::AlpsSteadyState(p) = &c.evolver else {
            panic!()
        };
        assert_eq!(
            p.age_limits(),
            vec![Some(10), Some(40), Some(90), Some(160), None]
        );
        assert_eq!(p.reseed_interval, Some(200));
    }

    #[test]
    fn unknown_keys_are_errors_with_paths() {
        let cases = [
            (
                r#"{"individual":{"type":"realvector"},"evaluator":{"kind":"sphere"},"evolver":{"kind":"hill_climber"},"budgett":{}}"#,
                "budgett",
            ),
            (
                r#"{"individual":{"type":"realvector","dimz":3},"evaluator":{"kind":"sphere"},"evolver":{"kind":"hill_climber"}}"#,
                "individual.dimz",
            ),
            (
                r#"{"individual":{"type":"realvector"},"evaluator":{"kind":"sphere","x":1},"evolver":{"kind":"hill_climber"}}"#,
                "evaluator",
            ),
            (
                r#"{"individual":{"type":"realvector"},"evaluator":{"kind":"sphere"},"evolver":{"kind":"hill_climber"},"budget":{"max_evaluations":"ten"}}"#,
                "budget.max_evaluations",
            ),
            (
                r#"{"individual":{"type":"blimp"},"evaluator":{"kind":"sphere"},"evolver":{"kind":"hill_climber"}}"#,
                "individual.type",
            ),
        ];
        for (text, want) in cases {
            match parse_config(text) {
                Err(ConfigError::Parse { path, .. }) => {
                    assert!(path.starts_with(want), "{path} vs {want}")
                }
                other => panic!("{text}: {other:?}"),
            }
        }
        assert!(matches!(
            parse_config("{not json"),
            Err(ConfigError::Parse { .. })
        ));
    }

    #[test]
    fn semantic_errors() {
        let bad = [
            (MINIMAL.replace("sphere", "drag_proxy"), "evaluator.kind"),
            (
                MINIMAL.replace(
                    r#""kind": "sphere""#,
                    r#""kind": "sphere", "fitness": [{"expr": "g", "direction": "minimize"}]"#,
                ),
                "evaluator.fitness[0].expr",
            ),
            (
                MINIMAL.replace(r#""kind": "sphere""#, r#""kind": "sphere", "fitness": []"#),
                "evaluator.fitness",
            ),
            (
                MINIMAL.replace(
                    r#""type": "realvector""#,
                    r#""type": "realvector", "dims": 0"#,
                ),
                "individual",
            ),
            (
                MINIMAL.replace(
                    r#""kind": "hill_climber""#,
                    r#""kind": "hill_climber"}, "budget": {"max_in_flight": 0"#,
                ),
                "budget.max_in_flight",
            ),
            (
                MINIMAL.replace(
                    r#""kind": "sphere""#,
                    r#""kind": "external", "command": ["x"], "metrics": ["f"]"#,
                ),
                "evaluator.fitness",
            ),
        ];
        for (text, want) in bad {
            match parse_config(&text) {
                Err(ConfigError::Validation { path, .. }) => assert_eq!(path, want, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn render_round_trips() {
        let mut c = parse_config(MINIMAL).unwrap();
        assert_eq!(parse_config(&render_config(&c)).unwrap(), c);
        c.evolver = EvolverSpec::AlpsSteadyState(AlpsParams {
            reseed_interval: Some(50),
            ..AlpsParams::default()
        });
        c.individual = IndividualSpec::defaults_for(IndividualKind::Spacecraft);
        c.evaluator = EvaluatorSpec::DragProxy(Default::default());
        c.fitness = vec![
            ObjectiveSpec::new("projected_area_m2", Direction::Minimize),
            ObjectiveSpec::new("cargo_volume_m3", Direction::Maximize),
        ];
        c.selection.birth = SelectorSpec::Nsga2 {};
        c.selection.death = SelectorSpec::Nsga2 {};
        c.seed = u64::MAX;
        assert_eq!(parse_config(&render_config(&c)).unwrap(), c);
        let pc = ExperimentConfig {
            individual: IndividualSpec::defaults_for(IndividualKind::PointCloud),
            ..c.clone()
        };
        assert_eq!(parse_config(&render_config(&pc)).unwrap(), pc);
    }
}
