//! Genomes, their variation operators, validity rules, and the versioned
//! JSON document they travel in.

pub mod conductivity;
mod pointcloud;
mod rates;
mod realvector;
mod shape;

#[cfg(test)]
pub(crate) use shape::fixtures;

pub use pointcloud::{PointCloudGenome, PointCloudParams};
pub use rates::{MutationRates, Operator};
pub use realvector::{RealVectorGenome, RealVectorParams};
pub use shape::{
    FlatNode, Material, ShapeConstraints, ShapeGenome, ShapeKind, ShapeNode, CARGO_SAMPLES,
};

use std::fmt;

use serde::de::Error as _;
use serde::ser::SerializeStruct;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::evaluators::EvaluatorKind;
use crate::geometry::{tessellate, Aabb, TriangleMesh};
use crate::rng::RngStream;

pub const GENOME_VERSION: u64 = 1;
/// Failed operator applications tolerated before giving up on a birth.
pub const MAX_VARIATION_ATTEMPTS: usize = 25;
pub const MAX_GENERATION_ATTEMPTS: usize = 100;

/// The 12U envelope, 0.20 × 0.20 × 0.30 m, centred on the origin.
pub fn twelve_u_bounds() -> Aabb {
    Aabb::centered([0.2, 0.2, 0.3])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InvalidReason {
    NoFeed,
    MultipleFeeds,
    FeedUnterminated,
    Short,
    OutOfBounds,
    InsufficientCargo,
    /// A non-root node no longer touches its parent.
    Detached,
    NodeCount,
    VertexCount,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Validity {
    Valid,
    Invalid(InvalidReason),
}

impl Validity {
    pub fn is_valid(self) -> bool {
        self == Validity::Valid
    }
}

impl From<Result<(), InvalidReason>> for Validity {
    fn from(r: Result<(), InvalidReason>) -> Self {
        match r {
            Ok(()) => Validity::Valid,
            Err(reason) => Validity::Invalid(reason),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IndividualKind {
    Shape,
    Antenna,
    Spacecraft,
    PointCloud,
    RealVector,
}

impl IndividualKind {
    pub const ALL: [IndividualKind; 5] = [
        IndividualKind::Shape,
        IndividualKind::Antenna,
        IndividualKind::Spacecraft,
        IndividualKind::PointCloud,
        IndividualKind::RealVector,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            IndividualKind::Shape => "shape",
            IndividualKind::Antenna => "antenna",
            IndividualKind::Spacecraft => "spacecraft",
            IndividualKind::PointCloud => "pointcloud",
            IndividualKind::RealVector => "realvector",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.tag() == tag)
    }

    fn shape_kind(self) -> Option<ShapeKind> {
        match self {
            IndividualKind::Shape => Some(ShapeKind::Generic),
            IndividualKind::Antenna => Some(ShapeKind::Antenna),
            IndividualKind::Spacecraft => Some(ShapeKind::Spacecraft),
            _ => None,
        }
    }
}

impl fmt::Display for IndividualKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Which evaluators can interpret which genomes.
pub fn compatible(kind: IndividualKind, evaluator: EvaluatorKind) -> bool {
    use EvaluatorKind as E;
    use IndividualKind as I;
    matches!(
        (kind, evaluator),
        (_, E::External)
            | (I::Antenna, E::AntennaProxy)
            | (I::Spacecraft | I::PointCloud, E::DragProxy)
            | (I::RealVector, E::Sphere | E::Rastrigin)
    )
}

/// Construction parameters for one individual kind.
#[derive(Debug, Clone, PartialEq)]
pub enum IndividualSpec {
    Shape(ShapeConstraints),
    Antenna(ShapeConstraints),
    Spacecraft(ShapeConstraints),
    PointCloud(PointCloudParams),
    RealVector(RealVectorParams),
}

impl IndividualSpec {
    pub fn defaults_for(kind: IndividualKind) -> Self {
        match kind {
            IndividualKind::Shape => {
                Self::Shape(ShapeConstraints::defaults_for(ShapeKind::Generic))
            }
            IndividualKind::Antenna => {
                Self::Antenna(ShapeConstraints::defaults_for(ShapeKind::Antenna))
            }
            IndividualKind::Spacecraft => {
                Self::Spacecraft(ShapeConstraints::defaults_for(ShapeKind::Spacecraft))
            }
            IndividualKind::PointCloud => Self::PointCloud(PointCloudParams::default()),
            IndividualKind::RealVector => Self::RealVector(RealVectorParams::default()),
        }
    }

    pub fn kind(&self) -> IndividualKind {
        match self {
            Self::Shape(_) => IndividualKind::Shape,
            Self::Antenna(_) => IndividualKind::Antenna,
            Self::Spacecraft(_) => IndividualKind::Spacecraft,
            Self::PointCloud(_) => IndividualKind::PointCloud,
            Self::RealVector(_) => IndividualKind::RealVector,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        match self {
            Self::Shape(c) | Self::Antenna(c) | Self::Spacecraft(c) => c.validate(),
            Self::PointCloud(p) => p.validate(),
            Self::RealVector(p) => p.validate(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IndividualError {
    #[error("no valid {kind} genome after {attempts} attempts")]
    GenerationFailure {
        kind: IndividualKind,
        attempts: usize,
    },
    #[error("mutation produced no valid genome in {0} attempts")]
    MutationExhausted(usize),
    #[error("crossover produced no valid genome in {0} attempts")]
    CrossoverFailure(usize),
    #[error("cannot cross a {0} genome with a {1} genome")]
    KindMismatch(IndividualKind, IndividualKind),
    #[error("no mutation operator with positive weight applies to this genome")]
    NoApplicableOperator,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DocumentError {
    #[error("genome document error at `{path}`: {message}")]
    Deserialize { path: String, message: String },
    #[error("unsupported genome document version {0} (expected {GENOME_VERSION})")]
    Version(u64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Genome {
    Shape(ShapeGenome),
    PointCloud(PointCloudGenome),
    RealVector(RealVectorGenome),
}

impl Genome {
    pub fn kind(&self) -> IndividualKind {
        match self {
            Genome::Shape(g) => match g.kind {
                ShapeKind::Generic => IndividualKind::Shape,
                ShapeKind::Antenna => IndividualKind::Antenna,
                ShapeKind::Spacecraft => IndividualKind::Spacecraft,
            },
            Genome::PointCloud(_) => IndividualKind::PointCloud,
            Genome::RealVector(_) => IndividualKind::RealVector,
        }
    }

    pub fn id(&self) -> u64 {
        hash_genome(self)
    }

    pub fn validate(&self) -> Validity {
        match self {
            Genome::Shape(g) => g.validate(),
            Genome::PointCloud(g) => g.validate(),
            Genome::RealVector(g) => g.validate(),
        }
    }

    /// A random genome passing its kind's validity rules.
    pub fn random(spec: &IndividualSpec, rng: &mut RngStream) -> Result<Genome, IndividualError> {
        for _ in 0..MAX_GENERATION_ATTEMPTS {
            let g = match spec {
                IndividualSpec::Shape(c) => {
                    Genome::Shape(ShapeGenome::random(ShapeKind::Generic, c, rng))
                }
                IndividualSpec::Antenna(c) => {
                    Genome::Shape(ShapeGenome::random(ShapeKind::Antenna, c, rng))
                }
                IndividualSpec::Spacecraft(c) => {
                    Genome::Shape(ShapeGenome::random(ShapeKind::Spacecraft, c, rng))
                }
                IndividualSpec::PointCloud(p) => {
                    Genome::PointCloud(PointCloudGenome::random(p, rng))
                }
                IndividualSpec::RealVector(p) => {
                    Genome::RealVector(RealVectorGenome::random(p, rng))
                }
            };
            if g.validate().is_valid() {
                return Ok(g);
            }
        }
        Err(IndividualError::GenerationFailure {
            kind: spec.kind(),
            attempts: MAX_GENERATION_ATTEMPTS,
        })
    }

    pub fn operator_available(&self, op: Operator) -> bool {
        match self {
            Genome::Shape(g) => g.available(op),
            Genome::PointCloud(g) => match op {
                Operator::PerturbVertex => true,
                Operator::AddVertex => g.vertices.len() < g.max_vertices,
                Operator::RemoveVertex => g.vertices.len() > 4,
                _ => false,
            },
            Genome::RealVector(_) => op == Operator::PerturbReal,
        }
    }

    /// Applies `op` once, without checking validity.
    pub fn apply(&self, op: Operator, rates: &MutationRates, rng: &mut RngStream) -> Genome {
        match self {
            Genome::Shape(g) => Genome::Shape(g.apply(op, rates, rng)),
            Genome::PointCloud(g) => Genome::PointCloud(match op {
                Operator::PerturbVertex => g.perturb_vertex(rates, rng),
                Operator::AddVertex => g.add_vertex(rates, rng),
                Operator::RemoveVertex => g.remove_vertex(rng),
                _ => unreachable!("operator {op:?} does not apply to point clouds"),
            }),
            Genome::RealVector(g) => {
                debug_assert_eq!(op, Operator::PerturbReal);
                Genome::RealVector(g.perturb(rates, rng))
            }
        }
    }

    /// One weighted operator application, re-drawn until the child is valid.
    pub fn mutate(
        &self,
        rates: &MutationRates,
        rng: &mut RngStream,
    ) -> Result<Genome, IndividualError> {
        let available: Vec<Operator> = Operator::ALL
            .into_iter()
            .filter(|&op| self.operator_available(op))
            .collect();
        for _ in 0..MAX_VARIATION_ATTEMPTS {
            let op = rates
                .draw(&available, rng)
                .ok_or(IndividualError::NoApplicableOperator)?;
            let child = self.apply(op, rates, rng);
            if child.validate().is_valid() {
                return Ok(child);
            }
        }
        Err(IndividualError::MutationExhausted(MAX_VARIATION_ATTEMPTS))
    }

    pub fn crossover(
        &self,
        other: &Genome,
        rng: &mut RngStream,
    ) -> Result<Genome, IndividualError> {
        if self.kind() != other.kind() {
            return Err(IndividualError::KindMismatch(self.kind(), other.kind()));
        }
        for _ in 0..MAX_VARIATION_ATTEMPTS {
            let child = match (self, other) {
                (Genome::Shape(a), Genome::Shape(b)) => Genome::Shape(a.crossover(b, rng)),
                (Genome::PointCloud(a), Genome::PointCloud(b)) => {
                    Genome::PointCloud(a.crossover(b, rng))
                }
                (Genome::RealVector(a), Genome::RealVector(b)) => {
                    Genome::RealVector(a.crossover(b, rng))
                }
                _ => unreachable!("kinds checked above"),
            };
            if child.validate().is_valid() {
                return Ok(child);
            }
        }
        Err(IndividualError::CrossoverFailure(MAX_VARIATION_ATTEMPTS))
    }

    /// Triangle soup of the design; `None` for non-geometric genomes.
    pub fn mesh(&self) -> Option<TriangleMesh> {
        match self {
            Genome::Shape(g) => Some(tessellate(&g.world_primitives())),
            Genome::PointCloud(g) => Some(g.mesh()),
            Genome::RealVector(_) => None,
        }
    }

    pub fn to_document(&self) -> String {
        serde_json::to_string(self).expect("genomes always serialize")
    }

    pub fn from_document(text: &str) -> Result<Genome, DocumentError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let raw: RawDocument = serde_path_to_error::deserialize(de).map_err(path_error)?;
        Self::from_raw(raw)
    }

    fn from_raw(raw: RawDocument) -> Result<Genome, DocumentError> {
        if raw.version != GENOME_VERSION {
            return Err(DocumentError::Version(raw.version));
        }
        let kind =
            IndividualKind::from_tag(&raw.tag).ok_or_else(|| DocumentError::Deserialize {
                path: "type".into(),
                message: format!("unknown individual type `{}`", raw.tag),
            })?;
        let prefixed = |e: serde_path_to_error::Error<serde_json::Error>| {
            let DocumentError::Deserialize { path, message } = path_error(e) else {
                unreachable!()
            };
            DocumentError::Deserialize {
                path: format!("payload.{path}"),
                message,
            }
        };
        Ok(match kind.shape_kind() {
            Some(sk) => {
                let p: ShapePayload =
                    serde_path_to_error::deserialize(raw.payload).map_err(prefixed)?;
                Genome::Shape(ShapeGenome::new(sk, p.root, p.constraints))
            }
            None if kind == IndividualKind::PointCloud => {
                Genome::PointCloud(serde_path_to_error::deserialize(raw.payload).map_err(prefixed)?)
            }
            None => {
                Genome::RealVector(serde_path_to_error::deserialize(raw.payload).map_err(prefixed)?)
            }
        })
    }
}

fn path_error(e: serde_path_to_error::Error<serde_json::Error>) -> DocumentError {
    DocumentError::Deserialize {
        path: e.path().to_string(),
        message: e.into_inner().to_string(),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDocument {
    version: u64,
    #[serde(rename = "type")]
    tag: String,
    payload: Value,
}

#[derive(Serialize)]
struct ShapePayloadRef<'a> {
    root: &'a ShapeNode,
    constraints: &'a ShapeConstraints,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ShapePayload {
    root: ShapeNode,
    constraints: ShapeConstraints,
}

impl Serialize for Genome {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Genome", 3)?;
        st.serialize_field("version", &GENOME_VERSION)?;
        st.serialize_field("type", self.kind().tag())?;
        match self {
            Genome::Shape(g) => st.serialize_field(
                "payload",
                &ShapePayloadRef {
                    root: &g.root,
                    constraints: &g.constraints,
                },
            )?,
            Genome::PointCloud(g) => st.serialize_field("payload", g)?,
            Genome::RealVector(g) => st.serialize_field("payload", g)?,
        }
        st.end()
    }
}

impl<'de> Deserialize<'de> for Genome {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = RawDocument::deserialize(d)?;
        Genome::from_raw(raw).map_err(D::Error::custom)
    }
}

/// First 8 bytes (big-endian) of SHA-256 over the canonical document:
/// compact JSON with object keys sorted at every level.
pub fn hash_genome(genome: &Genome) -> u64 {
    let value = serde_json::to_value(genome).expect("genomes always serialize");
    let mut canonical = String::new();
    write_canonical(&value, &mut canonical);
    let digest = Sha256::digest(canonical.as_bytes());
    u64::from_be_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

fn write_canonical(v: &Value, out: &mut String) {
    match v {
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&Value::String(k.clone()).to_string());
                out.push(':');
                write_canonical(&map[k], out);
            }
            out.push('}');
        }
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_canonical(item, out);
            }
            out.push(']');
        }
        scalar => out.push_str(&scalar.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn random_of(kind: IndividualKind, rng: &mut RngStream) -> Genome {
        Genome::random(&IndividualSpec::defaults_for(kind), rng).unwrap()
    }

    #[test]
    fn document_round_trip_is_exact() {
        let mut rng = RngStream::new(11, 0);
        for kind in IndividualKind::ALL {
            for _ in 0..20 {
                let g = random_of(kind, &mut rng);
                let doc = g.to_document();
                let back = Genome::from_document(&doc).unwrap();
                assert_eq!(back, g);
                assert_eq!(back.to_document(), doc);
                assert_eq!(back.id(), g.id());
            }
        }
    }

    #[test]
    fn document_errors() {
        let g = random_of(IndividualKind::RealVector, &mut RngStream::new(12, 0));
        let doc = g.to_document();
        let bad_type = doc.replace("\"realvector\"", "\"hovercraft\"");
        assert!(matches!(
            Genome::from_document(&bad_type),
            Err(DocumentError::Deserialize { ref path, .. }) if path == "type"
        ));
        let future = doc.replace("\"version\":1", "\"version\":99");
        assert_eq!(
            Genome::from_document(&future),
            Err(DocumentError::Version(99))
        );
        let broken = doc.replace("\"values\"", "\"valuez\"");
        assert!(matches!(
            Genome::from_document(&broken),
            Err(DocumentError::Deserialize { ref path, .. }) if path.starts_with("payload")
        ));
        assert!(Genome::from_document("{").is_err());
    }

    #[test]
    fn hash_ignores_key_order() {
        let g = random_of(IndividualKind::Antenna, &mut RngStream::new(13, 0));
        let mut value = serde_json::to_value(&g).unwrap();
        // Rebuild every object with reversed key order.
        fn reverse(v: &mut Value) {
            match v {
                Value::Object(map) => {
                    let mut entries: Vec<(String, Value)> =
                        std::mem::take(map).into_iter().collect();
                    entries.reverse();
                    for (k, mut val) in entries {
                        reverse(&mut val);
                        map.insert(k, val);
                    }
                }
                Value::Array(items) => items.iter_mut().for_each(reverse),
                _ => {}
            }
        }
        reverse(&mut value);
        let reparsed: Genome = serde_json::from_value(value).unwrap();
        assert_eq!(hash_genome(&reparsed), hash_genome(&g));
    }

    #[test]
    fn hash_separates_single_coordinate_changes() {
        let g = random_of(IndividualKind::RealVector, &mut RngStream::new(14, 0));
        let Genome::RealVector(mut rv) = g.clone() else {
            unreachable!()
        };
        rv.values[3] = f64::from_bits(rv.values[3].to_bits() + 1);
        assert_ne!(hash_genome(&Genome::RealVector(rv)), hash_genome(&g));
    }

    #[test]
    fn random_genomes_are_distinct() {
        let mut rng = RngStream::new(15, 0);
        for kind in IndividualKind::ALL {
            let ids: HashSet<u64> = (0..200).map(|_| random_of(kind, &mut rng).id()).collect();
            assert_eq!(ids.len(), 200, "{kind}");
        }
    }

    #[test]
    fn infeasible_spacecraft_fails_generation() {
        let mut c = ShapeConstraints::defaults_for(ShapeKind::Spacecraft);
        c.min_cargo_volume = 0.02;
        let err =
            Genome::random(&IndividualSpec::Spacecraft(c), &mut RngStream::new(16, 0)).unwrap_err();
        assert!(matches!(
            err,
            IndividualError::GenerationFailure { attempts: 100, .. }
        ));
    }

    #[test]
    fn compatibility_table() {
        use EvaluatorKind as E;
        assert!(!compatible(IndividualKind::Spacecraft, E::AntennaProxy));
        assert!(compatible(IndividualKind::RealVector, E::Sphere));
        assert!(compatible(IndividualKind::Antenna, E::External));
        assert!(compatible(IndividualKind::PointCloud, E::DragProxy));
        assert!(!compatible(IndividualKind::RealVector, E::DragProxy));
        assert!(!compatible(IndividualKind::Shape, E::Rastrigin));
    }

    #[test]
    fn add_shape_redrawn_at_capacity() {
        let mut g = fixtures::dipole(0.1);
        g.constraints.max_nodes = 3;
        let genome = Genome::Shape(g);
        let mut rates = MutationRates::only(Operator::AddShape);
        assert_eq!(
            genome.mutate(&rates, &mut RngStream::new(17, 0)),
            Err(IndividualError::NoApplicableOperator)
        );
        rates.translate = 1.0;
        let child = genome.mutate(&rates, &mut RngStream::new(17, 0)).unwrap();
        assert_eq!(child.kind(), IndividualKind::Antenna);
        let Genome::Shape(c) = child else {
            unreachable!()
        };
        assert_eq!(c.node_count(), 3);
    }
}
