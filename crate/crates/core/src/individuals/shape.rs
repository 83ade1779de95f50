//! Tree-assembled primitive designs: generic shapes, antennas, spacecraft.

use serde::{Deserialize, Serialize};

use super::conductivity::ConductivityGraph;
use super::{twelve_u_bounds, InvalidReason, MutationRates, Operator, Validity};
use crate::geometry::{
    monte_carlo_volume, primitives_overlap, within_bounds, Aabb, Primitive, Shape, Transform, Vec3,
};
use crate::rng::RngStream;

/// Samples behind the cargo-volume validity check.
pub const CARGO_SAMPLES: usize = 100_000;
const CARGO_STREAM: u64 = 0xCA60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Material {
    Conductor,
    /// Air: part of the tree, absent electrically and aerodynamically.
    FreeSpace,
    Feed,
}

impl Material {
    pub const ALL: [Material; 3] = [Material::Conductor, Material::FreeSpace, Material::Feed];
}

/// A primitive posed relative to its parent's frame, plus its children.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapeNode {
    pub primitive: Primitive,
    pub material: Material,
    #[serde(default)]
    pub children: Vec<ShapeNode>,
}

impl ShapeNode {
    pub fn leaf(primitive: Primitive, material: Material) -> Self {
        Self {
            primitive,
            material,
            children: Vec::new(),
        }
    }

    pub fn with_child(mut self, child: ShapeNode) -> Self {
        self.children.push(child);
        self
    }

    pub fn count(&self) -> usize {
        1 + self.children.iter().map(ShapeNode::count).sum::<usize>()
    }

    fn nth(&self, n: &mut usize) -> Option<&ShapeNode> {
        if *n == 0 {
            return Some(self);
        }
        *n -= 1;
        self.children.iter().find_map(|c| c.nth(n))
    }

    fn nth_mut(&mut self, n: &mut usize) -> Option<&mut ShapeNode> {
        if *n == 0 {
            return Some(self);
        }
        *n -= 1;
        for c in &mut self.children {
            if let Some(found) = c.nth_mut(n) {
                return Some(found);
            }
        }
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeKind {
    Generic,
    Antenna,
    Spacecraft,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapeConstraints {
    pub bounds: Aabb,
    /// m³; only checked for spacecraft.
    pub min_cargo_volume: f64,
    pub max_nodes: usize,
    /// Only checked for antennas.
    pub max_feeds: usize,
    /// Typical linear size (m) of primitives created by random generation
    /// and `add_shape`.
    pub part_scale: f64,
}

impl ShapeConstraints {
    pub fn defaults_for(kind: ShapeKind) -> Self {
        match kind {
            ShapeKind::Generic => Self {
                bounds: Aabb::centered([1.0; 3]),
                min_cargo_volume: 0.0,
                max_nodes: 16,
                max_feeds: 1,
                part_scale: 0.1,
            },
            ShapeKind::Antenna => Self {
                bounds: Aabb::centered([1.0; 3]),
                min_cargo_volume: 0.0,
                max_nodes: 16,
                max_feeds: 1,
                part_scale: 0.05,
            },
            ShapeKind::Spacecraft => Self {
                bounds: twelve_u_bounds(),
                min_cargo_volume: 0.006,
                max_nodes: 16,
                max_feeds: 1,
                part_scale: 0.04,
            },
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.max_nodes == 0 {
            return Err("max_nodes must be >= 1".into());
        }
        if self.max_feeds == 0 {
            return Err("max_feeds must be >= 1".into());
        }
        if !(self.min_cargo_volume.is_finite() && self.min_cargo_volume >= 0.0) {
            return Err(format!(
                "min_cargo_volume must be >= 0, got {}",
                self.min_cargo_volume
            ));
        }
        if !(self.part_scale.is_finite() && self.part_scale > 0.0) {
            return Err(format!("part_scale must be > 0, got {}", self.part_scale));
        }
        Ok(())
    }
}

/// A node in world coordinates, in pre-order.
#[derive(Debug, Clone)]
pub struct FlatNode {
    pub world: Primitive,
    pub material: Material,
    pub parent: Option<usize>,
    /// Position among the parent's children.
    pub slot: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapeGenome {
    pub kind: ShapeKind,
    pub root: ShapeNode,
    pub constraints: ShapeConstraints,
}

impl ShapeGenome {
    pub fn new(kind: ShapeKind, root: ShapeNode, constraints: ShapeConstraints) -> Self {
        Self {
            kind,
            root,
            constraints,
        }
    }

    pub fn node_count(&self) -> usize {
        self.root.count()
    }

    pub fn node(&self, index: usize) -> Option<&ShapeNode> {
        self.root.nth(&mut { index })
    }

    pub fn node_mut(&mut self, index: usize) -> Option<&mut ShapeNode> {
        self.root.nth_mut(&mut { index })
    }

    pub fn flatten(&self) -> Vec<FlatNode> {
        fn walk(
            node: &ShapeNode,
            frame: &Transform,
            parent: Option<usize>,
            slot: usize,
            out: &mut Vec<FlatNode>,
        ) {
            let pose = frame.compose(node.primitive.pose());
            let me = out.len();
            out.push(FlatNode {
                world: node.primitive.with_pose(pose),
                material: node.material,
                parent,
                slot,
            });
            for (i, c) in node.children.iter().enumerate() {
                walk(c, &pose, Some(me), i, out);
            }
        }
        let mut out = Vec::with_capacity(self.node_count());
        walk(&self.root, &Transform::identity(), None, 0, &mut out);
        out
    }

    pub fn world_primitives(&self) -> Vec<Primitive> {
        self.flatten().into_iter().map(|n| n.world).collect()
    }

    /// Everything except free space.
    pub fn solid_primitives(&self) -> Vec<Primitive> {
        self.flatten()
            .into_iter()
            .filter(|n| n.material != Material::FreeSpace)
            .map(|n| n.world)
            .collect()
    }

    /// Monte Carlo volume of the solid union, replayable per genome.
    pub fn cargo_volume(&self) -> f64 {
        let solids = self.solid_primitives();
        let seed = super::hash_genome(&super::Genome::Shape(self.clone()));
        monte_carlo_volume(
            &solids,
            CARGO_SAMPLES,
            &mut RngStream::new(seed, CARGO_STREAM),
        )
    }

    fn structural(&self, flat: &[FlatNode]) -> Result<(), InvalidReason> {
        if flat.is_empty() || flat.len() > self.constraints.max_nodes {
            return Err(InvalidReason::NodeCount);
        }
        for n in flat {
            if let Some(p) = n.parent {
                if !primitives_overlap(&n.world, &flat[p].world) {
                    return Err(InvalidReason::Detached);
                }
            }
        }
        Ok(())
    }

    fn bounds_check(&self, flat: &[FlatNode]) -> Result<(), InvalidReason> {
        let prims: Vec<Primitive> = flat.iter().map(|n| n.world).collect();
        if within_bounds(&prims, &self.constraints.bounds) {
            Ok(())
        } else {
            Err(InvalidReason::OutOfBounds)
        }
    }

    /// Conductor graph over flat indices plus the conductors each feed touches.
    pub fn conductivity(
        &self,
        flat: &[FlatNode],
    ) -> (Vec<usize>, ConductivityGraph, Vec<Vec<usize>>) {
        let conductors: Vec<usize> = (0..flat.len())
            .filter(|&i| flat[i].material == Material::Conductor)
            .collect();
        let mut edges = Vec::new();
        for a in 0..conductors.len() {
            for b in a + 1..conductors.len() {
                if primitives_overlap(&flat[conductors[a]].world, &flat[conductors[b]].world) {
                    edges.push((a, b));
                }
            }
        }
        let graph = ConductivityGraph::new(conductors.len(), edges);
        let touched = (0..flat.len())
            .filter(|&i| flat[i].material == Material::Feed)
            .map(|f| {
                (0..conductors.len())
                    .filter(|&c| primitives_overlap(&flat[f].world, &flat[conductors[c]].world))
                    .collect()
            })
            .collect();
        (conductors, graph, touched)
    }

    fn antenna_rules(&self, flat: &[FlatNode]) -> Result<(), InvalidReason> {
        let feeds = flat.iter().filter(|n| n.material == Material::Feed).count();
        if feeds == 0 {
            return Err(InvalidReason::NoFeed);
        }
        if feeds > self.constraints.max_feeds {
            return Err(InvalidReason::MultipleFeeds);
        }
        let (_, graph, touched) = self.conductivity(flat);
        for t in &touched {
            graph.check_feed(t)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Validity {
        let flat = self.flatten();
        let checks = || -> Result<(), InvalidReason> {
            self.structural(&flat)?;
            match self.kind {
                ShapeKind::Generic => self.bounds_check(&flat),
                ShapeKind::Antenna => {
                    self.antenna_rules(&flat)?;
                    self.bounds_check(&flat)
                }
                ShapeKind::Spacecraft => {
                    self.bounds_check(&flat)?;
                    if self.cargo_volume() < self.constraints.min_cargo_volume {
                        return Err(InvalidReason::InsufficientCargo);
                    }
                    Ok(())
                }
            }
        };
        checks().into()
    }

    /// Flat indices of conductors in the components the feeds connect.
    pub fn feed_path_conductors(&self) -> Vec<usize> {
        let flat = self.flatten();
        let (conductors, graph, touched) = self.conductivity(&flat);
        let terminals: Vec<usize> = touched.iter().flat_map(|t| graph.terminals(t)).collect();
        (0..conductors.len())
            .filter(|&c| terminals.contains(&graph.component(c)))
            .map(|c| conductors[c])
            .collect()
    }

    // ---- generation ----

    pub fn random(kind: ShapeKind, constraints: &ShapeConstraints, rng: &mut RngStream) -> Self {
        let s = constraints.part_scale;
        let mut g = match kind {
            ShapeKind::Generic => {
                let half = constraints.bounds.size() / 4.0;
                let center = constraints.bounds.center()
                    + Vec3::new(
                        rng.uniform_in(-half.x, half.x),
                        rng.uniform_in(-half.y, half.y),
                        rng.uniform_in(-half.z, half.z),
                    );
                let pose = random_rotation(rng).with_translation(center);
                let root = ShapeNode::leaf(random_part(s, pose, rng), Material::Conductor);
                Self::new(kind, root, constraints.clone())
            }
            ShapeKind::Antenna => {
                let r = s * rng.uniform_in(0.1, 0.2);
                let h1 = s * rng.uniform_in(1.0, 3.0);
                let h2 = s * rng.uniform_in(1.0, 3.0);
                let rf = r * rng.uniform_in(1.5, 2.5);
                let center = constraints.bounds.center();
                let rod =
                    |h: f64, t: Vec3| Primitive::cylinder(r, h, Transform::from_translation(t));
                let feed =
                    Primitive::sphere(rf, Transform::from_translation(Vec3::z() * (h1 + 0.5 * rf)));
                let root = ShapeNode::leaf(
                    rod(h1, Vec3::zeros()).expect("positive sizes"),
                    Material::Conductor,
                )
                .with_child(
                    ShapeNode::leaf(feed.expect("positive sizes"), Material::Feed).with_child(
                        ShapeNode::leaf(
                            rod(h2, Vec3::z() * (0.5 * rf + h2)).expect("positive sizes"),
                            Material::Conductor,
                        ),
                    ),
                );
                let mut g = Self::new(kind, root, constraints.clone());
                let pose = random_rotation(rng).with_translation(center);
                g.root.primitive = g.root.primitive.with_pose(pose);
                g
            }
            ShapeKind::Spacecraft => {
                let half = constraints.bounds.size() / 2.0;
                let h = [0, 1, 2].map(|i| half[i] * rng.uniform_in(0.8, 1.0));
                let pose = Transform::from_translation(constraints.bounds.center());
                let root = ShapeNode::leaf(
                    Primitive::cuboid(h, pose).expect("positive sizes"),
                    Material::Conductor,
                );
                Self::new(kind, root, constraints.clone())
            }
        };
        let min_nodes = g.node_count();
        let target = (1 + rng.index(4)).max(min_nodes).min(constraints.max_nodes);
        for _ in 0..3 {
            if g.node_count() >= target {
                break;
            }
            let candidate = g.add_shape(rng);
            if candidate.validate().is_valid() {
                g = candidate;
            }
        }
        g
    }

    // ---- operators ----

    pub fn available(&self, op: Operator) -> bool {
        match op {
            Operator::AddShape => self.node_count() < self.constraints.max_nodes,
            Operator::RemoveShape => self.node_count() > 1,
            Operator::Resize | Operator::Rotate | Operator::Translate => true,
            Operator::MutateMaterial => self.kind == ShapeKind::Antenna,
            _ => false,
        }
    }

    pub fn apply(&self, op: Operator, rates: &MutationRates, rng: &mut RngStream) -> Self {
        match op {
            Operator::AddShape => self.add_shape(rng),
            Operator::RemoveShape => self.remove_shape(rng),
            Operator::Resize => self.resize(rates, rng),
            Operator::Rotate => self.rotate(rates, rng),
            Operator::Translate => self.translate(rates, rng),
            Operator::MutateMaterial => self.mutate_material(rng),
            _ => unreachable!("operator {op:?} does not apply to shape genomes"),
        }
    }

    /// New primitive centred on a random surface point of a random node.
    pub fn add_shape(&self, rng: &mut RngStream) -> Self {
        let mut out = self.clone();
        let parent = rng.index(self.node_count());
        let node = out.node_mut(parent).expect("index in range");
        let local = node.primitive.with_pose(Transform::identity());
        let anchor = local.support(&random_unit(rng));
        let pose = random_rotation(rng).with_translation(anchor);
        let material = match self.kind {
            ShapeKind::Antenna if rng.chance(0.5) => Material::FreeSpace,
            _ => Material::Conductor,
        };
        node.children.push(ShapeNode::leaf(
            random_part(self.constraints.part_scale, pose, rng),
            material,
        ));
        out
    }

    /// Removes a random non-root leaf.
    pub fn remove_shape(&self, rng: &mut RngStream) -> Self {
        let mut out = self.clone();
        let flat = self.flatten();
        let leaves: Vec<usize> = (1..flat.len())
            .filter(|&i| !flat.iter().any(|n| n.parent == Some(i)))
            .collect();
        let victim = leaves[rng.index(leaves.len())];
        let parent = flat[victim].parent.expect("non-root");
        out.node_mut(parent)
            .expect("index in range")
            .children
            .remove(flat[victim].slot);
        out
    }

    pub fn resize(&self, rates: &MutationRates, rng: &mut RngStream) -> Self {
        let mut out = self.clone();
        let node = out
            .node_mut(rng.index(self.node_count()))
            .expect("index in range");
        let mut f = || (rates.resize_sigma * rng.normal()).exp();
        let shape = match *node.primitive.shape() {
            Shape::Cuboid { half_extents: h } => Shape::Cuboid {
                half_extents: [h[0] * f(), h[1] * f(), h[2] * f()],
            },
            Shape::Cylinder {
                radius,
                half_height,
            } => Shape::Cylinder {
                radius: radius * f(),
                half_height: half_height * f(),
            },
            Shape::Sphere { radius } => Shape::Sphere {
                radius: radius * f(),
            },
        };
        node.primitive = node.primitive.with_shape(shape).expect("positive sizes");
        out
    }

    /// Spins one node about its own centre; its subtree follows.
    pub fn rotate(&self, rates: &MutationRates, rng: &mut RngStream) -> Self {
        let mut out = self.clone();
        let node = out
            .node_mut(rng.index(self.node_count()))
            .expect("index in range");
        let delta =
            Transform::from_axis_angle(random_unit(rng), rates.rotation_sigma * rng.normal());
        let pose = node.primitive.pose();
        let rotated = Transform::new(delta.rotation() * pose.rotation(), *pose.translation());
        node.primitive = node.primitive.with_pose(rotated);
        out
    }

    pub fn translate(&self, rates: &MutationRates, rng: &mut RngStream) -> Self {
        let mut out = self.clone();
        let node = out
            .node_mut(rng.index(self.node_count()))
            .expect("index in range");
        let step = Vec3::new(rng.normal(), rng.normal(), rng.normal()) * rates.translation_sigma;
        let pose = *node.primitive.pose();
        node.primitive = node
            .primitive
            .with_pose(pose.with_translation(pose.translation() + step));
        out
    }

    /// Re-draws one node's material uniformly.
    pub fn mutate_material(&self, rng: &mut RngStream) -> Self {
        let mut out = self.clone();
        let node = out
            .node_mut(rng.index(self.node_count()))
            .expect("index in range");
        node.material = Material::ALL[rng.index(3)];
        out
    }

    /// Replaces a random subtree of `self` with a random subtree of `other`,
    /// keeping the graft's pose relative to its new parent.
    pub fn crossover(&self, other: &Self, rng: &mut RngStream) -> Self {
        let mut out = self.clone();
        let graft = other
            .node(rng.index(other.node_count()))
            .expect("index in range")
            .clone();
        let at = rng.index(self.node_count());
        *out.node_mut(at).expect("index in range") = graft;
        out
    }
}

fn random_unit(rng: &mut RngStream) -> Vec3 {
    loop {
        let v = Vec3::new(rng.normal(), rng.normal(), rng.normal());
        let n = v.norm();
        if n > 1e-9 {
            return v / n;
        }
    }
}

fn random_rotation(rng: &mut RngStream) -> Transform {
    Transform::from_axis_angle(random_unit(rng), rng.uniform_in(0.0, std::f64::consts::PI))
}

/// Random cuboid, cylinder or sphere with sizes in `[0.2, 1] · scale`.
fn random_part(scale: f64, pose: Transform, rng: &mut RngStream) -> Primitive {
    let which = rng.index(3);
    let mut size = || scale * rng.uniform_in(0.2, 1.0);
    let shape = match which {
        0 => Shape::Cuboid {
            half_extents: [size(), size(), size()],
        },
        1 => Shape::Cylinder {
            radius: size(),
            half_height: size(),
        },
        _ => Shape::Sphere { radius: size() },
    };
    Primitive::new(shape, pose).expect("positive sizes")
}
