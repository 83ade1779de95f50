//! Drag stand-in: the silhouette area seen by the oncoming flow.

use serde::{Deserialize, Serialize};

use super::{EvalJob, EvalStatus, Evaluator, EvaluatorKind, Metrics, Outcome};
use crate::geometry::{
    projected_area, projected_area_of, to_vec3, GeometryError, LineOccluder, Vec3,
};
use crate::individuals::Genome;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DragProxyParams {
    /// Unit vector along the flow.
    pub velocity_direction: [f64; 3],
    pub dynamic_pressure_scale: f64,
    pub grid_resolution: usize,
}

impl Default for DragProxyParams {
    fn default() -> Self {
        Self {
            velocity_direction: [0.0, 0.0, 1.0],
            dynamic_pressure_scale: 1.0,
            grid_resolution: 512,
        }
    }
}

impl DragProxyParams {
    pub fn validate(&self) -> Result<(), String> {
        let n = to_vec3(self.velocity_direction).norm();
        if !n.is_finite() || (n - 1.0).abs() > 1e-6 {
            return Err(GeometryError::DegenerateDirection(n).to_string());
        }
        if !(self.dynamic_pressure_scale.is_finite() && self.dynamic_pressure_scale > 0.0) {
            return Err("dynamic_pressure_scale must be > 0".into());
        }
        if self.grid_resolution < crate::geometry::MIN_GRID_RESOLUTION {
            return Err(GeometryError::GridTooCoarse(self.grid_resolution).to_string());
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct DragProxy {
    params: DragProxyParams,
}

impl DragProxy {
    pub const METRICS: [&'static str; 3] = ["projected_area_m2", "cargo_volume_m3", "drag_proxy"];

    pub fn new(params: DragProxyParams) -> Self {
        Self { params }
    }

    /// `(projected_area_m2, cargo_volume_m3)` for a spacecraft-like genome.
    pub fn measure(&self, genome: &Genome, direction: &Vec3) -> Result<(f64, f64), String> {
        let grid = self.params.grid_resolution;
        match genome {
            Genome::Shape(g) => {
                let area = projected_area(&g.solid_primitives(), direction, grid)
                    .map_err(|e| e.to_string())?;
                Ok((area, g.cargo_volume()))
            }
            Genome::PointCloud(g) => {
                let hull = g.hull().ok_or("point cloud hull is degenerate")?;
                let mut occluders: Vec<&dyn LineOccluder> = vec![&hull];
                occluders.extend(g.panels.iter().map(|p| p as &dyn LineOccluder));
                let area =
                    projected_area_of(&occluders, direction, grid).map_err(|e| e.to_string())?;
                Ok((area, hull.volume()))
            }
            Genome::RealVector(_) => Err("drag proxy needs a geometric genome".into()),
        }
    }
}

impl Evaluator for DragProxy {
    fn kind(&self) -> EvaluatorKind {
        EvaluatorKind::DragProxy
    }

    fn metric_names(&self) -> Vec<String> {
        Self::METRICS.iter().map(|s| s.to_string()).collect()
    }

    fn evaluate(&self, job: &EvalJob) -> Outcome {
        match self.measure(&job.genome, &to_vec3(self.params.velocity_direction)) {
            Ok((area, cargo)) => Outcome::ok(Metrics::from([
                ("projected_area_m2".to_string(), area),
                ("cargo_volume_m3".to_string(), cargo),
                (
                    "drag_proxy".to_string(),
                    self.params.dynamic_pressure_scale * area,
                ),
            ])),
            Err(message) => Outcome::failed(EvalStatus::Error, message),
        }
    }
}
