use serde::{Deserialize, Serialize};

use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Operator {
    AddShape,
    RemoveShape,
    Resize,
    Rotate,
    Translate,
    MutateMaterial,
    PerturbVertex,
    AddVertex,
    RemoveVertex,
    PerturbReal,
}

impl Operator {
    pub const ALL: [Operator; 10] = [
        Operator::AddShape,
        Operator::RemoveShape,
        Operator::Resize,
        Operator::Rotate,
        Operator::Translate,
        Operator::MutateMaterial,
        Operator::PerturbVertex,
        Operator::AddVertex,
        Operator::RemoveVertex,
        Operator::PerturbReal,
    ];
}

/// Operator weights and step sizes. Weights of operators that do not apply
/// to a genome kind are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MutationRates {
    pub add_shape: f64,
    pub remove_shape: f64,
    pub resize: f64,
    pub rotate: f64,
    pub translate: f64,
    pub mutate_material: f64,
    pub perturb_vertex: f64,
    pub add_vertex: f64,
    pub remove_vertex: f64,
    pub perturb_real: f64,
    /// Metres.
    pub translation_sigma: f64,
    /// Radians.
    pub rotation_sigma: f64,
    /// Relative.
    pub resize_sigma: f64,
    /// Metres.
    pub vertex_sigma: f64,
    /// Fraction of each dimension's range.
    pub real_sigma: f64,
    /// Probability that a birth with two available parents uses crossover.
    pub crossover: f64,
}

impl Default for MutationRates {
    fn default() -> Self {
        Self {
            add_shape: 1.0,
            remove_shape: 1.0,
            resize: 1.0,
            rotate: 1.0,
            translate: 1.0,
            mutate_material: 1.0,
            perturb_vertex: 1.0,
            add_vertex: 1.0,
            remove_vertex: 1.0,
            perturb_real: 1.0,
            translation_sigma: 0.01,
            rotation_sigma: 0.1,
            resize_sigma: 0.1,
            vertex_sigma: 0.005,
            real_sigma: 0.1,
            crossover: 0.0,
        }
    }
}

impl MutationRates {
    /// All weights zero except `op`.
    pub fn only(op: Operator) -> Self {
        let mut r = Self::default();
        for o in Operator::ALL {
            *r.weight_mut(o) = 0.0;
        }
        *r.weight_mut(op) = 1.0;
        r
    }

    pub fn weight(&self, op: Operator) -> f64 {
        match op {
            Operator::AddShape => self.add_shape,
            Operator::RemoveShape => self.remove_shape,
            Operator::Resize => self.resize,
            Operator::Rotate => self.rotate,
            Operator::Translate => self.translate,
            Operator::MutateMaterial => self.mutate_material,
            Operator::PerturbVertex => self.perturb_vertex,
            Operator::AddVertex => self.add_vertex,
            Operator::RemoveVertex => self.remove_vertex,
            Operator::PerturbReal => self.perturb_real,
        }
    }

    pub fn weight_mut(&mut self, op: Operator) -> &mut f64 {
        match op {
            Operator::AddShape => &mut self.add_shape,
            Operator::RemoveShape => &mut self.remove_shape,
            Operator::Resize => &mut self.resize,
            Operator::Rotate => &mut self.rotate,
            Operator::Translate => &mut self.translate,
            Operator::MutateMaterial => &mut self.mutate_material,
            Operator::PerturbVertex => &mut self.perturb_vertex,
            Operator::AddVertex => &mut self.add_vertex,
            Operator::RemoveVertex => &mut self.remove_vertex,
            Operator::PerturbReal => &mut self.perturb_real,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        for op in Operator::ALL {
            let w = self.weight(op);
            if !(w.is_finite() && w >= 0.0) {
                return Err(format!("{op:?} weight must be finite and >= 0, got {w}"));
            }
        }
        let sigmas = [
            ("translation_sigma", self.translation_sigma),
            ("rotation_sigma", self.rotation_sigma),
            ("resize_sigma", self.resize_sigma),
            ("vertex_sigma", self.vertex_sigma),
            ("real_sigma", self.real_sigma),
        ];
        for (name, s) in sigmas {
            if !(s.is_finite() && s > 0.0) {
                return Err(format!("{name} must be finite and > 0, got {s}"));
            }
        }
        if !(0.0..=1.0).contains(&self.crossover) {
            return Err(format!(
                "crossover must be in [0, 1], got {}",
                self.crossover
            ));
        }
        Ok(())
    }

    /// Weighted draw among `available`; `None` when all their weights are zero.
    pub fn draw(&self, available: &[Operator], rng: &mut RngStream) -> Option<Operator> {
        let total: f64 = available.iter().map(|&o| self.weight(o)).sum();
        if total <= 0.0 {
            return None;
        }
        let mut x = rng.next_uniform() * total;
        for &op in available {
            let w = self.weight(op);
            if x < w {
                return Some(op);
            }
            x -= w;
        }
        available
            .iter()
            .rev()
            .copied()
            .find(|&o| self.weight(o) > 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn draw_respects_weights() {
        let mut r = MutationRates::only(Operator::Rotate);
        r.translate = 3.0;
        let mut rng = RngStream::new(1, 0);
        let ops = [Operator::Rotate, Operator::Translate, Operator::Resize];
        let n = 100_000;
        let rotates = (0..n)
            .filter(|_| r.draw(&ops, &mut rng) == Some(Operator::Rotate))
            .count();
        let p = rotates as f64 / n as f64;
        assert!((p - 0.25).abs() < 3.0 * (0.25f64 * 0.75 / n as f64).sqrt() + 1e-3);
        assert_eq!(r.draw(&[Operator::Resize], &mut rng), None);
    }

    #[test]
    fn rejects_bad_rates() {
        let mut r = MutationRates::default();
        assert!(r.validate().is_ok());
        r.resize = -1.0;
        assert!(r.validate().is_err());
    }
}
