//! Age-layered steady-state GA.
//!
//! Layer `i` admits members up to age `(i+1)^2 * age_gap`; the top layer has
//! no limit. One generation-equivalent is `layers * layer_capacity`
//! completed evaluations. Layer 0 is periodically emptied upward and refilled
//! with random genomes.

use serde::{Deserialize, Serialize};

use super::{
    evaluated, Birth, EvaluatedIndividual, EvolverError, EvolverSpec, Proposal, SelectorSpec,
};
use crate::config::ExperimentConfig;
use crate::individuals::{Genome, MutationRates};
use crate::objective::ObjectiveVector;
use crate::rng::RngStream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlpsParams {
    pub layers: usize,
    pub age_gap: u64,
    pub layer_capacity: usize,
    /// Chance that a parent is drawn from the layer below.
    pub inflow: f64,
    /// Births between layer-0 reseeds; `None` means `age_gap * layer_capacity`.
    pub reseed_interval: Option<u64>,
    pub mutation: MutationRates,
}

impl Default for AlpsParams {
    fn default() -> Self {
        Self {
            layers: 5,
            age_gap: 10,
            layer_capacity: 20,
            inflow: 0.2,
            reseed_interval: None,
            mutation: MutationRates {
                crossover: 0.5,
                ..MutationRates::default()
            },
        }
    }
}

impl AlpsParams {
    /// `None` for the unbounded top layer.
    pub fn age_limit(&self, layer: usize) -> Option<u64> {
        (layer + 1 < self.layers).then(|| ((layer as u64 + 1).pow(2)) * self.age_gap)
    }

    pub fn age_limits(&self) -> Vec<Option<u64>> {
        (0..self.layers).map(|i| self.age_limit(i)).collect()
    }

    pub fn reseed_interval(&self) -> u64 {
        self.reseed_interval
            .unwrap_or(self.age_gap * self.layer_capacity as u64)
    }

    /// Completed evaluations per generation-equivalent.
    pub fn generation_length(&self) -> u64 {
        (self.layers * self.layer_capacity) as u64
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.layers == 0 {
            return Err("layers must be at least 1".into());
        }
        if self.age_gap == 0 {
            return Err("age_gap must be at least 1".into());
        }
        if self.layer_capacity < 2 {
            return Err("layer_capacity must be at least 2".into());
        }
        if !(0.0..=1.0).contains(&self.inflow) {
            return Err(format!("inflow must lie in [0, 1], got {}", self.inflow));
        }
        if self.reseed_interval == Some(0) {
            return Err("reseed_interval must be at least 1".into());
        }
        self.mutation.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub index: usize,
    pub age_limit: Option<u64>,
    pub capacity: usize,
    pub members: Vec<EvaluatedIndividual>,
}

/// One placement, for replaying the age bookkeeping after the fact.
#[derive(Debug, Clone, PartialEq)]
pub struct LineageEvent {
    pub eval_index: u64,
    pub id: u64,
    pub parent_ages: Vec<u64>,
    pub age_at_birth: u64,
    pub generation_at_birth: u64,
    pub age_at_completion: u64,
    pub generation_at_completion: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlpsState {
    pub layers: Vec<Layer>,
    pub generation: u64,
    /// Offspring submitted so far.
    pub births: u64,
    pub completed: u64,
    /// Random births still owed to layer 0.
    pub reseed_pending: usize,
    pub next_reseed: u64,
    #[serde(skip)]
    pub lineage: Option<Vec<LineageEvent>>,
}

fn params(config: &ExperimentConfig) -> &AlpsParams {
    match &config.evolver {
        EvolverSpec::AlpsSteadyState(p) => p,
        EvolverSpec::HillClimber(_) => panic!("ALPS state driven by a hill-climber config"),
    }
}

impl AlpsState {
    pub fn new(p: &AlpsParams) -> Self {
        Self {
            layers: (0..p.layers)
                .map(|index| Layer {
                    index,
                    age_limit: p.age_limit(index),
                    capacity: p.layer_capacity,
                    members: Vec::new(),
                })
                .collect(),
            generation: 0,
            births: 0,
            completed: 0,
            reseed_pending: p.layer_capacity,
            next_reseed: p.reseed_interval(),
            lineage: None,
        }
    }

    /// Start collecting [`LineageEvent`]s.
    pub fn record_lineage(&mut self) {
        self.lineage.get_or_insert_with(Vec::new);
    }

    pub fn members(&self) -> impl Iterator<Item = &EvaluatedIndividual> {
        self.layers.iter().flat_map(|l| l.members.iter())
    }

    pub fn population(&self) -> usize {
        self.layers.iter().map(|l| l.members.len()).sum()
    }

    pub(crate) fn propose(
        &mut self,
        config: &ExperimentConfig,
        rng: &mut RngStream,
    ) -> Result<Proposal, EvolverError> {
        let p = params(config);
        if self.births >= self.next_reseed {
            self.next_reseed += p.reseed_interval();
            self.reseed(config, rng)?;
        }

        let non_empty: Vec<usize> = (0..self.layers.len())
            .filter(|&i| !self.layers[i].members.is_empty())
            .collect();
        if self.reseed_pending > 0 || non_empty.is_empty() {
            let genome = match Genome::random(&config.individual, rng) {
                Ok(g) => g,
                Err(e) => return Ok(Proposal::Skip(e)),
            };
            self.reseed_pending = self.reseed_pending.saturating_sub(1);
            self.births += 1;
            return Ok(Proposal::Submit(Birth::random(genome, self.generation)));
        }

        let layer = non_empty[rng.index(non_empty.len())];
        let first = self.pick_parent(layer, p.inflow, config.selection.birth, rng)?;
        let rates = &p.mutation;
        let mut parents = vec![first];
        let mut genome = None;
        if rng.chance(rates.crossover) {
            let second = self.pick_parent(layer, p.inflow, config.selection.birth, rng)?;
            // A failed crossover falls back to mutating the first parent.
            if let Ok(child) = first.genome.crossover(&second.genome, rng) {
                genome = Some(child);
                parents.push(second);
            }
        }
        let genome = match genome {
            Some(g) => g,
            None => match first.genome.mutate(rates, rng) {
                Ok(g) => g,
                Err(e) => return Ok(Proposal::Skip(e)),
            },
        };
        let parent_ages: Vec<u64> = parents.iter().map(|m| m.age).collect();
        let birth = Birth {
            genome,
            layer,
            parent_ids: parents.iter().map(|m| m.id).collect(),
            age: parent_ages.iter().copied().max().unwrap_or(0),
            parent_ages,
            generation: self.generation,
        };
        self.births += 1;
        Ok(Proposal::Submit(birth))
    }

    fn pick_parent(
        &self,
        layer: usize,
        inflow: f64,
        selector: SelectorSpec,
        rng: &mut RngStream,
    ) -> Result<&EvaluatedIndividual, EvolverError> {
        let pool = if layer > 0 && !self.layers[layer - 1].members.is_empty() && rng.chance(inflow)
        {
            layer - 1
        } else {
            layer
        };
        let members = &self.layers[pool].members;
        Ok(&members[selector.select_birth(members, rng)?])
    }

    /// Moves layer 0 up into layer 1's death competition and schedules a
    /// full layer of random births.
    fn reseed(
        &mut self,
        config: &ExperimentConfig,
        rng: &mut RngStream,
    ) -> Result<(), EvolverError> {
        if self.layers.len() > 1 {
            let movers = std::mem::take(&mut self.layers[0].members);
            for m in movers {
                self.insert(1, m, config.selection.death, rng)?;
            }
        }
        self.reseed_pending = self.layers[0].capacity;
        Ok(())
    }

    pub(crate) fn complete(
        &mut self,
        config: &ExperimentConfig,
        birth: Birth,
        objectives: Option<ObjectiveVector>,
        eval_index: u64,
        rng: &mut RngStream,
    ) -> Result<EvaluatedIndividual, EvolverError> {
        let p = params(config);
        let age = birth.age + (self.generation - birth.generation);
        let (parent_ages, age_at_birth, generation_at_birth) =
            (birth.parent_ages.clone(), birth.age, birth.generation);
        let ind = evaluated(birth, objectives, age, eval_index);
        if ind.is_valid() {
            self.insert(ind.layer, ind.clone(), config.selection.death, rng)?;
            if let Some(log) = &mut self.lineage {
                log.push(LineageEvent {
                    eval_index,
                    id: ind.id,
                    parent_ages,
                    age_at_birth,
                    generation_at_birth,
                    age_at_completion: age,
                    generation_at_completion: self.generation,
                });
            }
        }
        self.completed += 1;
        if self.completed % p.generation_length() == 0 {
            self.generation += 1;
            for layer in &mut self.layers {
                for m in &mut layer.members {
                    m.age += 1;
                }
            }
        }
        self.enforce_age_limits(config.selection.death, rng)?;
        Ok(ind)
    }

    /// Places `ind` in `layer`, or the first layer above whose limit admits
    /// its age. A full layer runs death selection over members plus `ind`.
    fn insert(
        &mut self,
        layer: usize,
        mut ind: EvaluatedIndividual,
        death: SelectorSpec,
        rng: &mut RngStream,
    ) -> Result<(), EvolverError> {
        let mut l = layer;
        while self.layers[l].age_limit.is_some_and(|lim| ind.age > lim) {
            l += 1;
        }
        ind.layer = l;
        let target = &mut self.layers[l];
        if target.members.len() < target.capacity {
            target.members.push(ind);
            return Ok(());
        }
        let victim = {
            let mut contest: Vec<&EvaluatedIndividual> = target.members.iter().collect();
            contest.push(&ind);
            death.select_death(&contest, rng)?
        };
        if victim < target.members.len() {
            target.members[victim] = ind;
        }
        Ok(())
    }

    /// Over-age members move up, top-down so a layer is cleared before it
    /// receives.
    fn enforce_age_limits(
        &mut self,
        death: SelectorSpec,
        rng: &mut RngStream,
    ) -> Result<(), EvolverError> {
        for i in (0..self.layers.len().saturating_sub(1)).rev() {
            let Some(limit) = self.layers[i].age_limit else {
                continue;
            };
            if self.layers[i].members.iter().all(|m| m.age <= limit) {
                continue;
            }
            let (stay, movers): (Vec<_>, Vec<_>) = std::mem::take(&mut self.layers[i].members)
                .into_iter()
                .partition(|m| m.age <= limit);
            self.layers[i].members = stay;
            for m in movers {
                self.insert(i + 1, m, death, rng)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentConfig;
    use crate::individuals::{IndividualSpec, RealVectorGenome};

    fn config(p: AlpsParams) -> ExperimentConfig {
        let mut c = ExperimentConfig::minimal(
            IndividualSpec::RealVector(Default::default()),
            crate::evaluators::EvaluatorSpec::Rastrigin {},
        );
        c.evolver = EvolverSpec::AlpsSteadyState(p);
        c
    }

    fn member(x: f64, age: u64, layer: usize) -> EvaluatedIndividual {
        let genome = Genome::RealVector(RealVectorGenome::new(vec![x], vec![(-10.0, 10.0)]));
        EvaluatedIndividual {
            id: genome.id(),
            genome,
            objectives: Some(ObjectiveVector::minimize(vec![x * x]).unwrap()),
            age,
            layer,
            parent_ids: vec![],
            birth_eval_index: 0,
        }
    }

    #[test]
    fn polynomial_age_limits() {
        let p = AlpsParams::default();
        assert_eq!(
            p.age_limits(),
            vec![Some(10), Some(40), Some(90), Some(160), None]
        );
        assert_eq!(p.reseed_interval(), 200);
        assert_eq!(p.generation_length(), 100);
    }

    #[test]
    fn bootstrap_fills_layer_zero_with_random_genomes() {
        let cfg = config(AlpsParams::default());
        let mut s = AlpsState::new(params(&cfg));
        let mut rng = RngStream::new(1, 1);
        for _ in 0..20 {
            let Proposal::Submit(b) = s.propose(&cfg, &mut rng).unwrap() else {
                panic!()
            };
            assert!(b.parent_ids.is_empty());
            assert_eq!((b.layer, b.age), (0, 0));
        }
        let Proposal::Submit(b) = s.propose(&cfg, &mut rng).unwrap() else {
            panic!()
        };
        // Nothing evaluated yet, so layer 0 still falls back to random births.
        assert!(b.parent_ids.is_empty());
    }

    #[test]
    fn over_age_member_is_promoted_after_drain() {
        let cfg = config(AlpsParams::default());
        let mut s = AlpsState::new(params(&cfg));
        let mut rng = RngStream::new(2, 2);
        s.layers[0].members.push(member(0.5, 10, 0));
        s.layers[0].members.push(member(0.7, 3, 0));
        // Push the clock to one completion before a generation boundary.
        s.completed = 99;
        let birth = Birth::random(
            Genome::RealVector(RealVectorGenome::new(vec![0.1], vec![(-10.0, 10.0)])),
            0,
        );
        s.complete(
            &cfg,
            birth,
            Some(ObjectiveVector::minimize(vec![0.01]).unwrap()),
            100,
            &mut rng,
        )
        .unwrap();
        assert_eq!(s.generation, 1);
        let old: Vec<_> = s.layers[1]
            .members
            .iter()
            .map(|m| (m.age, m.layer))
            .collect();
        assert_eq!(old, vec![(11, 1)]);
        assert_eq!(s.layers[0].members.len(), 2);
        assert!(s.layers[0].members.iter().all(|m| m.age <= 10));
    }

    #[test]
    fn full_layer_runs_death_selection() {
        let mut cfg = config(AlpsParams {
            layer_capacity: 2,
            layers: 1,
            ..Default::default()
        });
        cfg.selection.death = SelectorSpec::Tournament { k: 3 };
        let mut s = AlpsState::new(params(&cfg));
        let mut rng = RngStream::new(3, 3);
        s.layers[0].members = vec![member(1.0, 0, 0), member(3.0, 0, 0)];
        s.insert(0, member(2.0, 0, 0), cfg.selection.death, &mut rng)
            .unwrap();
        let xs: Vec<f64> = s.layers[0]
            .members
            .iter()
            .map(|m| m.objectives.as_ref().unwrap().value(0))
            .collect();
        assert_eq!(xs, vec![1.0, 4.0]);
    }

    #[test]
    fn reseed_moves_layer_zero_up() {
        let cfg = config(AlpsParams {
            reseed_interval: Some(3),
            ..Default::default()
        });
        let mut s = AlpsState::new(params(&cfg));
        let mut rng = RngStream::new(4, 4);
        s.reseed_pending = 0;
        s.births = 3;
        s.layers[0].members = vec![member(1.0, 0, 0), member(2.0, 0, 0)];
        let Proposal::Submit(b) = s.propose(&cfg, &mut rng).unwrap() else {
            panic!()
        };
        assert!(b.parent_ids.is_empty());
        assert!(s.layers[0].members.is_empty());
        assert_eq!(s.layers[1].members.len(), 2);
        assert_eq!(s.reseed_pending, 19);
        assert_eq!(s.next_reseed, 6);
    }
}
