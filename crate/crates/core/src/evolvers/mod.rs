//! Population management: the ALPS steady-state GA, the hill climber, their
//! selectors, and the run driver that ties them to an evaluation manager.

mod alps;
mod archive;
mod hill;
pub mod log;
pub mod nsga2;
pub mod report;
mod run;
pub mod selection;

pub use alps::{AlpsParams, AlpsState, Layer, LineageEvent};
pub use archive::BestArchive;
pub use hill::{HillClimberParams, HillClimberState};
pub use nsga2::{
    crowding_distance, nondominated_sort, nsga2_birth_select, nsga2_death_select, FrontRanking,
};
pub use run::{CheckpointError, Run, RunError, RunFiles, StepStatus, CHECKPOINT_VERSION};
pub use selection::{
    roulette_death, roulette_select, tournament_death, tournament_select, Scored, SelectionError,
    SelectorSpec,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::ExperimentConfig;
use crate::individuals::{Genome, IndividualError, MutationRates};
use crate::objective::ObjectiveVector;
use crate::rng::RngStream;

/// A genome with its evaluation outcome and lineage. `objectives` is `None`
/// when the evaluation failed or the result could not be scored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluatedIndividual {
    pub id: u64,
    pub genome: Genome,
    pub objectives: Option<ObjectiveVector>,
    /// Generation-equivalents since the oldest ancestral material appeared.
    pub age: u64,
    pub layer: usize,
    pub parent_ids: Vec<u64>,
    /// 1-based index of the evaluation that produced this record.
    pub birth_eval_index: u64,
}

impl EvaluatedIndividual {
    pub fn is_valid(&self) -> bool {
        self.objectives.is_some()
    }
}

impl Scored for EvaluatedIndividual {
    fn id(&self) -> u64 {
        self.id
    }
    fn objectives(&self) -> &ObjectiveVector {
        self.objectives
            .as_ref()
            .expect("population members are evaluated")
    }
}

impl<T: Scored> Scored for &T {
    fn id(&self) -> u64 {
        (**self).id()
    }
    fn objectives(&self) -> &ObjectiveVector {
        (**self).objectives()
    }
}

/// Everything the evolver decided at submission time, kept until the
/// result comes back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Birth {
    pub genome: Genome,
    /// Layer the offspring was bred for.
    pub layer: usize,
    pub parent_ids: Vec<u64>,
    pub parent_ages: Vec<u64>,
    /// Age at submission: max parent age, or 0 for random genomes.
    pub age: u64,
    /// Generation clock at submission.
    pub generation: u64,
}

impl Birth {
    pub fn random(genome: Genome, generation: u64) -> Self {
        Birth {
            genome,
            layer: 0,
            parent_ids: Vec::new(),
            parent_ages: Vec::new(),
            age: 0,
            generation,
        }
    }
}

#[derive(Debug)]
#[allow(clippy::large_enum_variant)]
pub enum Proposal {
    Submit(Birth),
    /// Nothing to submit until an in-flight result arrives.
    Wait,
    /// Variation produced no valid genome; the birth is dropped.
    Skip(IndividualError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvolverError {
    #[error("evaluation budget exhausted")]
    BudgetExhausted,
    #[error(transparent)]
    Selection(#[from] SelectionError),
    #[error("{attempts} consecutive births failed; last error: {last}")]
    BirthsFailing {
        attempts: usize,
        last: IndividualError,
    },
    #[error("nothing in flight and nothing to submit")]
    Stalled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EvolverSpec {
    AlpsSteadyState(AlpsParams),
    HillClimber(HillClimberParams),
}

impl EvolverSpec {
    pub fn mutation(&self) -> &MutationRates {
        match self {
            EvolverSpec::AlpsSteadyState(p) => &p.mutation,
            EvolverSpec::HillClimber(p) => &p.mutation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum EvolverState {
    Alps(AlpsState),
    HillClimber(HillClimberState),
}

impl EvolverState {
    pub fn new(config: &ExperimentConfig) -> Self {
        match &config.evolver {
            EvolverSpec::AlpsSteadyState(p) => EvolverState::Alps(AlpsState::new(p)),
            EvolverSpec::HillClimber(_) => EvolverState::HillClimber(HillClimberState::default()),
        }
    }

    pub fn propose(
        &mut self,
        config: &ExperimentConfig,
        rng: &mut RngStream,
    ) -> Result<Proposal, EvolverError> {
        match self {
            EvolverState::Alps(s) => s.propose(config, rng),
            EvolverState::HillClimber(s) => Ok(s.propose(config, rng)),
        }
    }

    /// Files a finished evaluation and returns the record to log.
    pub fn complete(
        &mut self,
        config: &ExperimentConfig,
        birth: Birth,
        objectives: Option<ObjectiveVector>,
        eval_index: u64,
        rng: &mut RngStream,
    ) -> Result<EvaluatedIndividual, EvolverError> {
        match self {
            EvolverState::Alps(s) => s.complete(config, birth, objectives, eval_index, rng),
            EvolverState::HillClimber(s) => Ok(s.complete(birth, objectives, eval_index)),
        }
    }

    pub fn as_alps(&self) -> Option<&AlpsState> {
        match self {
            EvolverState::Alps(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_alps_mut(&mut self) -> Option<&mut AlpsState> {
        match self {
            EvolverState::Alps(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_hill_climber(&self) -> Option<&HillClimberState> {
        match self {
            EvolverState::HillClimber(s) => Some(s),
            _ => None,
        }
    }
}

pub(crate) fn evaluated(
    birth: Birth,
    objectives: Option<ObjectiveVector>,
    age: u64,
    eval_index: u64,
) -> EvaluatedIndividual {
    EvaluatedIndividual {
        id: birth.genome.id(),
        genome: birth.genome,
        objectives,
        age,
        layer: birth.layer,
        parent_ids: birth.parent_ids,
        birth_eval_index: eval_index,
    }
}
