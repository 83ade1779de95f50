//! Local search from a single champion. Each round submits up to
//! `max_in_flight` mutants and, once all are back, keeps the best one that
//! is not worse than the champion. Ties move the champion (neutral drift).

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::{evaluated, Birth, EvaluatedIndividual, Proposal};
use crate::config::ExperimentConfig;
use crate::individuals::{Genome, MutationRates};
use crate::objective::ObjectiveVector;
use crate::rng::RngStream;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HillClimberParams {
    pub mutation: MutationRates,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct HillClimberState {
    pub champion: Option<EvaluatedIndividual>,
    submitted_in_round: usize,
    received_in_round: usize,
    outstanding: usize,
    round: Vec<EvaluatedIndividual>,
}

fn better(a: &EvaluatedIndividual, b: &EvaluatedIndividual) -> Ordering {
    let (oa, ob) = (
        a.objectives.as_ref().unwrap(),
        b.objectives.as_ref().unwrap(),
    );
    oa.compare_lex(ob).then(a.id.cmp(&b.id))
}

impl HillClimberState {
    pub(crate) fn propose(&mut self, config: &ExperimentConfig, rng: &mut RngStream) -> Proposal {
        // A round closes to new submissions once its first result is back.
        if self.received_in_round > 0 || self.submitted_in_round >= config.budget.max_in_flight {
            return Proposal::Wait;
        }
        let birth = match &self.champion {
            None => match Genome::random(&config.individual, rng) {
                Ok(g) => Birth::random(g, 0),
                Err(e) => return Proposal::Skip(e),
            },
            Some(champ) => match champ.genome.mutate(config.evolver.mutation(), rng) {
                Ok(g) => Birth {
                    genome: g,
                    layer: 0,
                    parent_ids: vec![champ.id],
                    parent_ages: vec![0],
                    age: 0,
                    generation: 0,
                },
                Err(e) => return Proposal::Skip(e),
            },
        };
        self.submitted_in_round += 1;
        self.outstanding += 1;
        Proposal::Submit(birth)
    }

    pub(crate) fn complete(
        &mut self,
        birth: Birth,
        objectives: Option<ObjectiveVector>,
        eval_index: u64,
    ) -> EvaluatedIndividual {
        let ind = evaluated(birth, objectives, 0, eval_index);
        self.outstanding -= 1;
        self.received_in_round += 1;
        if ind.is_valid() {
            self.round.push(ind.clone());
        }
        if self.outstanding == 0 {
            self.finish_round();
        }
        ind
    }

    fn finish_round(&mut self) {
        let best = std::mem::take(&mut self.round).into_iter().min_by(better);
        self.submitted_in_round = 0;
        self.received_in_round = 0;
        let Some(best) = best else { return };
        let accept = match &self.champion {
            None => true,
            Some(champ) => {
                best.objectives
                    .as_ref()
                    .unwrap()
                    .compare_lex(champ.objectives.as_ref().unwrap())
                    != Ordering::Greater
            }
        };
        if accept {
            self.champion = Some(best);
        }
    }
}
