//! Best-so-far tracking: one champion for single-objective runs, the
//! nondominated set of everything evaluated for multiobjective runs.

use serde::{Deserialize, Serialize};

use super::EvaluatedIndividual;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BestArchive {
    members: Vec<EvaluatedIndividual>,
}

impl BestArchive {
    pub fn members(&self) -> &[EvaluatedIndividual] {
        &self.members
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Returns true when `ind` entered the archive.
    pub fn offer(&mut self, ind: &EvaluatedIndividual) -> bool {
        let Some(obj) = &ind.objectives else {
            return false;
        };
        if obj.len() == 1 {
            let improves = match self.members.first() {
                None => true,
                Some(best) => obj.is_better_than(best.objectives.as_ref().unwrap()),
            };
            if improves {
                self.members = vec![ind.clone()];
            }
            return improves;
        }
        let blocked = self.members.iter().any(|m| {
            let mo = m.objectives.as_ref().unwrap();
            mo.dominates(obj) || mo.values() == obj.values()
        });
        if blocked {
            return false;
        }
        self.members
            .retain(|m| !obj.dominates(m.objectives.as_ref().unwrap()));
        self.members.push(ind.clone());
        true
    }

    /// The single best member; for a front, the lexicographic best.
    pub fn best(&self) -> Option<&EvaluatedIndividual> {
        self.members.iter().min_by(|a, b| {
            let (oa, ob) = (
                a.objectives.as_ref().unwrap(),
                b.objectives.as_ref().unwrap(),
            );
            oa.compare_lex(ob)
                .then(a.birth_eval_index.cmp(&b.birth_eval_index))
        })
    }
}
