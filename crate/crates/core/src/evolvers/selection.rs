//! Birth and death selectors for steady-state populations.
//!
//! Every selector works on `&[T]` where `T: Scored`, so the same code serves
//! layer members, death competitions (members plus a newcomer), and tests.
//! Ties are always broken by id, never by position.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::nsga2;
use crate::objective::{Direction, ObjectiveVector};
use crate::rng::RngStream;

pub trait Scored {
    fn id(&self) -> u64;
    fn objectives(&self) -> &ObjectiveVector;
}

impl Scored for (u64, ObjectiveVector) {
    fn id(&self) -> u64 {
        self.0
    }
    fn objectives(&self) -> &ObjectiveVector {
        &self.1
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SelectionError {
    #[error("roulette needs one maximized objective with non-negative values and a positive sum")]
    InvalidFitnessForRoulette,
    #[error("cannot select from an empty population")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SelectorSpec {
    Tournament {
        #[serde(default = "default_k")]
        k: usize,
    },
    Roulette {},
    Nsga2 {},
}

fn default_k() -> usize {
    3
}

impl Default for SelectorSpec {
    fn default() -> Self {
        SelectorSpec::Tournament { k: default_k() }
    }
}

impl SelectorSpec {
    /// Checks the selector against the fitness shape it will see.
    pub fn check(&self, directions: &[Direction]) -> Result<(), String> {
        match *self {
            SelectorSpec::Tournament { k: 0 } => Err("tournament size k must be at least 1".into()),
            SelectorSpec::Tournament { .. } => Ok(()),
            SelectorSpec::Roulette {} if directions != [Direction::Maximize] => {
                Err("roulette requires exactly one maximized objective".into())
            }
            SelectorSpec::Roulette {} => Ok(()),
            SelectorSpec::Nsga2 {} if directions.len() < 2 => {
                Err("nsga2 requires at least two objectives".into())
            }
            SelectorSpec::Nsga2 {} => Ok(()),
        }
    }

    pub fn select_birth<T: Scored>(
        &self,
        members: &[T],
        rng: &mut RngStream,
    ) -> Result<usize, SelectionError> {
        if members.is_empty() {
            return Err(SelectionError::Empty);
        }
        match *self {
            SelectorSpec::Tournament { k } => {
                Ok(tournament_select(members, k.min(members.len()), rng))
            }
            SelectorSpec::Roulette {} => roulette_select(members, rng),
            SelectorSpec::Nsga2 {} => Ok(nsga2::nsga2_birth_select(members, rng)),
        }
    }

    pub fn select_death<T: Scored>(
        &self,
        members: &[T],
        rng: &mut RngStream,
    ) -> Result<usize, SelectionError> {
        if members.is_empty() {
            return Err(SelectionError::Empty);
        }
        match *self {
            SelectorSpec::Tournament { k } => {
                Ok(tournament_death(members, k.min(members.len()), rng))
            }
            SelectorSpec::Roulette {} => roulette_death(members, rng),
            SelectorSpec::Nsga2 {} => Ok(nsga2::nsga2_death_select(members)),
        }
    }
}

/// `Less` when `a` is the better member. Lexicographic over objectives,
/// then lower id.
fn rank_order<T: Scored>(a: &T, b: &T) -> Ordering {
    a.objectives()
        .compare_lex(b.objectives())
        .then_with(|| a.id().cmp(&b.id()))
}

/// Best of `k` distinct uniform draws.
pub fn tournament_select<T: Scored>(members: &[T], k: usize, rng: &mut RngStream) -> usize {
    assert!(
        k >= 1 && k <= members.len(),
        "tournament size {k} outside 1..={}",
        members.len()
    );
    rng.sample_indices(members.len(), k)
        .into_iter()
        .min_by(|&a, &b| rank_order(&members[a], &members[b]))
        .expect("k >= 1")
}

/// Worst of `k` distinct uniform draws; ties go to the higher id.
pub fn tournament_death<T: Scored>(members: &[T], k: usize, rng: &mut RngStream) -> usize {
    assert!(
        k >= 1 && k <= members.len(),
        "tournament size {k} outside 1..={}",
        members.len()
    );
    rng.sample_indices(members.len(), k)
        .into_iter()
        .max_by(|&a, &b| rank_order(&members[a], &members[b]))
        .expect("k >= 1")
}

fn roulette_values<T: Scored>(members: &[T]) -> Result<Vec<f64>, SelectionError> {
    members
        .iter()
        .map(|m| {
            let o = m.objectives();
            if o.directions() != [Direction::Maximize] {
                return Err(SelectionError::InvalidFitnessForRoulette);
            }
            Ok(o.value(0))
        })
        .collect()
}

fn spin(weights: &[f64], rng: &mut RngStream) -> usize {
    let total: f64 = weights.iter().sum();
    let target = rng.next_uniform() * total;
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if target < acc {
            return i;
        }
    }
    // Rounding can leave `target` just above the running sum.
    weights
        .iter()
        .rposition(|&w| w > 0.0)
        .expect("positive total")
}

/// Fitness-proportionate: member `i` with probability `f_i / Σf`.
pub fn roulette_select<T: Scored>(
    members: &[T],
    rng: &mut RngStream,
) -> Result<usize, SelectionError> {
    let f = roulette_values(members)?;
    if f.iter().any(|&v| v < 0.0) || f.iter().sum::<f64>() <= 0.0 {
        return Err(SelectionError::InvalidFitnessForRoulette);
    }
    Ok(spin(&f, rng))
}

/// Victim with probability proportional to `f_max - f_i`; uniform when all
/// fitnesses are equal.
pub fn roulette_death<T: Scored>(
    members: &[T],
    rng: &mut RngStream,
) -> Result<usize, SelectionError> {
    let f = roulette_values(members)?;
    let max = f.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let gaps: Vec<f64> = f.iter().map(|&v| max - v).collect();
    if gaps.iter().sum::<f64>() <= 0.0 {
        return Ok(rng.index(members.len()));
    }
    Ok(spin(&gaps, rng))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pop(values: &[f64], dir: Direction) -> Vec<(u64, ObjectiveVector)> {
        values
            .iter()
            .enumerate()
            .map(|(i, &v)| (i as u64, ObjectiveVector::single(v, dir).unwrap()))
            .collect()
    }

    fn census(trials: usize, mut pick: impl FnMut() -> usize, n: usize) -> Vec<usize> {
        let mut counts = vec![0; n];
        for _ in 0..trials {
            counts[pick()] += 1;
        }
        counts
    }

    #[test]
    fn k1_is_uniform() {
        let p = pop(&[5.0, 1.0, 3.0, 2.0], Direction::Minimize);
        let mut rng = RngStream::new(1, 1);
        let counts = census(40_000, || tournament_select(&p, 1, &mut rng), 4);
        for c in counts {
            // 3σ for Binomial(40000, 1/4) is about 260.
            assert!((c as f64 - 10_000.0).abs() < 260.0, "{c}");
        }
    }

    #[test]
    fn full_tournament_is_argbest() {
        let p = pop(&[5.0, 1.0, 3.0, 1.0], Direction::Minimize);
        let mut rng = RngStream::new(1, 2);
        for _ in 0..20 {
            // 1.0 appears twice; the lower id wins.
            assert_eq!(tournament_select(&p, 4, &mut rng), 1);
            // 5.0 is the unique worst.
            assert_eq!(tournament_death(&p, 4, &mut rng), 0);
        }
        let q = pop(&[5.0, 1.0, 5.0], Direction::Minimize);
        assert_eq!(tournament_death(&q, 3, &mut rng), 2);
        let m = pop(&[5.0, 1.0, 3.0], Direction::Maximize);
        assert_eq!(tournament_select(&m, 3, &mut rng), 0);
    }

    /// Probability that the member of rank `r` (0 = worst, ascending) wins a
    /// size-k tournament without replacement: C(r, k-1) / C(n, k).
    fn analytic_tournament(n: usize, k: usize) -> Vec<f64> {
        fn choose(n: usize, k: usize) -> f64 {
            if k > n {
                return 0.0;
            }
            (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
        }
        (0..n).map(|r| choose(r, k - 1) / choose(n, k)).collect()
    }

    #[test]
    fn k3_frequencies_follow_rank() {
        // Maximize, values equal to rank so member i has rank i.
        let values: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let p = pop(&values, Direction::Maximize);
        let mut rng = RngStream::new(9, 9);
        let trials = 100_000;
        let counts = census(trials, || tournament_select(&p, 3, &mut rng), 10);
        let want = analytic_tournament(10, 3);
        assert!((want.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for i in 0..10 {
            let p_i = want[i];
            let sigma = (trials as f64 * p_i * (1.0 - p_i)).sqrt();
            assert!(
                (counts[i] as f64 - trials as f64 * p_i).abs() <= 3.0 * sigma + 1.0,
                "rank {i}: {} vs {}",
                counts[i],
                p_i
            );
        }
        // Ranks 0 and 1 can never win a 3-tournament.
        assert_eq!(&counts[..2], &[0, 0]);
        assert!(counts[2..].windows(2).all(|w| w[0] < w[1]), "{counts:?}");
    }

    #[test]
    fn roulette_proportions() {
        let p = pop(&[1.0, 3.0], Direction::Maximize);
        let mut rng = RngStream::new(4, 4);
        let trials = 100_000;
        let counts = census(trials, || roulette_select(&p, &mut rng).unwrap(), 2);
        let sigma = (trials as f64 * 0.25 * 0.75).sqrt();
        assert!(
            (counts[0] as f64 - 25_000.0).abs() < 3.0 * sigma,
            "{counts:?}"
        );

        let eq = pop(&[2.0; 4], Direction::Maximize);
        let counts = census(trials, || roulette_select(&eq, &mut rng).unwrap(), 4);
        let sigma = (trials as f64 * 0.25 * 0.75).sqrt();
        for c in counts {
            assert!((c as f64 - 25_000.0).abs() < 3.0 * sigma);
        }
    }

    #[test]
    fn roulette_rejects_bad_fitness() {
        let mut rng = RngStream::new(0, 0);
        assert_eq!(
            roulette_select(&pop(&[1.0, -0.5], Direction::Maximize), &mut rng),
            Err(SelectionError::InvalidFitnessForRoulette)
        );
        assert_eq!(
            roulette_select(&pop(&[0.0, 0.0], Direction::Maximize), &mut rng),
            Err(SelectionError::InvalidFitnessForRoulette)
        );
        assert_eq!(
            roulette_select(&pop(&[1.0, 2.0], Direction::Minimize), &mut rng),
            Err(SelectionError::InvalidFitnessForRoulette)
        );
    }

    #[test]
    fn roulette_death_spares_the_best() {
        let p = pop(&[4.0, 1.0, 2.0], Direction::Maximize);
        let mut rng = RngStream::new(5, 5);
        let counts = census(30_000, || roulette_death(&p, &mut rng).unwrap(), 3);
        assert_eq!(counts[0], 0);
        // Gaps 3 and 2: 60 / 40.
        let sigma = (30_000.0f64 * 0.6 * 0.4).sqrt();
        assert!((counts[1] as f64 - 18_000.0).abs() < 3.0 * sigma);
    }

    #[test]
    fn selector_compatibility() {
        use Direction::*;
        assert!(SelectorSpec::Roulette {}.check(&[Maximize]).is_ok());
        assert!(SelectorSpec::Roulette {}.check(&[Minimize]).is_err());
        assert!(SelectorSpec::Roulette {}
            .check(&[Maximize, Maximize])
            .is_err());
        assert!(SelectorSpec::Nsga2 {}.check(&[Minimize]).is_err());
        assert!(SelectorSpec::Nsga2 {}.check(&[Minimize, Maximize]).is_ok());
        assert!(SelectorSpec::Tournament { k: 0 }
            .check(&[Minimize])
            .is_err());
        let s: SelectorSpec = serde_json::from_str(r#"{"kind":"tournament"}"#).unwrap();
        assert_eq!(s, SelectorSpec::Tournament { k: 3 });
        assert!(serde_json::from_str::<SelectorSpec>(r#"{"kind":"roulette","k":2}"#).is_err());
    }
}
