//! Nondominated sorting and crowding distance.

use std::cmp::Ordering;

use super::selection::Scored;
use crate::objective::ObjectiveVector;
use crate::rng::RngStream;

#[derive(Debug, Clone, PartialEq)]
pub struct FrontRanking {
    /// 0 = nondominated.
    pub rank: Vec<usize>,
    /// Within each member's own front; `f64::INFINITY` at the boundaries.
    pub crowding: Vec<f64>,
}

impl FrontRanking {
    pub fn fronts(&self) -> Vec<Vec<usize>> {
        let depth = self.rank.iter().max().map_or(0, |&r| r + 1);
        let mut fronts = vec![Vec::new(); depth];
        for (i, &r) in self.rank.iter().enumerate() {
            fronts[r].push(i);
        }
        fronts
    }
}

/// Fast nondominated sort with per-front crowding distances.
pub fn nondominated_sort(objectives: &[&ObjectiveVector]) -> FrontRanking {
    let n = objectives.len();
    let mut dominated_by = vec![0usize; n];
    let mut dominates: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in i + 1..n {
            if objectives[i].dominates(objectives[j]) {
                dominates[i].push(j);
                dominated_by[j] += 1;
            } else if objectives[j].dominates(objectives[i]) {
                dominates[j].push(i);
                dominated_by[i] += 1;
            }
        }
    }

    let mut rank = vec![0usize; n];
    let mut crowding = vec![0.0; n];
    let mut front: Vec<usize> = (0..n).filter(|&i| dominated_by[i] == 0).collect();
    let mut r = 0;
    while !front.is_empty() {
        let members: Vec<&ObjectiveVector> = front.iter().map(|&i| objectives[i]).collect();
        for (&i, d) in front.iter().zip(crowding_distance(&members)) {
            rank[i] = r;
            crowding[i] = d;
        }
        let mut next = Vec::new();
        for &i in &front {
            for &j in &dominates[i] {
                dominated_by[j] -= 1;
                if dominated_by[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        front = next;
        r += 1;
    }
    FrontRanking { rank, crowding }
}

/// Crowding distance of each member of one front. Sorting per objective is
/// by value with position as the tie-break, so duplicates get a stable
/// order and the interior copies collapse to zero span.
pub fn crowding_distance(front: &[&ObjectiveVector]) -> Vec<f64> {
    let n = front.len();
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    let mut dist = vec![0.0; n];
    let mut order: Vec<usize> = (0..n).collect();
    for m in 0..front[0].len() {
        order.sort_by(|&a, &b| {
            front[a]
                .value(m)
                .total_cmp(&front[b].value(m))
                .then(a.cmp(&b))
        });
        let lo = front[order[0]].value(m);
        let hi = front[order[n - 1]].value(m);
        dist[order[0]] = f64::INFINITY;
        dist[order[n - 1]] = f64::INFINITY;
        let range = hi - lo;
        if range <= 0.0 {
            continue;
        }
        for w in 1..n - 1 {
            let span = front[order[w + 1]].value(m) - front[order[w - 1]].value(m);
            dist[order[w]] += span / range;
        }
    }
    dist
}

/// `Less` when member `a` is preferred: lower rank, then larger crowding,
/// then lower id.
fn preference<T: Scored>(members: &[T], ranking: &FrontRanking, a: usize, b: usize) -> Ordering {
    ranking.rank[a]
        .cmp(&ranking.rank[b])
        .then_with(|| ranking.crowding[b].total_cmp(&ranking.crowding[a]))
        .then_with(|| members[a].id().cmp(&members[b].id()))
}

fn rank_members<T: Scored>(members: &[T]) -> FrontRanking {
    let objectives: Vec<&ObjectiveVector> = members.iter().map(|m| m.objectives()).collect();
    nondominated_sort(&objectives)
}

/// Binary tournament on (rank, crowding, id).
pub fn nsga2_birth_select<T: Scored>(members: &[T], rng: &mut RngStream) -> usize {
    assert!(!members.is_empty());
    if members.len() == 1 {
        return 0;
    }
    let ranking = rank_members(members);
    let pair = rng.sample_indices(members.len(), 2);
    let (a, b) = (pair[0], pair[1]);
    match preference(members, &ranking, a, b) {
        Ordering::Greater => b,
        _ => a,
    }
}

/// Highest rank, then lowest crowding, then higher id.
pub fn nsga2_death_select<T: Scored>(members: &[T]) -> usize {
    assert!(!members.is_empty());
    let ranking = rank_members(members);
    (0..members.len())
        .max_by(|&a, &b| preference(members, &ranking, a, b))
        .expect("non-empty")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::Direction;

    fn mins(points: &[&[f64]]) -> Vec<ObjectiveVector> {
        points
            .iter()
            .map(|p| ObjectiveVector::minimize(p.to_vec()).unwrap())
            .collect()
    }

    fn refs(v: &[ObjectiveVector]) -> Vec<&ObjectiveVector> {
        v.iter().collect()
    }

    #[test]
    fn small_fronts() {
        let one = mins(&[&[3.0, 4.0]]);
        assert_eq!(nondominated_sort(&refs(&one)).rank, vec![0]);

        let three = mins(&[&[0.0, 1.0], &[1.0, 0.0], &[1.0, 1.0]]);
        let r = nondominated_sort(&refs(&three));
        assert_eq!(r.rank, vec![0, 0, 1]);
        assert_eq!(r.fronts(), vec![vec![0, 1], vec![2]]);
    }

    #[test]
    fn crowding_examples() {
        let pair = mins(&[&[0.0, 1.0], &[1.0, 0.0]]);
        assert!(crowding_distance(&refs(&pair))
            .iter()
            .all(|d| d.is_infinite()));

        let line = mins(&[&[0.0, 2.0], &[1.0, 1.0], &[2.0, 0.0]]);
        let d = crowding_distance(&refs(&line));
        assert!(d[0].is_infinite() && d[2].is_infinite());
        assert_eq!(d[1], 2.0);

        // All copies of one point: every objective has zero range.
        let dup = mins(&[&[1.0, 1.0], &[1.0, 1.0], &[1.0, 1.0], &[1.0, 1.0]]);
        let d = crowding_distance(&refs(&dup));
        assert_eq!(d.iter().filter(|x| x.is_finite()).count(), 2);
        assert!(d.iter().filter(|x| x.is_finite()).all(|&x| x == 0.0));
    }

    #[test]
    fn direction_awareness() {
        let pts = vec![
            ObjectiveVector::new(
                vec![1.0, 5.0],
                vec![Direction::Minimize, Direction::Maximize],
            )
            .unwrap(),
            ObjectiveVector::new(
                vec![1.0, 4.0],
                vec![Direction::Minimize, Direction::Maximize],
            )
            .unwrap(),
        ];
        assert_eq!(nondominated_sort(&refs(&pts)).rank, vec![0, 1]);
    }

    fn scored(points: &[&[f64]]) -> Vec<(u64, ObjectiveVector)> {
        mins(points)
            .into_iter()
            .enumerate()
            .map(|(i, o)| (i as u64, o))
            .collect()
    }

    #[test]
    fn birth_prefers_lower_rank() {
        let m = scored(&[&[1.0, 1.0], &[2.0, 2.0]]);
        let mut rng = RngStream::new(1, 1);
        for _ in 0..20 {
            assert_eq!(nsga2_birth_select(&m, &mut rng), 0);
        }
    }

    #[test]
    fn death_takes_worst_rank_then_least_crowded() {
        let m = scored(&[&[0.0, 1.0], &[1.0, 0.0], &[2.0, 2.0]]);
        assert_eq!(nsga2_death_select(&m), 2);

        // One front; the interior members have finite crowding 1.0 and 1.25.
        let m = scored(&[&[0.0, 4.0], &[1.0, 2.0], &[1.5, 1.5], &[4.0, 0.0]]);
        let d = crowding_distance(&m.iter().map(|x| &x.1).collect::<Vec<_>>());
        let want = (0..4)
            .filter(|&i| d[i].is_finite())
            .min_by(|&a, &b| d[a].total_cmp(&d[b]).then(b.cmp(&a)))
            .unwrap();
        assert_eq!(nsga2_death_select(&m), want);
    }
}
