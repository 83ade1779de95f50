//! Raw objective values with per-entry optimization directions.
//!
//! Values are never sign-flipped. Every comparison goes through the
//! direction-aware helpers here.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Minimize,
    Maximize,
}

impl Direction {
    /// `Less` when `a` is better than `b`.
    #[inline]
    pub fn compare(self, a: f64, b: f64) -> Ordering {
        let ord = a.total_cmp(&b);
        match self {
            Direction::Minimize => ord,
            Direction::Maximize => ord.reverse(),
        }
    }

    #[inline]
    pub fn is_better(self, a: f64, b: f64) -> bool {
        self.compare(a, b) == Ordering::Less
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ObjectiveError {
    #[error("objective vector is empty")]
    Empty,
    #[error("objective {index} is not finite ({value})")]
    NonFinite { index: usize, value: f64 },
    #[error("{values} values but {directions} directions")]
    LengthMismatch { values: usize, directions: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawObjectives")]
pub struct ObjectiveVector {
    values: Vec<f64>,
    directions: Vec<Direction>,
}

#[derive(Deserialize)]
struct RawObjectives {
    values: Vec<f64>,
    directions: Vec<Direction>,
}

impl TryFrom<RawObjectives> for ObjectiveVector {
    type Error = ObjectiveError;

    fn try_from(raw: RawObjectives) -> Result<Self, Self::Error> {
        ObjectiveVector::new(raw.values, raw.directions)
    }
}

impl ObjectiveVector {
    pub fn new(values: Vec<f64>, directions: Vec<Direction>) -> Result<Self, ObjectiveError> {
        if values.is_empty() {
            return Err(ObjectiveError::Empty);
        }
        if values.len() != directions.len() {
            return Err(ObjectiveError::LengthMismatch {
                values: values.len(),
                directions: directions.len(),
            });
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(ObjectiveError::NonFinite { index, value });
        }
        Ok(Self { values, directions })
    }

    pub fn single(value: f64, direction: Direction) -> Result<Self, ObjectiveError> {
        Self::new(vec![value], vec![direction])
    }

    pub fn minimize(values: Vec<f64>) -> Result<Self, ObjectiveError> {
        let n = values.len();
        Self::new(values, vec![Direction::Minimize; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn directions(&self) -> &[Direction] {
        &self.directions
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn direction(&self, i: usize) -> Direction {
        self.directions[i]
    }

    /// True when `self` is no worse than `other` on every objective and
    /// strictly better on at least one.
    pub fn dominates(&self, other: &ObjectiveVector) -> bool {
        debug_assert_eq!(self.directions, other.directions);
        let mut strictly_better = false;
        for ((&a, &b), &d) in self.values.iter().zip(&other.values).zip(&self.directions) {
            match d.compare(a, b) {
                Ordering::Greater => return false,
                Ordering::Less => strictly_better = true,
                Ordering::Equal => {}
            }
        }
        strictly_better
    }

    /// Lexicographic comparison, `Less` meaning `self` is better.
    ///
    /// For single-objective vectors this is the plain direction-aware order.
    pub fn compare_lex(&self, other: &ObjectiveVector) -> Ordering {
        for ((&a, &b), &d) in self.values.iter().zip(&other.values).zip(&self.directions) {
            match d.compare(a, b) {
                Ordering::Equal => continue,
                ord => return ord,
            }
        }
        Ordering::Equal
    }

    pub fn is_better_than(&self, other: &ObjectiveVector) -> bool {
        self.compare_lex(other) == Ordering::Less
    }

    pub fn is_worse_than(&self, other: &ObjectiveVector) -> bool {
        self.compare_lex(other) == Ordering::Greater
    }

    pub fn same_shape(&self, other: &ObjectiveVector) -> bool {
        self.directions == other.directions
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_vectors() {
        assert_eq!(
            ObjectiveVector::minimize(vec![]),
            Err(ObjectiveError::Empty)
        );
        assert!(matches!(
            ObjectiveVector::minimize(vec![1.0, f64::NAN]),
            Err(ObjectiveError::NonFinite { index: 1, .. })
        ));
        assert!(matches!(
            ObjectiveVector::new(vec![1.0], vec![]),
            Err(ObjectiveError::LengthMismatch { .. })
        ));
        assert!(ObjectiveVector::minimize(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn direction_aware_comparisons() {
        let lo = ObjectiveVector::single(1.0, Direction::Minimize).unwrap();
        let hi = ObjectiveVector::single(2.0, Direction::Minimize).unwrap();
        assert!(lo.is_better_than(&hi));
        let lo = ObjectiveVector::single(1.0, Direction::Maximize).unwrap();
        let hi = ObjectiveVector::single(2.0, Direction::Maximize).unwrap();
        assert!(hi.is_better_than(&lo));
        assert!(hi.dominates(&lo));
        assert!(!lo.dominates(&hi));
        assert!(!lo.dominates(&lo));
    }

    #[test]
    fn mixed_direction_dominance() {
        let d = vec![Direction::Minimize, Direction::Maximize];
        let a = ObjectiveVector::new(vec![1.0, 5.0], d.clone()).unwrap();
        let b = ObjectiveVector::new(vec![2.0, 4.0], d.clone()).unwrap();
        let c = ObjectiveVector::new(vec![0.5, 3.0], d).unwrap();
        assert!(a.dominates(&b));
        assert!(!a.dominates(&c));
        assert!(!c.dominates(&a));
    }

    #[test]
    fn deserialization_validates() {
        let bad = r#"{"values":[],"directions":[]}"#;
        assert!(serde_json::from_str::<ObjectiveVector>(bad).is_err());
        let good = r#"{"values":[1.5],"directions":["maximize"]}"#;
        let v: ObjectiveVector = serde_json::from_str(good).unwrap();
        assert_eq!(v.direction(0), Direction::Maximize);
    }
}
