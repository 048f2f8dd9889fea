//! State and action spaces.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Environment state as a flat feature vector of fixed dimension.
pub type State = Vec<f64>;

/// An action: an index into a discrete space or a point in a box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Action {
    Discrete(usize),
    Continuous(Vec<f64>),
}

impl Action {
    pub fn as_discrete(&self) -> Option<usize> {
        match self {
            Action::Discrete(i) => Some(*i),
            Action::Continuous(_) => None,
        }
    }

    pub fn as_continuous(&self) -> Option<&[f64]> {
        match self {
            Action::Discrete(_) => None,
            Action::Continuous(v) => Some(v),
        }
    }

    /// Flattened numeric view, used by log writers.
    pub fn components(&self) -> Vec<f64> {
        match self {
            Action::Discrete(i) => vec![*i as f64],
            Action::Continuous(v) => v.clone(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpaceError {
    #[error("discrete action space needs at least 2 actions, got {0}")]
    TooFewActions(usize),
    #[error("continuous action space needs dimension >= 1")]
    EmptyBox,
    #[error("box bound {index} is invalid: lower {lower} !< upper {upper}")]
    BadBound { index: usize, lower: f64, upper: f64 },
    #[error("bound arrays differ in length: {lower} vs {upper}")]
    MismatchedBounds { lower: usize, upper: usize },
}

/// A discrete action set or an axis-aligned continuous box.
///
/// Continuous spaces carry their diameter `L`, the largest Euclidean
/// distance between any two actions in the box, which normalizes action
/// distances into `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ActionSpace {
    Discrete {
        count: usize,
    },
    Continuous {
        lower: Vec<f64>,
        upper: Vec<f64>,
        diameter: f64,
    },
}

impl ActionSpace {
    pub fn discrete(count: usize) -> Result<Self, SpaceError> {
        if count < 2 {
            return Err(SpaceError::TooFewActions(count));
        }
        Ok(ActionSpace::Discrete { count })
    }

    /// Builds a box space; the diameter is the corner-to-corner distance,
    /// which is the maximizing pair for an axis-aligned box.
    pub fn continuous(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, SpaceError> {
        if lower.len() != upper.len() {
            return Err(SpaceError::MismatchedBounds {
                lower: lower.len(),
                upper: upper.len(),
            });
        }
        if lower.is_empty() {
            return Err(SpaceError::EmptyBox);
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(SpaceError::BadBound {
                    index: i,
                    lower: *lo,
                    upper: *hi,
                });
            }
        }
        let diameter = lower
            .iter()
            .zip(&upper)
            .map(|(lo, hi)| (hi - lo) * (hi - lo))
            .sum::<f64>()
            .sqrt();
        Ok(ActionSpace::Continuous {
            lower,
            upper,
            diameter,
        })
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, ActionSpace::Discrete { .. })
    }

    /// Number of actions (discrete) or dimensions (continuous).
    pub fn size(&self) -> usize {
        match self {
            ActionSpace::Discrete { count } => *count,
            ActionSpace::Continuous { lower, .. } => lower.len(),
        }
    }

    /// Diameter `L` of a continuous space; 1 for discrete spaces where the
    /// indicator distance is already normalized.
    pub fn diameter(&self) -> f64 {
        match self {
            ActionSpace::Discrete { .. } => 1.0,
            ActionSpace::Continuous { diameter, .. } => *diameter,
        }
    }

    /// Whether the action is a member of this space.
    pub fn contains(&self, action: &Action) -> bool {
        match (self, action) {
            (ActionSpace::Discrete { count }, Action::Discrete(i)) => i < count,
            (ActionSpace::Continuous { lower, upper, .. }, Action::Continuous(v)) => {
                v.len() == lower.len()
                    && v.iter()
                        .zip(lower.iter().zip(upper))
                        .all(|(x, (lo, hi))| x.is_finite() && *x >= *lo && *x <= *hi)
            }
            _ => false,
        }
    }

    /// Clips a continuous action into the box; discrete actions pass through.
    pub fn clip(&self, action: Action) -> Action {
        match (self, action) {
            (ActionSpace::Continuous { lower, upper, .. }, Action::Continuous(v)) => {
                Action::Continuous(
                    v.into_iter()
                        .zip(lower.iter().zip(upper))
                        .map(|(x, (lo, hi))| x.clamp(*lo, *hi))
                        .collect(),
                )
            }
            (_, a) => a,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn discrete_needs_two_actions() {
        assert_eq!(ActionSpace::discrete(1), Err(SpaceError::TooFewActions(1)));
        assert!(ActionSpace::discrete(2).is_ok());
    }

    #[test]
    fn box_diameter_is_corner_to_corner() {
        let space = ActionSpace::continuous(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        assert!((space.diameter() - 8.0_f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn degenerate_box_rejected() {
        let err = ActionSpace::continuous(vec![0.0], vec![0.0]).unwrap_err();
        assert!(matches!(err, SpaceError::BadBound { .. }));
    }

    #[test]
    fn clip_clamps_into_box() {
        let space = ActionSpace::continuous(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        let clipped = space.clip(Action::Continuous(vec![3.0, -0.5]));
        assert_eq!(clipped, Action::Continuous(vec![1.0, -0.5]));
        assert!(space.contains(&clipped));
    }

    #[test]
    fn contains_checks_kind_and_range() {
        let d = ActionSpace::discrete(3).unwrap();
        assert!(d.contains(&Action::Discrete(2)));
        assert!(!d.contains(&Action::Discrete(3)));
        assert!(!d.contains(&Action::Continuous(vec![0.0])));
    }
}
