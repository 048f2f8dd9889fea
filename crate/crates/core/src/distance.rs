//! Normalized distance between two actions of the same space.
//!
//! Discrete: 1 if the actions differ, 0 otherwise. Continuous: Euclidean
//! distance divided by the space diameter `L`, so the result is always in
//! `[0, 1]`.

use thiserror::Error;

use crate::space::{Action, ActionSpace};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistanceError {
    #[error("action does not belong to the space: {0:?}")]
    OutsideSpace(Action),
    #[error("actions have mismatched dimensions: {0} vs {1}")]
    DimensionMismatch(usize, usize),
}

/// Normalized distance in `[0, 1]` between two actions.
pub fn action_distance(
    space: &ActionSpace,
    a1: &Action,
    a2: &Action,
) -> Result<f64, DistanceError> {
    if !space.contains(a1) {
        return Err(DistanceError::OutsideSpace(a1.clone()));
    }
    if !space.contains(a2) {
        return Err(DistanceError::OutsideSpace(a2.clone()));
    }
    match (a1, a2) {
        (Action::Discrete(i), Action::Discrete(j)) => Ok(if i == j { 0.0 } else { 1.0 }),
        (Action::Continuous(u), Action::Continuous(v)) => {
            if u.len() != v.len() {
                return Err(DistanceError::DimensionMismatch(u.len(), v.len()));
            }
            Ok(raw_l2(u, v) / space.diameter())
        }
        // contains() already rejects kind mismatches
        _ => unreachable!("space membership implies matching action kinds"),
    }
}

/// Un-normalized Euclidean distance between two continuous actions.
pub fn raw_l2(u: &[f64], v: &[f64]) -> f64 {
    u.iter()
        .zip(v)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Independent diameter oracle: enumerate all corner pairs of the box.
    fn diameter_by_corner_enumeration(lower: &[f64], upper: &[f64]) -> f64 {
        let d = lower.len();
        let corner = |mask: usize| -> Vec<f64> {
            (0..d)
                .map(|i| if mask >> i & 1 == 1 { upper[i] } else { lower[i] })
                .collect()
        };
        let mut best = 0.0_f64;
        for m1 in 0..1usize << d {
            for m2 in 0..1usize << d {
                best = best.max(raw_l2(&corner(m1), &corner(m2)));
            }
        }
        best
    }

    #[test]
    fn discrete_identity_and_indicator() {
        let space = ActionSpace::discrete(3).unwrap();
        assert_eq!(
            action_distance(&space, &Action::Discrete(1), &Action::Discrete(1)).unwrap(),
            0.0
        );
        assert_eq!(
            action_distance(&space, &Action::Discrete(0), &Action::Discrete(2)).unwrap(),
            1.0
        );
    }

    #[test]
    fn continuous_normalizes_by_diameter() {
        // Box [-1,1]^2: L found by exhaustive corner enumeration, distance by
        // direct norm computation.
        let lower = vec![-1.0, -1.0];
        let upper = vec![1.0, 1.0];
        let oracle_l = diameter_by_corner_enumeration(&lower, &upper);
        let space = ActionSpace::continuous(lower, upper).unwrap();
        assert!((space.diameter() - oracle_l).abs() < 1e-15);

        let a1 = Action::Continuous(vec![1.0, 0.0]);
        let a2 = Action::Continuous(vec![-1.0, 0.0]);
        let d = action_distance(&space, &a1, &a2).unwrap();
        assert!((d - 2.0 / oracle_l).abs() < 1e-15);
        assert!((d - 0.70710678118654746).abs() < 1e-12);
    }

    #[test]
    fn opposite_corners_hit_one() {
        let space = ActionSpace::continuous(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        let d = action_distance(
            &space,
            &Action::Continuous(vec![-1.0, -1.0]),
            &Action::Continuous(vec![1.0, 1.0]),
        )
        .unwrap();
        assert!((d - 1.0).abs() < 1e-15);
    }

    #[test]
    fn outside_action_is_rejected() {
        let space = ActionSpace::continuous(vec![0.0], vec![1.0]).unwrap();
        let err =
            action_distance(&space, &Action::Continuous(vec![2.0]), &Action::Continuous(vec![0.5]));
        assert!(matches!(err, Err(DistanceError::OutsideSpace(_))));
    }

    fn arb_box() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (1usize..=4).prop_flat_map(|d| {
            (
                prop::collection::vec(-10.0f64..10.0, d),
                prop::collection::vec(0.1f64..10.0, d),
            )
                .prop_map(|(lo, span)| {
                    let hi: Vec<f64> = lo.iter().zip(&span).map(|(l, s)| l + s).collect();
                    (lo, hi)
                })
        })
    }

    proptest! {
        #[test]
        fn continuous_range_symmetry_identity((lo, hi) in arb_box(), t1 in 0.0f64..1.0, t2 in 0.0f64..1.0) {
            let space = ActionSpace::continuous(lo.clone(), hi.clone()).unwrap();
            let a1: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| l + t1 * (h - l)).collect();
            let a2: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| l + t2 * (h - l)).collect();
            let a1 = Action::Continuous(a1);
            let a2 = Action::Continuous(a2);
            let d12 = action_distance(&space, &a1, &a2).unwrap();
            let d21 = action_distance(&space, &a2, &a1).unwrap();
            prop_assert!((0.0..=1.0).contains(&d12));
            prop_assert_eq!(d12, d21);
            prop_assert_eq!(action_distance(&space, &a1, &a1).unwrap(), 0.0);
        }

        #[test]
        fn unnormalized_triangle_inequality(u in prop::collection::vec(-5.0f64..5.0, 3),
                                            v in prop::collection::vec(-5.0f64..5.0, 3),
                                            w in prop::collection::vec(-5.0f64..5.0, 3)) {
            prop_assert!(raw_l2(&u, &w) <= raw_l2(&u, &v) + raw_l2(&v, &w) + 1e-12);
        }
    }
}
