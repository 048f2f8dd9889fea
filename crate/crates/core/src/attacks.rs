//! The reward-perturbation attack family and its budget governance.
//!
//! Attacks are black-box: a perturbation depends only on the observed
//! `(s, a)` pair, the stored target policy, and the attack's own budget
//! ledger — never on the environment's reward/transition functions or any
//! learner state. The next state is passed in (the adversary observes the
//! full tuple) but all implemented attacks ignore it.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distance::{action_distance, raw_l2, DistanceError};
use crate::mdp::Mdp;
use crate::policy::Policy;
use crate::space::{Action, ActionSpace, State};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttackKind {
    None,
    Adaptive,
    Greedy,
    Neighborhood,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AttackError {
    #[error("greedy attack is defined only for discrete action spaces")]
    GreedyNeedsDiscrete,
    #[error("neighborhood attack is defined only for continuous action spaces")]
    NeighborhoodNeedsContinuous,
    #[error("neighborhood attack requires a radius")]
    MissingRadius,
    #[error("radius only applies to the neighborhood attack")]
    UnexpectedRadius,
    #[error("per-step magnitude {delta} exceeds the per-step cap {cap_b}")]
    DeltaExceedsCapB { delta: f64, cap_b: f64 },
    #[error("delta must be a finite nonnegative number, got {0}")]
    BadDelta(f64),
    #[error("target policy action space does not match the environment")]
    TargetSpaceMismatch,
    #[error(transparent)]
    Distance(#[from] DistanceError),
}

/// Attack parameters: kind, per-step magnitude, optional neighborhood
/// radius (raw action units), optional per-step and total caps, and the
/// target policy the attack steers toward.
#[derive(Debug, Clone)]
pub struct AttackConfig {
    pub kind: AttackKind,
    pub delta: f64,
    pub radius: Option<f64>,
    pub cap_b: Option<f64>,
    pub cap_c: Option<f64>,
    pub target: Policy,
}

impl AttackConfig {
    pub fn new(kind: AttackKind, delta: f64, target: Policy) -> Self {
        AttackConfig {
            kind,
            delta,
            radius: None,
            cap_b: None,
            cap_c: None,
            target,
        }
    }

    pub fn with_radius(mut self, radius: f64) -> Self {
        self.radius = Some(radius);
        self
    }

    pub fn with_caps(mut self, cap_b: Option<f64>, cap_c: Option<f64>) -> Self {
        self.cap_b = cap_b;
        self.cap_c = cap_c;
        self
    }

    pub fn validate(&self, space: &ActionSpace) -> Result<(), AttackError> {
        if !self.delta.is_finite() || self.delta < 0.0 {
            return Err(AttackError::BadDelta(self.delta));
        }
        match self.kind {
            AttackKind::Greedy if !space.is_discrete() => {
                return Err(AttackError::GreedyNeedsDiscrete)
            }
            AttackKind::Neighborhood if space.is_discrete() => {
                return Err(AttackError::NeighborhoodNeedsContinuous)
            }
            AttackKind::Neighborhood if self.radius.is_none() => {
                return Err(AttackError::MissingRadius)
            }
            _ => {}
        }
        if self.kind != AttackKind::Neighborhood && self.radius.is_some() {
            return Err(AttackError::UnexpectedRadius);
        }
        if let Some(cap_b) = self.cap_b {
            if self.delta > cap_b {
                return Err(AttackError::DeltaExceedsCapB {
                    delta: self.delta,
                    cap_b,
                });
            }
        }
        if &self.target.action_space != space {
            return Err(AttackError::TargetSpaceMismatch);
        }
        Ok(())
    }
}

/// Running spend account for one attack instance.
///
/// `spent` is the cumulative `Σ|Δ^t|`, `max_step` the largest single
/// `|Δ^t|`. Once `exhausted` is set it stays set and every later
/// perturbation is zero.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BudgetLedger {
    pub spent: f64,
    pub max_step: f64,
    pub exhausted: bool,
    pub exhausted_at: Option<usize>,
    pub steps: usize,
}

impl BudgetLedger {
    /// Applies the total-spend cap to a proposed perturbation.
    ///
    /// Spending is all-or-nothing: a perturbation that would push `spent`
    /// past `cap_c` is dropped entirely and the ledger locks out all
    /// further spending.
    pub fn govern(&mut self, cap_c: Option<f64>, raw_delta: f64) -> f64 {
        let t = self.steps;
        self.steps += 1;
        if self.exhausted {
            return 0.0;
        }
        if let Some(cap) = cap_c {
            if self.spent + raw_delta.abs() > cap {
                self.exhausted = true;
                self.exhausted_at = Some(t);
                return 0.0;
            }
        }
        self.spent += raw_delta.abs();
        self.max_step = self.max_step.max(raw_delta.abs());
        raw_delta
    }
}

/// What the attack did at one step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepPerturbation {
    /// Signed perturbation added to the reward (post budget governance).
    pub delta: f64,
    /// The target policy's action at this state.
    pub target_action: Action,
    /// Normalized distance between the agent's action and the target action.
    pub distance: f64,
}

/// A configured attack instance with its budget ledger. One instance per
/// training run.
#[derive(Debug, Clone)]
pub struct Attack {
    cfg: AttackConfig,
    space: ActionSpace,
    ledger: BudgetLedger,
}

impl Attack {
    pub fn new(cfg: AttackConfig, space: &ActionSpace) -> Result<Self, AttackError> {
        cfg.validate(space)?;
        Ok(Attack {
            cfg,
            space: space.clone(),
            ledger: BudgetLedger::default(),
        })
    }

    pub fn config(&self) -> &AttackConfig {
        &self.cfg
    }

    pub fn target(&self) -> &Policy {
        &self.cfg.target
    }

    pub fn ledger(&self) -> &BudgetLedger {
        &self.ledger
    }

    /// Computes the perturbation for one observed step. `_s_next` is
    /// available to the adversary but unused by all implemented attacks.
    pub fn perturb(
        &mut self,
        s: &State,
        a: &Action,
        _r_true: f64,
        _s_next: &State,
    ) -> Result<StepPerturbation, AttackError> {
        let target_action = self.cfg.target.act(s);
        let distance = action_distance(&self.space, a, &target_action)?;
        let raw = match self.cfg.kind {
            AttackKind::None => 0.0,
            AttackKind::Adaptive => -self.cfg.delta * distance,
            AttackKind::Greedy => {
                if distance == 0.0 {
                    self.cfg.delta
                } else {
                    -self.cfg.delta
                }
            }
            AttackKind::Neighborhood => {
                let radius = self.cfg.radius.expect("validated at construction");
                let raw_dist = raw_l2(
                    a.as_continuous().expect("validated: continuous space"),
                    target_action
                        .as_continuous()
                        .expect("target in same space"),
                );
                if raw_dist > radius {
                    -self.cfg.delta
                } else {
                    0.0
                }
            }
        };
        let delta = self.ledger.govern(self.cfg.cap_c, raw);
        Ok(StepPerturbation {
            delta,
            target_action,
            distance,
        })
    }

    /// The static perturbation `R̂(s, a) − R(s, a)` this attack's
    /// adversarial reward function applies, ignoring budgets. Used by the
    /// brute-force oracle; the online path never reads the true reward.
    pub fn static_delta(
        cfg: &AttackConfig,
        space: &ActionSpace,
        s: &State,
        a: &Action,
    ) -> Result<f64, AttackError> {
        let target_action = cfg.target.act(s);
        let distance = action_distance(space, a, &target_action)?;
        Ok(match cfg.kind {
            AttackKind::None => 0.0,
            AttackKind::Adaptive => -cfg.delta * distance,
            AttackKind::Greedy => {
                if distance == 0.0 {
                    cfg.delta
                } else {
                    -cfg.delta
                }
            }
            AttackKind::Neighborhood => {
                let radius = cfg.radius.ok_or(AttackError::MissingRadius)?;
                let raw_dist = raw_l2(
                    a.as_continuous().ok_or(AttackError::NeighborhoodNeedsContinuous)?,
                    target_action
                        .as_continuous()
                        .ok_or(AttackError::NeighborhoodNeedsContinuous)?,
                );
                if raw_dist > radius {
                    -cfg.delta
                } else {
                    0.0
                }
            }
        })
    }
}

/// The adversarial reward `R̂(s, a) = R(s, a) + perturbation` of the static
/// environment this attack embeds the learner in.
pub fn adversarial_reward<M: Mdp + ?Sized>(
    cfg: &AttackConfig,
    mdp: &M,
    s: &State,
    a: &Action,
) -> Result<f64, AttackError> {
    Ok(mdp.reward(s, a) + Attack::static_delta(cfg, mdp.action_space(), s, a)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::GridWorld;
    use crate::policy::Policy;

    fn discrete_space() -> ActionSpace {
        ActionSpace::discrete(4).unwrap()
    }

    fn box_space() -> ActionSpace {
        ActionSpace::continuous(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap()
    }

    fn target_d(i: usize, space: &ActionSpace) -> Policy {
        Policy::constant(Action::Discrete(i), space.clone())
    }

    fn target_c(v: Vec<f64>, space: &ActionSpace) -> Policy {
        Policy::constant(Action::Continuous(v), space.clone())
    }

    #[test]
    fn adaptive_scales_with_distance() {
        let space = discrete_space();
        let mut atk = Attack::new(
            AttackConfig::new(AttackKind::Adaptive, 5.0, target_d(1, &space)),
            &space,
        )
        .unwrap();
        let s = vec![0.0, 0.0];
        let out = atk.perturb(&s, &Action::Discrete(0), -1.0, &s).unwrap();
        assert_eq!(out.delta, -5.0);
        let out = atk.perturb(&s, &Action::Discrete(1), -1.0, &s).unwrap();
        assert_eq!(out.delta, 0.0);

        let space = box_space();
        let mut atk = Attack::new(
            AttackConfig::new(AttackKind::Adaptive, 50.0, target_c(vec![0.0, 0.0], &space)),
            &space,
        )
        .unwrap();
        // distance 0.3 of the diameter: |a - target| = 0.3 * 2*sqrt(2)
        let offset = 0.3 * space.diameter();
        let out = atk
            .perturb(&s, &Action::Continuous(vec![offset, 0.0]), 0.0, &s)
            .unwrap();
        assert!((out.delta - (-15.0)).abs() < 1e-12);
    }

    #[test]
    fn greedy_rewards_target_and_penalizes_rest() {
        let space = discrete_space();
        let mut atk = Attack::new(
            AttackConfig::new(AttackKind::Greedy, 5.0, target_d(2, &space)),
            &space,
        )
        .unwrap();
        let s = vec![0.0, 0.0];
        assert_eq!(atk.perturb(&s, &Action::Discrete(2), -1.0, &s).unwrap().delta, 5.0);
        assert_eq!(atk.perturb(&s, &Action::Discrete(0), -1.0, &s).unwrap().delta, -5.0);

        let mut zero = Attack::new(
            AttackConfig::new(AttackKind::Greedy, 0.0, target_d(2, &space)),
            &space,
        )
        .unwrap();
        assert_eq!(zero.perturb(&s, &Action::Discrete(0), -1.0, &s).unwrap().delta, 0.0);
    }

    #[test]
    fn greedy_rejected_on_continuous_space() {
        let space = box_space();
        let err = Attack::new(
            AttackConfig::new(AttackKind::Greedy, 5.0, target_c(vec![0.0, 0.0], &space)),
            &space,
        )
        .unwrap_err();
        assert_eq!(err, AttackError::GreedyNeedsDiscrete);
    }

    #[test]
    fn neighborhood_is_a_step_function() {
        let space = box_space();
        let mut atk = Attack::new(
            AttackConfig::new(AttackKind::Neighborhood, 50.0, target_c(vec![0.0, 0.0], &space))
                .with_radius(0.5),
            &space,
        )
        .unwrap();
        let s = vec![0.0, 0.0];
        let inside = atk.perturb(&s, &Action::Continuous(vec![0.4, 0.0]), 0.0, &s).unwrap();
        assert_eq!(inside.delta, 0.0);
        let outside = atk.perturb(&s, &Action::Continuous(vec![0.6, 0.0]), 0.0, &s).unwrap();
        assert_eq!(outside.delta, -50.0);
        let exact = atk.perturb(&s, &Action::Continuous(vec![0.0, 0.0]), 0.0, &s).unwrap();
        assert_eq!(exact.delta, 0.0);
    }

    #[test]
    fn neighborhood_rejected_on_discrete_space() {
        let space = discrete_space();
        let err = Attack::new(
            AttackConfig::new(AttackKind::Neighborhood, 5.0, target_d(0, &space)).with_radius(0.5),
            &space,
        )
        .unwrap_err();
        assert_eq!(err, AttackError::NeighborhoodNeedsContinuous);
    }

    #[test]
    fn govern_spends_within_budget() {
        let mut ledger = BudgetLedger::default();
        assert_eq!(ledger.govern(Some(10.0), -5.0), -5.0);
        assert_eq!(ledger.spent, 5.0);
        assert_eq!(ledger.max_step, 5.0);
        assert!(!ledger.exhausted);

        ledger.spent = 8.0;
        assert_eq!(ledger.govern(Some(10.0), -5.0), 0.0);
        assert!(ledger.exhausted);
        assert_eq!(ledger.spent, 8.0, "no partial spend");
        assert_eq!(ledger.exhausted_at, Some(1));

        assert_eq!(ledger.govern(Some(10.0), -5.0), 0.0, "permanent stop");
        assert_eq!(ledger.govern(None, -5.0), 0.0, "stays stopped even uncapped");
    }

    #[test]
    fn delta_above_cap_b_is_rejected() {
        let space = discrete_space();
        let err = Attack::new(
            AttackConfig::new(AttackKind::Adaptive, 5.0, target_d(0, &space))
                .with_caps(Some(3.0), None),
            &space,
        )
        .unwrap_err();
        assert!(matches!(err, AttackError::DeltaExceedsCapB { .. }));
    }

    #[test]
    fn adversarial_reward_offsets_true_reward() {
        let env = GridWorld::new(3, 3, (0, 0), (2, 2), -1.0, 10.0, 0.0, 20).unwrap();
        let s = vec![0.0, 0.0];
        let space = env.action_space().clone();

        let adaptive = AttackConfig::new(AttackKind::Adaptive, 5.0, target_d(1, &space));
        // non-target discrete action: R - 5
        let r = adversarial_reward(&adaptive, &env, &s, &Action::Discrete(0)).unwrap();
        assert_eq!(r, -6.0);

        let greedy = AttackConfig::new(AttackKind::Greedy, 5.0, target_d(1, &space));
        let r = adversarial_reward(&greedy, &env, &s, &Action::Discrete(1)).unwrap();
        assert_eq!(r, 4.0);

        let none = AttackConfig::new(AttackKind::None, 0.0, target_d(1, &space));
        let r = adversarial_reward(&none, &env, &s, &Action::Discrete(0)).unwrap();
        assert_eq!(r, env.reward(&s, &Action::Discrete(0)));
    }

    #[test]
    fn uncapped_adaptive_accounting_identity() {
        // spent == delta * sum of distances; max_step == delta iff some step
        // had distance 1.
        let space = discrete_space();
        let mut atk = Attack::new(
            AttackConfig::new(AttackKind::Adaptive, 5.0, target_d(1, &space)),
            &space,
        )
        .unwrap();
        let s = vec![0.0, 0.0];
        let plays = [0, 1, 3, 1, 2];
        let mut dist_sum = 0.0;
        for p in plays {
            let out = atk.perturb(&s, &Action::Discrete(p), -1.0, &s).unwrap();
            dist_sum += out.distance;
        }
        assert!((atk.ledger().spent - 5.0 * dist_sum).abs() < 1e-12);
        assert_eq!(atk.ledger().max_step, 5.0);
    }

    #[test]
    fn uncapped_greedy_spends_delta_every_step() {
        let space = discrete_space();
        let mut atk = Attack::new(
            AttackConfig::new(AttackKind::Greedy, 5.0, target_d(1, &space)),
            &space,
        )
        .unwrap();
        let s = vec![0.0, 0.0];
        for t in 0..100 {
            let _ = atk.perturb(&s, &Action::Discrete(t % 4), -1.0, &s).unwrap();
        }
        assert_eq!(atk.ledger().spent, 5.0 * 100.0);
    }
}
