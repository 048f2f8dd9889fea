//! Learning algorithms: tabular Q-learning, a double/dueling DQN variant,
//! and a deterministic actor-critic for continuous actions.
//!
//! Learners only ever see [`ObservedTransition`] values — observed rewards,
//! never true rewards or perturbations.

mod ddpg;
mod dqn;
mod replay;
mod tabular;

pub use ddpg::{DdpgConfig, DdpgLearner};
pub use dqn::{DqnConfig, DqnLearner, QNetwork};
pub use replay::ReplayBuffer;
pub use tabular::{TabularQ, TabularQConfig};

use crate::mdp::ObservedTransition;
use crate::policy::Policy;
use crate::rng::RunRng;
use crate::space::{Action, State};

pub trait Learner: Send {
    /// Chooses the next action; exploration is drawn from the given stream.
    fn select_action(&mut self, s: &State, step: usize, rng: &mut RunRng) -> Action;

    /// Consumes one observed transition and updates internal state.
    fn observe(&mut self, transition: &ObservedTransition, rng: &mut RunRng);

    /// Freezes the current greedy/actor behavior into a standalone policy,
    /// independent of further training.
    fn snapshot_policy(&self) -> Policy;
}

/// Linear schedule from `start` to `end` over `decay_steps`, then flat.
#[derive(Debug, Clone, Copy)]
pub struct LinearSchedule {
    pub start: f64,
    pub end: f64,
    pub decay_steps: usize,
}

impl LinearSchedule {
    pub fn value(&self, step: usize) -> f64 {
        if self.decay_steps == 0 || step >= self.decay_steps {
            return self.end;
        }
        let frac = step as f64 / self.decay_steps as f64;
        self.start + (self.end - self.start) * frac
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_schedule_endpoints() {
        let s = LinearSchedule {
            start: 1.0,
            end: 0.05,
            decay_steps: 100,
        };
        assert_eq!(s.value(0), 1.0);
        assert!((s.value(50) - 0.525).abs() < 1e-12);
        assert_eq!(s.value(100), 0.05);
        assert_eq!(s.value(1000), 0.05);
    }
}
