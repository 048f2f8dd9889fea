//! Tabular Q-learning with epsilon-greedy exploration.

use rand::Rng;

use super::{Learner, LinearSchedule};
use crate::mdp::ObservedTransition;
use crate::policy::{argmax, Policy, StateIndexer};
use crate::rng::RunRng;
use crate::space::{Action, ActionSpace, State};

#[derive(Debug, Clone)]
pub struct TabularQConfig {
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub epsilon_decay_steps: usize,
}

impl TabularQConfig {
    /// Conventional defaults; the exploration decay span still has to be
    /// chosen relative to the run length.
    pub fn with_decay(epsilon_decay_steps: usize) -> Self {
        TabularQConfig {
            alpha: 0.1,
            gamma: 0.99,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay_steps,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TabularQ {
    q: Vec<Vec<f64>>,
    indexer: StateIndexer,
    num_actions: usize,
    space: ActionSpace,
    cfg: TabularQConfig,
    epsilon: LinearSchedule,
}

impl TabularQ {
    pub fn new(indexer: StateIndexer, space: ActionSpace, cfg: TabularQConfig) -> Self {
        let num_actions = space.size();
        let epsilon = LinearSchedule {
            start: cfg.epsilon_start,
            end: cfg.epsilon_end,
            decay_steps: cfg.epsilon_decay_steps,
        };
        TabularQ {
            q: vec![vec![0.0; num_actions]; indexer.len()],
            indexer,
            num_actions,
            space,
            cfg,
            epsilon,
        }
    }

    pub fn q_values(&self, s: &State) -> &[f64] {
        &self.q[self.indexer.index(s)]
    }
}

impl Learner for TabularQ {
    fn select_action(&mut self, s: &State, step: usize, rng: &mut RunRng) -> Action {
        let eps = self.epsilon.value(step);
        if rng.gen::<f64>() < eps {
            Action::Discrete(rng.gen_range(0..self.num_actions))
        } else {
            Action::Discrete(argmax(&self.q[self.indexer.index(s)]))
        }
    }

    fn observe(&mut self, tr: &ObservedTransition, _rng: &mut RunRng) {
        let s = self.indexer.index(&tr.s);
        let a = tr.a.as_discrete().expect("tabular learner is discrete");
        let bootstrap = if tr.done {
            0.0
        } else {
            let next = &self.q[self.indexer.index(&tr.s_next)];
            next.iter().fold(f64::NEG_INFINITY, |m, x| m.max(*x))
        };
        let target = tr.r_observed + self.cfg.gamma * bootstrap;
        self.q[s][a] += self.cfg.alpha * (target - self.q[s][a]);
    }

    fn snapshot_policy(&self) -> Policy {
        let table = self.q.iter().map(|row| argmax(row)).collect();
        Policy::tabular(table, self.indexer.clone(), self.space.clone())
    }
}
