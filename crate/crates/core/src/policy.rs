//! Deterministic state→action policies.
//!
//! A policy is a standalone map usable outside any learner: the attack
//! evaluates its target policy online at every step, and the metrics layer
//! evaluates snapshots on fresh episodes.

use serde::{Deserialize, Serialize};

use crate::net::MlpNet;
use crate::space::{Action, ActionSpace, State};

/// Maps raw state feature vectors to table indices for tabular policies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum StateIndexer {
    /// Grid cell `[x, y]` -> `y * width + x`.
    Grid { width: usize, height: usize },
    /// First feature is already the state index.
    Scalar { count: usize },
}

impl StateIndexer {
    pub fn index(&self, s: &State) -> usize {
        match self {
            StateIndexer::Grid { width, .. } => {
                let x = s[0].round() as usize;
                let y = s[1].round() as usize;
                y * width + x
            }
            StateIndexer::Scalar { .. } => s[0].round() as usize,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            StateIndexer::Grid { width, height } => width * height,
            StateIndexer::Scalar { count } => *count,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// How a network's outputs become an action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum NetPolicyKind {
    /// Outputs are per-action scores; act with the argmax, ties broken by
    /// the lowest action index.
    DiscreteArgmax,
    /// Dueling head layout `[value, adv_0, ..]`: argmax over the advantage
    /// outputs, which equals the argmax of the combined Q-values.
    DuelingArgmax,
    /// Outputs are squashed through tanh and rescaled into the box.
    ContinuousTanh { lower: Vec<f64>, upper: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PolicyRepr {
    Tabular {
        table: Vec<usize>,
        indexer: StateIndexer,
    },
    Network {
        net: MlpNet,
        kind: NetPolicyKind,
    },
    Constant {
        action: Action,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Policy {
    pub repr: PolicyRepr,
    pub action_space: ActionSpace,
}

/// Argmax with lowest-index tie-breaking.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

pub fn tanh_scale(raw: &[f64], lower: &[f64], upper: &[f64]) -> Vec<f64> {
    raw.iter()
        .zip(lower.iter().zip(upper))
        .map(|(x, (lo, hi))| lo + (x.tanh() + 1.0) * 0.5 * (hi - lo))
        .collect()
}

impl Policy {
    pub fn tabular(table: Vec<usize>, indexer: StateIndexer, action_space: ActionSpace) -> Self {
        Policy {
            repr: PolicyRepr::Tabular { table, indexer },
            action_space,
        }
    }

    pub fn network(net: MlpNet, kind: NetPolicyKind, action_space: ActionSpace) -> Self {
        Policy {
            repr: PolicyRepr::Network { net, kind },
            action_space,
        }
    }

    pub fn constant(action: Action, action_space: ActionSpace) -> Self {
        Policy {
            repr: PolicyRepr::Constant { action },
            action_space,
        }
    }

    /// The action this policy takes in state `s`; always inside the space.
    pub fn act(&self, s: &State) -> Action {
        let action = match &self.repr {
            PolicyRepr::Tabular { table, indexer } => Action::Discrete(table[indexer.index(s)]),
            PolicyRepr::Network { net, kind } => {
                let out = net.forward(s);
                match kind {
                    NetPolicyKind::DiscreteArgmax => Action::Discrete(argmax(&out)),
                    NetPolicyKind::DuelingArgmax => Action::Discrete(argmax(&out[1..])),
                    NetPolicyKind::ContinuousTanh { lower, upper } => {
                        Action::Continuous(tanh_scale(&out, lower, upper))
                    }
                }
            }
            PolicyRepr::Constant { action } => action.clone(),
        };
        debug_assert!(self.action_space.contains(&action));
        action
    }
}
