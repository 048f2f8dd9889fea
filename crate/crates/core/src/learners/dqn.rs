//! DQN variant with independent double-Q and dueling-head flags.
//!
//! One gradient step on a uniformly sampled batch per environment step once
//! warm-up is over; the target network is hard-synced on a fixed period.

use rand::Rng;

use super::{Learner, LinearSchedule, ReplayBuffer};
use crate::mdp::ObservedTransition;
use crate::net::{AdamState, Gradients, MlpNet};
use crate::policy::{argmax, NetPolicyKind, Policy};
use crate::rng::RunRng;
use crate::space::{Action, ActionSpace, State};

#[derive(Debug, Clone)]
pub struct DqnConfig {
    pub hidden: Vec<usize>,
    pub buffer_capacity: usize,
    pub batch_size: usize,
    pub sync_every: usize,
    pub learning_rate: f64,
    pub gamma: f64,
    pub warmup_steps: usize,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub epsilon_decay_steps: usize,
    pub double_q: bool,
    pub dueling: bool,
}

impl DqnConfig {
    pub fn with_decay(epsilon_decay_steps: usize) -> Self {
        DqnConfig {
            hidden: vec![64, 64],
            buffer_capacity: 50_000,
            batch_size: 64,
            sync_every: 1000,
            learning_rate: 1e-3,
            gamma: 0.99,
            warmup_steps: 1000,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay_steps,
            double_q: true,
            dueling: false,
        }
    }
}

/// Q-value head over an MLP. With the dueling flag the raw outputs are
/// `[v, a_0, .., a_{n-1}]` combined as `q_i = v + a_i - mean(a)`; the
/// combiner is linear, so its transpose maps Q-gradients back onto raw
/// outputs exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct QNetwork {
    pub net: MlpNet,
    pub dueling: bool,
    pub num_actions: usize,
}

impl QNetwork {
    pub fn init(
        state_dim: usize,
        num_actions: usize,
        hidden: &[usize],
        dueling: bool,
        rng: &mut RunRng,
    ) -> Self {
        let out = if dueling { num_actions + 1 } else { num_actions };
        let mut sizes = vec![state_dim];
        sizes.extend_from_slice(hidden);
        sizes.push(out);
        QNetwork {
            net: MlpNet::init(&sizes, rng, 1.0).expect("sizes are valid"),
            dueling,
            num_actions,
        }
    }

    pub fn combine(&self, raw: &[f64]) -> Vec<f64> {
        if !self.dueling {
            return raw.to_vec();
        }
        let v = raw[0];
        let adv = &raw[1..];
        let mean = adv.iter().sum::<f64>() / adv.len() as f64;
        adv.iter().map(|a| v + a - mean).collect()
    }

    fn combine_grad(&self, grad_q: &[f64]) -> Vec<f64> {
        if !self.dueling {
            return grad_q.to_vec();
        }
        let total: f64 = grad_q.iter().sum();
        let n = grad_q.len() as f64;
        let mut raw = Vec::with_capacity(grad_q.len() + 1);
        raw.push(total);
        raw.extend(grad_q.iter().map(|g| g - total / n));
        raw
    }

    pub fn q_values(&self, s: &State) -> Vec<f64> {
        self.combine(&self.net.forward(s))
    }

    /// One masked-MSE gradient step worth of gradients for a batch of
    /// `(state, action, td_target)` triples. Loss is averaged over the
    /// batch.
    pub fn td_gradients(&self, batch: &[(&State, usize, f64)]) -> (f64, Gradients) {
        let mut grads = Gradients::zeros(&self.net);
        let n = batch.len().max(1) as f64;
        let mut loss = 0.0;
        for (s, a, target) in batch {
            let cache = self.net.forward_cached(s);
            let q = self.combine(cache.output());
            let err = q[*a] - target;
            loss += err * err / n;
            let mut grad_q = vec![0.0; self.num_actions];
            grad_q[*a] = 2.0 * err / n;
            let grad_raw = self.combine_grad(&grad_q);
            self.net.backward(&cache, &grad_raw, &mut grads);
        }
        (loss, grads)
    }
}

#[derive(Debug, Clone)]
pub struct DqnLearner {
    online: QNetwork,
    target: QNetwork,
    adam: AdamState,
    buffer: ReplayBuffer,
    cfg: DqnConfig,
    space: ActionSpace,
    epsilon: LinearSchedule,
    observed_steps: usize,
}

impl DqnLearner {
    pub fn new(state_dim: usize, space: ActionSpace, cfg: DqnConfig, rng: &mut RunRng) -> Self {
        let num_actions = space.size();
        let online = QNetwork::init(state_dim, num_actions, &cfg.hidden, cfg.dueling, rng);
        let target = online.clone();
        let adam = AdamState::new(&online.net);
        let epsilon = LinearSchedule {
            start: cfg.epsilon_start,
            end: cfg.epsilon_end,
            decay_steps: cfg.epsilon_decay_steps,
        };
        DqnLearner {
            online,
            target,
            adam,
            buffer: ReplayBuffer::new(cfg.buffer_capacity),
            cfg,
            space,
            epsilon,
            observed_steps: 0,
        }
    }

    pub fn online_net(&self) -> &QNetwork {
        &self.online
    }

    fn train_step(&mut self, rng: &mut RunRng) {
        let samples = self.buffer.sample(self.cfg.batch_size, rng);
        let targets: Vec<(ObservedTransition, f64)> = samples
            .into_iter()
            .map(|tr| {
                let bootstrap = if tr.done {
                    0.0
                } else if self.cfg.double_q {
                    let pick = argmax(&self.online.q_values(&tr.s_next));
                    self.target.q_values(&tr.s_next)[pick]
                } else {
                    self.target
                        .q_values(&tr.s_next)
                        .into_iter()
                        .fold(f64::NEG_INFINITY, f64::max)
                };
                (tr.clone(), tr.r_observed + self.cfg.gamma * bootstrap)
            })
            .collect();
        let batch: Vec<(&State, usize, f64)> = targets
            .iter()
            .map(|(tr, y)| (&tr.s, tr.a.as_discrete().expect("discrete learner"), *y))
            .collect();
        let (_loss, grads) = self.online.td_gradients(&batch);
        self.online
            .net
            .apply_adam(&grads, self.cfg.learning_rate, &mut self.adam);
    }
}

impl Learner for DqnLearner {
    fn select_action(&mut self, s: &State, step: usize, rng: &mut RunRng) -> Action {
        let eps = self.epsilon.value(step);
        if rng.gen::<f64>() < eps {
            Action::Discrete(rng.gen_range(0..self.online.num_actions))
        } else {
            Action::Discrete(argmax(&self.online.q_values(s)))
        }
    }

    fn observe(&mut self, tr: &ObservedTransition, rng: &mut RunRng) {
        self.buffer.push(tr.clone());
        self.observed_steps += 1;
        if self.observed_steps >= self.cfg.warmup_steps
            && self.buffer.len() >= self.cfg.batch_size
        {
            self.train_step(rng);
            if self.observed_steps % self.cfg.sync_every == 0 {
                self.target = self.online.clone();
            }
        }
    }

    fn snapshot_policy(&self) -> Policy {
        let kind = if self.cfg.dueling {
            NetPolicyKind::DuelingArgmax
        } else {
            NetPolicyKind::DiscreteArgmax
        };
        Policy::network(self.online.net.clone(), kind, self.space.clone())
    }
}
