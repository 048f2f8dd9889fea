//! Deterministic actor-critic for continuous actions, with optional twin
//! critics and delayed actor updates.
//!
//! The actor emits raw values that are tanh-squashed into the action box.
//! Critic gradients flow back through the squashing into the actor
//! analytically; the chain is finite-difference checked in the tests.

use rand_distr::{Distribution, Normal};

use super::{Learner, LinearSchedule, ReplayBuffer};
use crate::mdp::ObservedTransition;
use crate::net::{AdamState, Gradients, MlpNet, MseSample};
use crate::policy::{tanh_scale, NetPolicyKind, Policy};
use crate::rng::RunRng;
use crate::space::{Action, ActionSpace, State};

#[derive(Debug, Clone)]
pub struct DdpgConfig {
    pub hidden: Vec<usize>,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub gamma: f64,
    pub buffer_capacity: usize,
    pub batch_size: usize,
    pub sync_every: usize,
    pub warmup_steps: usize,
    pub noise_start: f64,
    pub noise_end: f64,
    pub noise_decay_steps: usize,
    pub twin_critics: bool,
    pub actor_delay: usize,
}

impl DdpgConfig {
    pub fn with_decay(noise_decay_steps: usize) -> Self {
        DdpgConfig {
            hidden: vec![64, 64],
            actor_lr: 1e-4,
            critic_lr: 1e-3,
            gamma: 0.99,
            buffer_capacity: 50_000,
            batch_size: 64,
            sync_every: 1000,
            warmup_steps: 1000,
            noise_start: 0.2,
            noise_end: 0.05,
            noise_decay_steps,
            twin_critics: false,
            actor_delay: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DdpgLearner {
    actor: MlpNet,
    actor_target: MlpNet,
    critic: MlpNet,
    critic_target: MlpNet,
    twin: Option<MlpNet>,
    twin_target: Option<MlpNet>,
    actor_adam: AdamState,
    critic_adam: AdamState,
    twin_adam: Option<AdamState>,
    buffer: ReplayBuffer,
    cfg: DdpgConfig,
    space: ActionSpace,
    lower: Vec<f64>,
    upper: Vec<f64>,
    noise: LinearSchedule,
    observed_steps: usize,
    critic_updates: usize,
}

impl DdpgLearner {
    pub fn new(state_dim: usize, space: ActionSpace, cfg: DdpgConfig, rng: &mut RunRng) -> Self {
        let (lower, upper) = match &space {
            ActionSpace::Continuous { lower, upper, .. } => (lower.clone(), upper.clone()),
            ActionSpace::Discrete { .. } => {
                panic!("deterministic actor-critic needs a continuous action space")
            }
        };
        let action_dim = lower.len();
        let mut actor_sizes = vec![state_dim];
        actor_sizes.extend_from_slice(&cfg.hidden);
        actor_sizes.push(action_dim);
        let mut critic_sizes = vec![state_dim + action_dim];
        critic_sizes.extend_from_slice(&cfg.hidden);
        critic_sizes.push(1);

        let actor = MlpNet::init(&actor_sizes, rng, 1.0).expect("valid sizes");
        let critic = MlpNet::init(&critic_sizes, rng, 1.0).expect("valid sizes");
        let twin = cfg
            .twin_critics
            .then(|| MlpNet::init(&critic_sizes, rng, 1.0).expect("valid sizes"));

        let noise = LinearSchedule {
            start: cfg.noise_start,
            end: cfg.noise_end,
            decay_steps: cfg.noise_decay_steps,
        };
        DdpgLearner {
            actor_target: actor.clone(),
            actor_adam: AdamState::new(&actor),
            critic_target: critic.clone(),
            critic_adam: AdamState::new(&critic),
            twin_target: twin.clone(),
            twin_adam: twin.as_ref().map(AdamState::new),
            actor,
            critic,
            twin,
            buffer: ReplayBuffer::new(cfg.buffer_capacity),
            cfg,
            space,
            lower,
            upper,
            noise,
            observed_steps: 0,
            critic_updates: 0,
        }
    }

    fn actor_action(&self, net: &MlpNet, s: &State) -> Vec<f64> {
        tanh_scale(&net.forward(s), &self.lower, &self.upper)
    }

    fn critic_value(net: &MlpNet, s: &State, a: &[f64]) -> f64 {
        let mut input = s.clone();
        input.extend_from_slice(a);
        net.forward(&input)[0]
    }

    fn train_step(&mut self, rng: &mut RunRng) {
        let batch: Vec<ObservedTransition> = self
            .buffer
            .sample(self.cfg.batch_size, rng)
            .into_iter()
            .cloned()
            .collect();

        // TD targets from the target networks.
        let targets: Vec<f64> = batch
            .iter()
            .map(|tr| {
                if tr.done {
                    return tr.r_observed;
                }
                let next_a = self.actor_action(&self.actor_target, &tr.s_next);
                let mut q = Self::critic_value(&self.critic_target, &tr.s_next, &next_a);
                if let Some(twin_t) = &self.twin_target {
                    q = q.min(Self::critic_value(twin_t, &tr.s_next, &next_a));
                }
                tr.r_observed + self.cfg.gamma * q
            })
            .collect();

        let inputs: Vec<Vec<f64>> = batch
            .iter()
            .map(|tr| {
                let mut input = tr.s.clone();
                input.extend_from_slice(tr.a.as_continuous().expect("continuous learner"));
                input
            })
            .collect();
        let target_rows: Vec<[f64; 1]> = targets.iter().map(|y| [*y]).collect();
        let samples: Vec<MseSample<'_>> = inputs
            .iter()
            .zip(&target_rows)
            .map(|(input, target)| MseSample {
                input,
                target,
                mask: None,
            })
            .collect();

        let (_loss, grads) = self.critic.backprop_mse(&samples).expect("finite critic loss");
        self.critic
            .apply_adam(&grads, self.cfg.critic_lr, &mut self.critic_adam);
        if let (Some(twin), Some(twin_adam)) = (&mut self.twin, &mut self.twin_adam) {
            let (_loss, grads) = twin.backprop_mse(&samples).expect("finite critic loss");
            twin.apply_adam(&grads, self.cfg.critic_lr, twin_adam);
        }
        self.critic_updates += 1;

        if self.critic_updates % self.cfg.actor_delay == 0 {
            let grads = self.actor_gradients(&batch);
            self.actor
                .apply_adam(&grads, self.cfg.actor_lr, &mut self.actor_adam);
        }

        if self.observed_steps % self.cfg.sync_every == 0 {
            self.actor_target = self.actor.clone();
            self.critic_target = self.critic.clone();
            self.twin_target = self.twin.clone();
        }
    }

    /// Gradients of `-mean_i Q(s_i, squash(actor(s_i)))` with respect to
    /// the actor parameters: the critic's input gradient is taken on the
    /// action slice and chained through the tanh rescaling.
    fn actor_gradients(&self, batch: &[ObservedTransition]) -> Gradients {
        let n = batch.len().max(1) as f64;
        let state_dim = batch[0].s.len();
        let mut actor_grads = Gradients::zeros(&self.actor);
        let mut critic_scratch = Gradients::zeros(&self.critic);
        for tr in batch {
            let actor_cache = self.actor.forward_cached(&tr.s);
            let raw = actor_cache.output().to_vec();
            let action = tanh_scale(&raw, &self.lower, &self.upper);

            let mut critic_in = tr.s.clone();
            critic_in.extend_from_slice(&action);
            let critic_cache = self.critic.forward_cached(&critic_in);
            // maximize Q <=> descend on -Q
            let input_grad = self
                .critic
                .backward(&critic_cache, &[-1.0 / n], &mut critic_scratch);

            let grad_raw: Vec<f64> = raw
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    let t = r.tanh();
                    let dsquash = 0.5 * (self.upper[i] - self.lower[i]) * (1.0 - t * t);
                    input_grad[state_dim + i] * dsquash
                })
                .collect();
            self.actor.backward(&actor_cache, &grad_raw, &mut actor_grads);
        }
        actor_grads
    }
}

impl Learner for DdpgLearner {
    fn select_action(&mut self, s: &State, step: usize, rng: &mut RunRng) -> Action {
        let mut a = self.actor_action(&self.actor, s);
        let sigma = self.noise.value(step);
        if sigma > 0.0 {
            let normal = Normal::new(0.0, sigma).expect("valid noise scale");
            for x in &mut a {
                *x += normal.sample(rng);
            }
        }
        self.space.clip(Action::Continuous(a))
    }

    fn observe(&mut self, tr: &ObservedTransition, rng: &mut RunRng) {
        self.buffer.push(tr.clone());
        self.observed_steps += 1;
        if self.observed_steps >= self.cfg.warmup_steps
            && self.buffer.len() >= self.cfg.batch_size
        {
            self.train_step(rng);
        }
    }

    fn snapshot_policy(&self) -> Policy {
        Policy::network(
            self.actor.clone(),
            NetPolicyKind::ContinuousTanh {
                lower: self.lower.clone(),
                upper: self.upper.clone(),
            },
            self.space.clone(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, Stream};

    fn space() -> ActionSpace {
        ActionSpace::continuous(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap()
    }

    fn make(cfg: DdpgConfig) -> DdpgLearner {
        let mut rng = substream(0, Stream::Init);
        DdpgLearner::new(3, space(), cfg, &mut rng)
    }

    fn tr(r: f64) -> ObservedTransition {
        ObservedTransition {
            s: vec![0.1, 0.2, -0.1],
            a: Action::Continuous(vec![0.3, -0.3]),
            r_observed: r,
            s_next: vec![0.2, 0.1, 0.0],
            done: false,
        }
    }

    #[test]
    fn zero_noise_returns_exact_actor_output() {
        let mut l = make(DdpgConfig {
            noise_start: 0.0,
            noise_end: 0.0,
            ..DdpgConfig::with_decay(100)
        });
        let s = vec![0.5, -0.5, 0.25];
        let expected = l.actor_action(&l.actor.clone(), &s);
        let mut rng = substream(1, Stream::Learner);
        match l.select_action(&s, 0, &mut rng) {
            Action::Continuous(a) => assert_eq!(a, expected),
            _ => panic!("continuous action expected"),
        }
    }

    #[test]
    fn noisy_actions_stay_in_the_box() {
        let mut l = make(DdpgConfig {
            noise_start: 2.0,
            noise_end: 2.0,
            ..DdpgConfig::with_decay(100)
        });
        let sp = space();
        let mut rng = substream(2, Stream::Learner);
        for i in 0..50 {
            let a = l.select_action(&vec![0.0, 0.0, i as f64 / 50.0], i, &mut rng);
            assert!(sp.contains(&a));
        }
    }

    #[test]
    fn actor_gradients_match_finite_differences() {
        let mut rng = substream(3, Stream::Init);
        let cfg = DdpgConfig {
            hidden: vec![6, 6],
            ..DdpgConfig::with_decay(100)
        };
        let l = DdpgLearner::new(3, space(), cfg, &mut rng);
        let batch = vec![tr(-1.0), tr(0.5)];
        let grads = l.actor_gradients(&batch);

        let objective = |actor: &MlpNet| {
            -batch
                .iter()
                .map(|tr| {
                    let a = tanh_scale(&actor.forward(&tr.s), &l.lower, &l.upper);
                    DdpgLearner::critic_value(&l.critic, &tr.s, &a)
                })
                .sum::<f64>()
                / batch.len() as f64
        };
        let h = 1e-5;
        for idx in 0..l.actor.param_count() {
            let orig = l.actor.get_param(idx);
            let mut plus = l.actor.clone();
            plus.set_param(idx, orig + h);
            let mut minus = l.actor.clone();
            minus.set_param(idx, orig - h);
            let fd = (objective(&plus) - objective(&minus)) / (2.0 * h);
            let analytic = MlpNet::grad_param(&grads, idx);
            let denom = analytic.abs().max(fd.abs());
            if denom < 1e-7 {
                continue;
            }
            assert!(
                (analytic - fd).abs() / denom < 1e-4,
                "actor param {idx}: analytic {analytic} vs fd {fd}"
            );
        }
    }

    #[test]
    fn warmup_gates_updates_and_targets_sync_on_period() {
        let mut l = make(DdpgConfig {
            warmup_steps: 5,
            batch_size: 2,
            sync_every: 8,
            ..DdpgConfig::with_decay(100)
        });
        let before = l.critic.clone();
        let target_before = l.critic_target.clone();
        let mut rng = substream(4, Stream::Learner);
        for _ in 0..4 {
            l.observe(&tr(-1.0), &mut rng);
        }
        assert_eq!(l.critic, before);
        for _ in 0..3 {
            l.observe(&tr(-1.0), &mut rng);
        }
        assert_ne!(l.critic, before, "critic trains after warm-up");
        assert_eq!(l.critic_target, target_before, "target waits for sync step");
        l.observe(&tr(-1.0), &mut rng); // observed step 8 -> sync
        assert_eq!(l.critic_target, l.critic);
    }

    #[test]
    fn snapshot_is_frozen() {
        let mut l = make(DdpgConfig {
            warmup_steps: 1,
            batch_size: 2,
            ..DdpgConfig::with_decay(100)
        });
        let snap = l.snapshot_policy();
        let s = vec![0.1, 0.2, -0.1];
        let before = snap.act(&s);
        let mut rng = substream(5, Stream::Learner);
        for _ in 0..30 {
            l.observe(&tr(1.0), &mut rng);
        }
        assert_eq!(snap.act(&s), before);
    }
}
