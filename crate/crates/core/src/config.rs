//! Declarative environment, learner, and attack configuration.
//!
//! These are the JSON-facing types the command-line front end parses;
//! unknown keys are rejected so typos fail loudly instead of silently
//! running a default.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attacks::{AttackConfig, AttackError, AttackKind};
use crate::envs::{CartPole, EnvError, GridWorld, MountainCar, PointMass};
use crate::learners::{
    DdpgConfig, DdpgLearner, DqnConfig, DqnLearner, Learner, TabularQ, TabularQConfig,
};
use crate::mdp::Mdp;
use crate::net::MlpNet;
use crate::oracle::TabularMdp;
use crate::policy::{NetPolicyKind, Policy, StateIndexer};
use crate::rng::{substream, RunRng, Stream};
use crate::space::ActionSpace;

#[derive(Debug, Error)]
pub enum BuildError {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Attack(#[from] AttackError),
    #[error("learner '{learner}' cannot run on environment '{env}': {reason}")]
    Incompatible {
        learner: &'static str,
        env: &'static str,
        reason: &'static str,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvConfig {
    Gridworld(GridWorldConfig),
    Mountaincar(MountainCarConfig),
    Cartpole(CartPoleConfig),
    Pointmass(PointMassConfig),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridWorldConfig {
    pub width: usize,
    pub height: usize,
    pub start: (usize, usize),
    pub goal: (usize, usize),
    pub step_reward: f64,
    pub goal_reward: f64,
    pub slip_prob: f64,
    pub horizon: usize,
}

impl Default for GridWorldConfig {
    fn default() -> Self {
        GridWorldConfig {
            width: 5,
            height: 5,
            start: (0, 0),
            goal: (4, 4),
            step_reward: -1.0,
            goal_reward: 10.0,
            slip_prob: 0.0,
            horizon: 50,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MountainCarConfig {
    pub horizon: usize,
}

impl Default for MountainCarConfig {
    fn default() -> Self {
        MountainCarConfig { horizon: 200 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CartPoleConfig {
    pub horizon: usize,
}

impl Default for CartPoleConfig {
    fn default() -> Self {
        CartPoleConfig { horizon: 500 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PointMassConfig {
    pub horizon: usize,
}

impl Default for PointMassConfig {
    fn default() -> Self {
        PointMassConfig { horizon: 200 }
    }
}

impl EnvConfig {
    pub fn name(&self) -> &'static str {
        match self {
            EnvConfig::Gridworld(_) => "gridworld",
            EnvConfig::Mountaincar(_) => "mountaincar",
            EnvConfig::Cartpole(_) => "cartpole",
            EnvConfig::Pointmass(_) => "pointmass",
        }
    }

    pub fn build(&self) -> Result<Box<dyn Mdp>, BuildError> {
        Ok(match self {
            EnvConfig::Gridworld(c) => Box::new(self.build_grid(c)?),
            EnvConfig::Mountaincar(c) => Box::new(MountainCar::new(c.horizon)),
            EnvConfig::Cartpole(c) => Box::new(CartPole::new(c.horizon)),
            EnvConfig::Pointmass(c) => Box::new(PointMass::new(c.horizon)),
        })
    }

    fn build_grid(&self, c: &GridWorldConfig) -> Result<GridWorld, EnvError> {
        GridWorld::new(
            c.width,
            c.height,
            c.start,
            c.goal,
            c.step_reward,
            c.goal_reward,
            c.slip_prob,
            c.horizon,
        )
    }

    /// Exact tabular form for the verification oracle; errors for
    /// environments with continuous state.
    pub fn build_enumerable(&self) -> Result<TabularMdp, BuildError> {
        match self {
            EnvConfig::Gridworld(c) => Ok(self.build_grid(c)?.to_tabular()),
            other => Err(EnvError::NotEnumerable(other.name()).into()),
        }
    }

    /// Ordered state list of an enumerable environment.
    pub fn enumerate_states(&self) -> Result<Vec<crate::space::State>, BuildError> {
        Ok(self.build_enumerable()?.states)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerConfig {
    Tabular(TabularSettings),
    Dqn(DqnSettings),
    Ddpg(DdpgSettings),
}

/// Exploration decay spans default to half the run length when left unset.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TabularSettings {
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub epsilon_decay_steps: Option<usize>,
}

impl Default for TabularSettings {
    fn default() -> Self {
        TabularSettings {
            alpha: 0.1,
            gamma: 0.99,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay_steps: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DqnSettings {
    pub hidden: Vec<usize>,
    pub buffer_capacity: usize,
    pub batch_size: usize,
    pub sync_every: usize,
    pub learning_rate: f64,
    pub gamma: f64,
    pub warmup_steps: usize,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub epsilon_decay_steps: Option<usize>,
    pub double_q: bool,
    pub dueling: bool,
}

impl Default for DqnSettings {
    fn default() -> Self {
        let d = DqnConfig::with_decay(0);
        DqnSettings {
            hidden: d.hidden,
            buffer_capacity: d.buffer_capacity,
            batch_size: d.batch_size,
            sync_every: d.sync_every,
            learning_rate: d.learning_rate,
            gamma: d.gamma,
            warmup_steps: d.warmup_steps,
            epsilon_start: d.epsilon_start,
            epsilon_end: d.epsilon_end,
            epsilon_decay_steps: None,
            double_q: d.double_q,
            dueling: d.dueling,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DdpgSettings {
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
    pub noise_decay_steps: Option<usize>,
    pub twin_critics: bool,
    pub actor_delay: usize,
}

impl Default for DdpgSettings {
    fn default() -> Self {
        let d = DdpgConfig::with_decay(0);
        DdpgSettings {
            hidden: d.hidden,
            actor_lr: d.actor_lr,
            critic_lr: d.critic_lr,
            gamma: d.gamma,
            buffer_capacity: d.buffer_capacity,
            batch_size: d.batch_size,
            sync_every: d.sync_every,
            warmup_steps: d.warmup_steps,
            noise_start: d.noise_start,
            noise_end: d.noise_end,
            noise_decay_steps: None,
            twin_critics: d.twin_critics,
            actor_delay: d.actor_delay,
        }
    }
}

impl LearnerConfig {
    pub fn name(&self) -> &'static str {
        match self {
            LearnerConfig::Tabular(_) => "tabular",
            LearnerConfig::Dqn(_) => "dqn",
            LearnerConfig::Ddpg(_) => "ddpg",
        }
    }

    /// Builds a fresh learner for one run. `total_steps` resolves schedule
    /// defaults; `seed` drives weight initialization.
    pub fn build(
        &self,
        env_cfg: &EnvConfig,
        total_steps: usize,
        seed: u64,
    ) -> Result<Box<dyn Learner>, BuildError> {
        let env = env_cfg.build()?;
        let space = env.action_space().clone();
        let mut init_rng = substream(seed, Stream::Init);
        match self {
            LearnerConfig::Tabular(s) => {
                let indexer = match env_cfg {
                    EnvConfig::Gridworld(g) => StateIndexer::Grid {
                        width: g.width,
                        height: g.height,
                    },
                    _ => {
                        return Err(BuildError::Incompatible {
                            learner: "tabular",
                            env: env_cfg.name(),
                            reason: "tabular learning needs an enumerable state space",
                        })
                    }
                };
                let cfg = TabularQConfig {
                    alpha: s.alpha,
                    gamma: s.gamma,
                    epsilon_start: s.epsilon_start,
                    epsilon_end: s.epsilon_end,
                    epsilon_decay_steps: s.epsilon_decay_steps.unwrap_or(total_steps / 2),
                };
                Ok(Box::new(TabularQ::new(indexer, space, cfg)))
            }
            LearnerConfig::Dqn(s) => {
                if !space.is_discrete() {
                    return Err(BuildError::Incompatible {
                        learner: "dqn",
                        env: env_cfg.name(),
                        reason: "q-learning over actions needs a discrete action space",
                    });
                }
                let cfg = DqnConfig {
                    hidden: s.hidden.clone(),
                    buffer_capacity: s.buffer_capacity,
                    batch_size: s.batch_size,
                    sync_every: s.sync_every,
                    learning_rate: s.learning_rate,
                    gamma: s.gamma,
                    warmup_steps: s.warmup_steps,
                    epsilon_start: s.epsilon_start,
                    epsilon_end: s.epsilon_end,
                    epsilon_decay_steps: s.epsilon_decay_steps.unwrap_or(total_steps / 2),
                    double_q: s.double_q,
                    dueling: s.dueling,
                };
                Ok(Box::new(DqnLearner::new(
                    env.state_dim(),
                    space,
                    cfg,
                    &mut init_rng,
                )))
            }
            LearnerConfig::Ddpg(s) => {
                if space.is_discrete() {
                    return Err(BuildError::Incompatible {
                        learner: "ddpg",
                        env: env_cfg.name(),
                        reason: "the deterministic actor emits continuous actions",
                    });
                }
                let cfg = DdpgConfig {
                    hidden: s.hidden.clone(),
                    actor_lr: s.actor_lr,
                    critic_lr: s.critic_lr,
                    gamma: s.gamma,
                    buffer_capacity: s.buffer_capacity,
                    batch_size: s.batch_size,
                    sync_every: s.sync_every,
                    warmup_steps: s.warmup_steps,
                    noise_start: s.noise_start,
                    noise_end: s.noise_end,
                    noise_decay_steps: s.noise_decay_steps.unwrap_or(total_steps / 2),
                    twin_critics: s.twin_critics,
                    actor_delay: s.actor_delay,
                };
                Ok(Box::new(DdpgLearner::new(
                    env.state_dim(),
                    space,
                    cfg,
                    &mut init_rng,
                )))
            }
        }
    }

    /// A seeded random policy of the shape this learner family uses: a
    /// random action table for tabular learners, random network weights for
    /// the network-backed ones.
    pub fn random_policy(
        &self,
        env_cfg: &EnvConfig,
        rng: &mut RunRng,
    ) -> Result<Policy, BuildError> {
        use rand::Rng;
        let env = env_cfg.build()?;
        let space = env.action_space().clone();
        match self {
            LearnerConfig::Tabular(_) => {
                let indexer = match env_cfg {
                    EnvConfig::Gridworld(g) => StateIndexer::Grid {
                        width: g.width,
                        height: g.height,
                    },
                    _ => {
                        return Err(BuildError::Incompatible {
                            learner: "tabular",
                            env: env_cfg.name(),
                            reason: "tabular learning needs an enumerable state space",
                        })
                    }
                };
                let n = space.size();
                let table = (0..indexer.len()).map(|_| rng.gen_range(0..n)).collect();
                Ok(Policy::tabular(table, indexer, space))
            }
            LearnerConfig::Dqn(s) => {
                let mut sizes = vec![env.state_dim()];
                sizes.extend_from_slice(&s.hidden);
                sizes.push(space.size());
                let net = MlpNet::init(&sizes, rng, 1.0).expect("valid sizes");
                Ok(Policy::network(net, NetPolicyKind::DiscreteArgmax, space))
            }
            LearnerConfig::Ddpg(s) => {
                let (lower, upper) = match &space {
                    ActionSpace::Continuous { lower, upper, .. } => (lower.clone(), upper.clone()),
                    ActionSpace::Discrete { .. } => {
                        return Err(BuildError::Incompatible {
                            learner: "ddpg",
                            env: env_cfg.name(),
                            reason: "the deterministic actor emits continuous actions",
                        })
                    }
                };
                let mut sizes = vec![env.state_dim()];
                sizes.extend_from_slice(&s.hidden);
                sizes.push(lower.len());
                // wider init than a trainable net so the random policy's
                // actions actually vary over the box
                let net = MlpNet::init(&sizes, rng, 3.0).expect("valid sizes");
                Ok(Policy::network(
                    net,
                    NetPolicyKind::ContinuousTanh { lower, upper },
                    space,
                ))
            }
        }
    }
}

/// Attack parameters without the target policy (targets are resolved
/// separately, from a tier or a file).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackSettings {
    pub kind: AttackKind,
    #[serde(default)]
    pub delta: f64,
    #[serde(default)]
    pub radius: Option<f64>,
    #[serde(default)]
    pub cap_b: Option<f64>,
    #[serde(default)]
    pub cap_c: Option<f64>,
}

impl AttackSettings {
    pub fn none() -> Self {
        AttackSettings {
            kind: AttackKind::None,
            delta: 0.0,
            radius: None,
            cap_b: None,
            cap_c: None,
        }
    }

    pub fn to_attack_config(&self, target: Policy) -> AttackConfig {
        let mut cfg = AttackConfig::new(self.kind, self.delta, target);
        cfg.radius = self.radius;
        cfg.cap_b = self.cap_b;
        cfg.cap_c = self.cap_c;
        cfg
    }
}
