//! Experiment configuration file schema.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use rplab::config::{AttackSettings, EnvConfig, LearnerConfig};
use rplab::metrics::{Scenario, TargetGenConfig, Tier};

/// Where the target policy comes from: a generated tier or a policy file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetSelector {
    Tier(Tier),
    File(PathBuf),
}

/// One experiment: environment, learner, attack, target, budget scenario,
/// and run bookkeeping. Unknown keys anywhere in the file are rejected.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub environment: EnvConfig,
    pub learner: LearnerConfig,
    pub attack: AttackSettings,
    pub target: TargetSelector,
    #[serde(default = "default_scenario")]
    pub scenario: Scenario,
    pub total_steps: usize,
    #[serde(default = "default_epoch_len")]
    pub epoch_len: usize,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    pub seed: u64,
    /// Clean-training settings used when the target is a generated tier;
    /// defaults derive from `total_steps`.
    #[serde(default)]
    pub target_gen: Option<TargetGenConfig>,
}

fn default_scenario() -> Scenario {
    Scenario::Unbounded
}

fn default_epoch_len() -> usize {
    4000
}

fn default_repeats() -> usize {
    1
}

impl ExperimentConfig {
    pub fn resolved_target_gen(&self) -> TargetGenConfig {
        self.target_gen.clone().unwrap_or(TargetGenConfig {
            train_steps: self.total_steps,
            snapshot_every: (self.total_steps / 20).max(1),
            eval_episodes: 20,
            medium_fraction: 0.5,
        })
    }
}
