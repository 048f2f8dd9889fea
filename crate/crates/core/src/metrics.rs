//! Attack-efficiency metrics, target-policy generation, and the two budget
//! scenarios.
//!
//! Efficiency of a run is summarized as the mean action distance to the
//! target over all training steps, the total and per-step absolute
//! perturbation, and the largest single-step perturbation. Repeats run in
//! parallel on disjoint seeds and aggregate into mean ± 95% Student-t
//! confidence half-widths.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::attacks::Attack;
use crate::config::{AttackSettings, BuildError, EnvConfig, LearnerConfig};
use crate::mdp::{run_training, run_training_with_snapshots, EpisodeCursor, Mdp, RunError, TrainingLog};
use crate::policy::Policy;
use crate::rng::{substream, RunRng, Stream};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochPoint {
    pub epoch: usize,
    pub mean_distance: f64,
}

/// Realized efficiency of one training run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EfficiencyReport {
    pub total_steps: usize,
    /// Mean action distance to the target over all steps.
    pub epsilon: f64,
    /// Total absolute perturbation spent.
    pub c_total: f64,
    pub c_per_step: f64,
    /// Largest single-step |perturbation|.
    pub b_realized: f64,
    pub epoch_len: usize,
    pub epoch_curve: Vec<EpochPoint>,
    pub exhausted_at: Option<usize>,
    pub seed: u64,
}

/// Per-metric mean and 95% confidence half-width over repeats.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeanCi {
    pub mean: f64,
    /// Student-t half-width; absent for a single repeat.
    pub ci_half_width: Option<f64>,
}

impl MeanCi {
    fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        let mean = xs.iter().sum::<f64>() / n as f64;
        if n < 2 {
            return MeanCi {
                mean,
                ci_half_width: None,
            };
        }
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n as f64 - 1.0);
        let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
            .expect("valid dof")
            .inverse_cdf(0.975);
        MeanCi {
            mean,
            ci_half_width: Some(t * (var / n as f64).sqrt()),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AggregateReport {
    pub n: usize,
    pub epsilon: MeanCi,
    pub c_total: MeanCi,
    pub c_per_step: MeanCi,
    pub b_realized: MeanCi,
    /// Per-epoch mean distance averaged across repeats.
    pub epoch_curve: Vec<EpochPoint>,
}

/// Summarizes the per-step log of one run.
pub fn compute_report(log: &TrainingLog, epoch_len: usize) -> EfficiencyReport {
    let t = log.records.len();
    let dist_sum: f64 = log.distances.iter().sum();
    let epsilon = dist_sum / t as f64;
    let c_total: f64 = log.records.iter().map(|r| r.delta.abs()).sum();
    let b_realized = log
        .records
        .iter()
        .map(|r| r.delta.abs())
        .fold(0.0, f64::max);
    let epoch_len = epoch_len.max(1);
    let epoch_curve = log
        .distances
        .chunks(epoch_len)
        .enumerate()
        .map(|(epoch, chunk)| EpochPoint {
            epoch,
            mean_distance: chunk.iter().sum::<f64>() / chunk.len() as f64,
        })
        .collect();
    EfficiencyReport {
        total_steps: t,
        epsilon,
        c_total,
        c_per_step: c_total / t as f64,
        b_realized,
        epoch_len,
        epoch_curve,
        exhausted_at: log.exhausted_at,
        seed: log.seed,
    }
}

pub fn aggregate_reports(reports: &[EfficiencyReport]) -> AggregateReport {
    let pick = |f: fn(&EfficiencyReport) -> f64| {
        MeanCi::from_samples(&reports.iter().map(f).collect::<Vec<_>>())
    };
    let epochs = reports.iter().map(|r| r.epoch_curve.len()).max().unwrap_or(0);
    let epoch_curve = (0..epochs)
        .map(|e| {
            let vals: Vec<f64> = reports
                .iter()
                .filter_map(|r| r.epoch_curve.get(e).map(|p| p.mean_distance))
                .collect();
            EpochPoint {
                epoch: e,
                mean_distance: vals.iter().sum::<f64>() / vals.len() as f64,
            }
        })
        .collect();
    AggregateReport {
        n: reports.len(),
        epsilon: pick(|r| r.epsilon),
        c_total: pick(|r| r.c_total),
        c_per_step: pick(|r| r.c_per_step),
        b_realized: pick(|r| r.b_realized),
        epoch_curve,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    Random,
    Medium,
    Expert,
}

#[derive(Debug, Clone)]
pub struct TargetPolicyTier {
    pub tier: Tier,
    pub policy: Policy,
    /// Mean greedy-episode return on the clean environment.
    pub clean_value: f64,
}

#[derive(Debug, Clone)]
pub struct TargetTriple {
    pub random: TargetPolicyTier,
    pub medium: TargetPolicyTier,
    pub expert: TargetPolicyTier,
    /// `(step, evaluation return)` of every snapshot taken during clean
    /// training.
    pub snapshot_returns: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetGenConfig {
    pub train_steps: usize,
    pub snapshot_every: usize,
    #[serde(default = "default_eval_episodes")]
    pub eval_episodes: usize,
    #[serde(default = "default_medium_fraction")]
    pub medium_fraction: f64,
}

fn default_eval_episodes() -> usize {
    20
}

fn default_medium_fraction() -> f64 {
    0.5
}

#[derive(Debug, Error)]
pub enum TargetGenError {
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Run(#[from] RunError),
    #[error(
        "no snapshot qualifies for the medium tier: random return {random}, \
         snapshot returns {achieved:?}"
    )]
    NoQualifyingSnapshot { random: f64, achieved: Vec<f64> },
}

/// Mean return of greedy episodes under a frozen policy on the clean
/// environment.
pub fn evaluate_policy_rollout(
    env: &dyn Mdp,
    policy: &Policy,
    episodes: usize,
    rng: &mut RunRng,
) -> f64 {
    let mut total = 0.0;
    for _ in 0..episodes {
        let mut cursor = EpisodeCursor::reset(env, rng);
        while !cursor.done {
            let a = env.action_space().clip(policy.act(&cursor.state));
            let (_, r, _) = crate::mdp::step(env, &mut cursor, &a, rng)
                .expect("policy actions are inside the space");
            total += r;
        }
    }
    total / episodes as f64
}

/// Generates the random/medium/expert target-policy tiers: the random tier
/// is a seeded random policy; the other two are snapshots of clean
/// training, picked by evaluation return.
pub fn generate_targets(
    env_cfg: &EnvConfig,
    learner_cfg: &LearnerConfig,
    seed: u64,
    gen: &TargetGenConfig,
) -> Result<TargetTriple, TargetGenError> {
    let env = env_cfg.build()?;
    let mut init_rng = substream(seed, Stream::Init);
    let random_policy = learner_cfg.random_policy(env_cfg, &mut init_rng)?;
    let mut eval_rng = substream(seed, Stream::Eval);
    let random_value =
        evaluate_policy_rollout(env.as_ref(), &random_policy, gen.eval_episodes, &mut eval_rng);

    let mut learner = learner_cfg.build(env_cfg, gen.train_steps, seed)?;
    let mut attack = Attack::new(
        AttackSettings::none().to_attack_config(random_policy.clone()),
        env.action_space(),
    )
    .expect("no-op attack is always valid");
    let (_log, snapshots) = run_training_with_snapshots(
        env.as_ref(),
        learner.as_mut(),
        &mut attack,
        gen.train_steps,
        seed,
        gen.snapshot_every,
    )?;

    let evaluated: Vec<(usize, Policy, f64)> = snapshots
        .into_iter()
        .map(|(step, policy)| {
            let v =
                evaluate_policy_rollout(env.as_ref(), &policy, gen.eval_episodes, &mut eval_rng);
            (step, policy, v)
        })
        .collect();
    let snapshot_returns: Vec<(usize, f64)> =
        evaluated.iter().map(|(s, _, v)| (*s, *v)).collect();

    let (best_idx, expert_value) = evaluated
        .iter()
        .enumerate()
        .map(|(i, (_, _, v))| (i, *v))
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| {
            if v > acc.1 {
                (i, v)
            } else {
                acc
            }
        });
    if expert_value < random_value {
        return Err(TargetGenError::NoQualifyingSnapshot {
            random: random_value,
            achieved: snapshot_returns.iter().map(|(_, v)| *v).collect(),
        });
    }
    let threshold = random_value + gen.medium_fraction * (expert_value - random_value);
    let medium_idx = evaluated
        .iter()
        .position(|(_, _, v)| *v >= threshold)
        .expect("the expert snapshot itself reaches the threshold");

    let tier = |tier, idx: usize| {
        let (_, policy, value) = &evaluated[idx];
        TargetPolicyTier {
            tier,
            policy: policy.clone(),
            clean_value: *value,
        }
    };
    Ok(TargetTriple {
        random: TargetPolicyTier {
            tier: Tier::Random,
            policy: random_policy,
            clean_value: random_value,
        },
        medium: tier(Tier::Medium, medium_idx),
        expert: tier(Tier::Expert, best_idx),
        snapshot_returns,
    })
}

/// Budget regime of a scenario run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// No cap on total spend; realized (ε, C, B) is the result.
    Unbounded,
    /// Total spend is capped; attacks stop permanently on exhaustion and ε
    /// is compared at equal budgets.
    HardCapped { cap_c: f64 },
}

#[derive(Debug)]
pub struct RunOutcome {
    pub seed: u64,
    pub report: EfficiencyReport,
    pub log: TrainingLog,
}

#[derive(Debug)]
pub struct ScenarioOutcome {
    pub runs: Vec<RunOutcome>,
    pub aggregate: AggregateReport,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Run(#[from] RunError),
    #[error("repeats must be >= 1")]
    NoRepeats,
}

/// Runs `repeats` seeded training runs in parallel and aggregates their
/// efficiency reports. Run `i` uses seed `base_seed + i`.
#[allow(clippy::too_many_arguments)]
pub fn run_scenario(
    env_cfg: &EnvConfig,
    learner_cfg: &LearnerConfig,
    attack_settings: &AttackSettings,
    target: &Policy,
    scenario: Scenario,
    total_steps: usize,
    epoch_len: usize,
    repeats: usize,
    base_seed: u64,
) -> Result<ScenarioOutcome, ScenarioError> {
    if repeats == 0 {
        return Err(ScenarioError::NoRepeats);
    }
    let mut settings = attack_settings.clone();
    settings.cap_c = match scenario {
        Scenario::Unbounded => None,
        Scenario::HardCapped { cap_c } => Some(cap_c),
    };

    // Validate everything before spawning any run.
    {
        let env = env_cfg.build()?;
        Attack::new(settings.to_attack_config(target.clone()), env.action_space())
            .map_err(BuildError::from)?;
        learner_cfg.build(env_cfg, total_steps, base_seed)?;
    }

    let runs: Result<Vec<RunOutcome>, ScenarioError> = (0..repeats)
        .into_par_iter()
        .map(|i| {
            let seed = base_seed + i as u64;
            let env = env_cfg.build()?;
            let mut learner = learner_cfg.build(env_cfg, total_steps, seed)?;
            let mut attack = Attack::new(
                settings.to_attack_config(target.clone()),
                env.action_space(),
            )
            .map_err(BuildError::from)?;
            let log = run_training(env.as_ref(), learner.as_mut(), &mut attack, total_steps, seed)?;
            let report = compute_report(&log, epoch_len);
            Ok(RunOutcome { seed, report, log })
        })
        .collect();
    let runs = runs?;
    let aggregate = aggregate_reports(&runs.iter().map(|r| r.report.clone()).collect::<Vec<_>>());
    Ok(ScenarioOutcome { runs, aggregate })
}
