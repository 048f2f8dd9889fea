//! `run` subcommand: orchestrates seeded repeats and persists artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

use rplab::metrics::{evaluate_policy_rollout, generate_targets, run_scenario, Tier};
use rplab::policy::Policy;
use rplab::rng::{substream, Stream};

use crate::artifacts::{save_policy, write_json, write_steps_csv};
use crate::experiment::{ExperimentConfig, TargetSelector};

pub const INCOMPLETE_MARKER: &str = "INCOMPLETE";

pub struct ResolvedTarget {
    pub policy: Policy,
    pub tier: Option<Tier>,
    pub clean_value: Option<f64>,
}

/// Resolves the configured target into a concrete policy: random tiers are
/// seeded directly, medium/expert tiers come from clean-training snapshots,
/// files are loaded as-is.
pub fn resolve_target(cfg: &ExperimentConfig) -> Result<ResolvedTarget> {
    match &cfg.target {
        TargetSelector::File(path) => Ok(ResolvedTarget {
            policy: crate::artifacts::load_policy(path)?,
            tier: None,
            clean_value: None,
        }),
        TargetSelector::Tier(Tier::Random) => {
            let mut rng = substream(cfg.seed, Stream::Init);
            let policy = cfg.learner.random_policy(&cfg.environment, &mut rng)?;
            let env = cfg.environment.build()?;
            let clean_value = evaluate_policy_rollout(
                env.as_ref(),
                &policy,
                cfg.resolved_target_gen().eval_episodes,
                &mut substream(cfg.seed, Stream::Eval),
            );
            Ok(ResolvedTarget {
                policy,
                tier: Some(Tier::Random),
                clean_value: Some(clean_value),
            })
        }
        TargetSelector::Tier(tier) => {
            let triple = generate_targets(
                &cfg.environment,
                &cfg.learner,
                cfg.seed,
                &cfg.resolved_target_gen(),
            )?;
            let chosen = match tier {
                Tier::Medium => triple.medium,
                Tier::Expert => triple.expert,
                Tier::Random => unreachable!("handled above"),
            };
            Ok(ResolvedTarget {
                policy: chosen.policy,
                tier: Some(chosen.tier),
                clean_value: Some(chosen.clean_value),
            })
        }
    }
}

pub fn cmd_run(
    config_path: &Path,
    out: &Path,
    seed_override: Option<u64>,
    repeats_override: Option<usize>,
) -> Result<()> {
    let text = fs::read_to_string(config_path)
        .with_context(|| format!("reading config {}", config_path.display()))?;
    let mut cfg: ExperimentConfig =
        serde_json::from_str(&text).context("invalid experiment config")?;
    if let Some(seed) = seed_override {
        cfg.seed = seed;
    }
    if let Some(repeats) = repeats_override {
        cfg.repeats = repeats;
    }

    fs::create_dir_all(out)?;
    let marker = out.join(INCOMPLETE_MARKER);
    fs::write(&marker, "run did not finish; artifacts may be partial\n")?;

    write_json(&out.join("config.json"), &cfg)?;
    let target = resolve_target(&cfg)?;
    save_policy(
        &out.join("target_policy.json"),
        &target.policy,
        target.tier,
        target.clean_value,
        Some(cfg.seed),
    )?;

    let outcome = run_scenario(
        &cfg.environment,
        &cfg.learner,
        &cfg.attack,
        &target.policy,
        cfg.scenario,
        cfg.total_steps,
        cfg.epoch_len,
        cfg.repeats,
        cfg.seed,
    )?;

    for (i, run) in outcome.runs.iter().enumerate() {
        let run_dir = out.join(format!("run_{i:03}"));
        fs::create_dir_all(&run_dir)?;
        write_steps_csv(&run_dir.join("steps.csv"), &run.log)?;
        write_json(&run_dir.join("report.json"), &run.report)?;
    }
    write_json(&out.join("aggregate.json"), &outcome.aggregate)?;
    fs::remove_file(&marker)?;

    let agg = &outcome.aggregate;
    println!(
        "{} runs | epsilon {:.4}{} | C_total {:.3} | C/T {:.5} | B {:.3}",
        agg.n,
        agg.epsilon.mean,
        agg.epsilon
            .ci_half_width
            .map(|h| format!(" ± {h:.4}"))
            .unwrap_or_default(),
        agg.c_total.mean,
        agg.c_per_step.mean,
        agg.b_realized.mean,
    );
    Ok(())
}

/// Experiment directories under `root` (root itself included when it holds
/// a config.json), sorted by path.
pub fn experiment_dirs(root: &Path) -> Result<Vec<PathBuf>> {
    let mut found = Vec::new();
    if root.join("config.json").is_file() {
        found.push(root.to_path_buf());
    }
    if root.is_dir() {
        let mut children: Vec<PathBuf> = fs::read_dir(root)?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| p.is_dir())
            .collect();
        children.sort();
        for child in children {
            if child.join("config.json").is_file() {
                found.push(child);
            }
        }
    }
    Ok(found)
}
