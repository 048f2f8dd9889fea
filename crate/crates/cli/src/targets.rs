//! `targets` subcommand: generates the random/medium/expert target tiers
//! and writes them as policy files plus a returns manifest.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use rplab::metrics::{generate_targets, Tier};

use crate::artifacts::{save_policy, write_json};
use crate::experiment::ExperimentConfig;

#[derive(Debug, Serialize, Deserialize)]
pub struct TargetsManifest {
    pub seed: u64,
    pub tiers: Vec<TierEntry>,
    pub snapshot_returns: Vec<(usize, f64)>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TierEntry {
    pub tier: Tier,
    pub file: String,
    pub clean_value: f64,
}

pub fn cmd_targets(config_path: &Path, out: &Path, seed_override: Option<u64>) -> Result<()> {
    let text = fs::read_to_string(config_path)
        .with_context(|| format!("reading config {}", config_path.display()))?;
    let mut cfg: ExperimentConfig =
        serde_json::from_str(&text).context("invalid experiment config")?;
    if let Some(seed) = seed_override {
        cfg.seed = seed;
    }
    fs::create_dir_all(out)?;

    let triple = generate_targets(
        &cfg.environment,
        &cfg.learner,
        cfg.seed,
        &cfg.resolved_target_gen(),
    )?;

    let mut tiers = Vec::new();
    for t in [&triple.random, &triple.medium, &triple.expert] {
        let name = match t.tier {
            Tier::Random => "target_random.json",
            Tier::Medium => "target_medium.json",
            Tier::Expert => "target_expert.json",
        };
        save_policy(
            &out.join(name),
            &t.policy,
            Some(t.tier),
            Some(t.clean_value),
            Some(cfg.seed),
        )?;
        tiers.push(TierEntry {
            tier: t.tier,
            file: name.to_string(),
            clean_value: t.clean_value,
        });
        println!("{:?}: return {:.3} -> {}", t.tier, t.clean_value, name);
    }
    write_json(
        &out.join("targets_manifest.json"),
        &TargetsManifest {
            seed: cfg.seed,
            tiers,
            snapshot_returns: triple.snapshot_returns,
        },
    )?;
    Ok(())
}
