//! `verify` subcommand: brute-force checks of the attack theory on an
//! enumerable environment.
//!
//! Runs the adversarial-environment membership conditions for the requested
//! attack, then the adaptive-penalty identities at the same magnitude: the
//! value decomposition, gap dominance over generated alternatives, and the
//! spend-accounting identity of an actual training run. Exit status 0 means
//! every check passed.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};

use rplab::attacks::{Attack, AttackConfig, AttackKind};
use rplab::config::{EnvConfig, LearnerConfig, TabularSettings};
use rplab::mdp::run_training;
use rplab::metrics::compute_report;
use rplab::oracle::theorem1_accounting_check;
use rplab::rng::{substream, Stream};

use crate::artifacts::load_policy;

pub struct VerifyArgs {
    pub kind: AttackKind,
    /// `None` means: derive a sufficient magnitude from the clean value
    /// gaps.
    pub delta: Option<f64>,
    pub seed: u64,
}

struct CheckList {
    all_pass: bool,
}

impl CheckList {
    fn new() -> Self {
        CheckList { all_pass: true }
    }

    fn report(&mut self, name: &str, pass: bool, detail: String) {
        println!("[{}] {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        self.all_pass &= pass;
    }
}

pub fn cmd_verify(env_path: &Path, target_path: &Path, args: &VerifyArgs) -> Result<bool> {
    let text = fs::read_to_string(env_path)
        .with_context(|| format!("reading environment file {}", env_path.display()))?;
    let env_cfg: EnvConfig = serde_json::from_str(&text).context("invalid environment config")?;
    let tab = env_cfg.build_enumerable()?;
    let target = load_policy(target_path)?;

    let policy_count = tab.policy_count();
    println!(
        "environment: {} ({} states x {} actions, horizon {}, {} policies)",
        env_cfg.name(),
        tab.num_states,
        tab.num_actions,
        tab.horizon,
        policy_count
    );

    let delta = match args.delta {
        Some(d) => d,
        None => {
            let sufficient = tab.sufficient_delta(&target)?;
            let auto = 4.2 * sufficient.max(0.25);
            println!("sufficient penalty {sufficient:.6}; using delta {auto:.6}");
            auto
        }
    };

    let mut checks = CheckList::new();

    // 1. membership conditions for the requested attack kind
    let cfg = AttackConfig::new(args.kind, delta, target.clone());
    let em = tab.check_em_membership(&cfg)?;
    checks.report(
        "em-condition-2 (target optimal in adversarial env)",
        em.condition2,
        format!("margin {:+.6}", em.condition2_margin),
    );
    checks.report(
        "em-condition-3 (perturbation bound)",
        em.condition3,
        format!("max violation {:+.6}", em.condition3_max_violation),
    );

    // 2. value decomposition under the adaptive penalty
    let policies = match tab.enumerate_policies() {
        Ok(p) => p,
        Err(_) => tab.sample_policies(500, &mut substream(args.seed, Stream::Init)),
    };
    let max_residual = policies
        .par_iter()
        .map(|table| tab.verify_decomposition(&target, delta, table))
        .try_reduce(|| 0.0f64, |a, b| Ok(a.max(b)))?;
    checks.report(
        "value-decomposition residual",
        max_residual <= 1e-9,
        format!("max |residual| {max_residual:.3e} over {} policies", policies.len()),
    );

    // 3. gap dominance against scaled and randomized in-set alternatives
    let mut candidates = Vec::new();
    for c in [0.25, 0.5, 0.75] {
        candidates.push(tab.scaled_penalty_table(&target, c * delta)?);
    }
    let mut rng = substream(args.seed, Stream::Attack);
    for _ in 0..20 {
        candidates.push(tab.random_penalty_table(&target, delta, 0.5, &mut rng)?);
    }
    let membership = tab.em_reports_for_tables(&candidates, delta, &target)?;
    let mut alternatives = Vec::new();
    let mut skipped = 0usize;
    for (table, report) in candidates.into_iter().zip(membership) {
        if report.condition2 && report.condition3 {
            alternatives.push(table);
        } else {
            skipped += 1;
        }
    }
    let t2 = tab.theorem2_gap_comparison(&target, delta, &alternatives)?;
    checks.report(
        "gap-dominance over alternatives",
        t2.all_dominated && !alternatives.is_empty(),
        format!(
            "adaptive gap {:.6} vs {} alternatives ({} below the membership bar)",
            t2.adaptive_gap,
            alternatives.len(),
            skipped
        ),
    );

    // 4. spend accounting on a real training run
    match &env_cfg {
        EnvConfig::Gridworld(_) => {
            let learner_cfg = LearnerConfig::Tabular(TabularSettings::default());
            let steps = 20_000;
            let env = env_cfg.build()?;
            let mut learner = learner_cfg.build(&env_cfg, steps, args.seed)?;
            let mut attack = Attack::new(
                AttackConfig::new(AttackKind::Adaptive, delta, target.clone()),
                env.action_space(),
            )?;
            let log = run_training(env.as_ref(), learner.as_mut(), &mut attack, steps, args.seed)?;
            let report = compute_report(&log, 4000);
            checks.report(
                "spend accounting (C = delta * epsilon * T, B <= delta)",
                theorem1_accounting_check(&report, delta),
                format!(
                    "C_total {:.6} vs {:.6}, B {:.6}",
                    report.c_total,
                    delta * report.epsilon * report.total_steps as f64,
                    report.b_realized
                ),
            );
        }
        other => bail!("no enumerable training path for {}", other.name()),
    }

    Ok(checks.all_pass)
}
