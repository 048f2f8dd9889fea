//! `plotdata` subcommand: flattens experiment outputs into plot-ready CSVs.
//!
//! Scans a directory (and its immediate children) for completed experiment
//! outputs and writes three tables: mean distance vs. penalty magnitude
//! (with the no-attack baseline as the zero-magnitude row), mean distance
//! vs. spend cap for hard-capped runs, and the per-epoch distance curves.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};

use rplab::attacks::AttackKind;
use rplab::metrics::{AggregateReport, Scenario};

use crate::experiment::ExperimentConfig;
use crate::run::{experiment_dirs, INCOMPLETE_MARKER};

struct Experiment {
    label: String,
    config: ExperimentConfig,
    aggregate: AggregateReport,
}

fn kind_name(kind: AttackKind) -> &'static str {
    match kind {
        AttackKind::None => "none",
        AttackKind::Adaptive => "adaptive",
        AttackKind::Greedy => "greedy",
        AttackKind::Neighborhood => "neighborhood",
    }
}

fn ci_str(ci: Option<f64>) -> String {
    ci.map(|h| h.to_string()).unwrap_or_default()
}

pub fn cmd_plotdata(dir: &Path) -> Result<()> {
    let dirs = experiment_dirs(dir)?;
    if dirs.is_empty() {
        bail!("no experiment outputs (config.json) under {}", dir.display());
    }

    let mut missing = Vec::new();
    let mut experiments = Vec::new();
    for d in dirs {
        let label = d
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| d.display().to_string());
        if d.join(INCOMPLETE_MARKER).exists() {
            missing.push(format!("{}: flagged {}", d.display(), INCOMPLETE_MARKER));
            continue;
        }
        let agg_path = d.join("aggregate.json");
        if !agg_path.is_file() {
            missing.push(format!("{}: aggregate.json not found", d.display()));
            continue;
        }
        let config: ExperimentConfig =
            serde_json::from_str(&fs::read_to_string(d.join("config.json"))?)
                .with_context(|| format!("parsing {}/config.json", d.display()))?;
        let aggregate: AggregateReport = serde_json::from_str(&fs::read_to_string(&agg_path)?)
            .with_context(|| format!("parsing {}", agg_path.display()))?;
        experiments.push(Experiment {
            label,
            config,
            aggregate,
        });
    }
    if !missing.is_empty() {
        bail!("missing artifacts:\n  {}", missing.join("\n  "));
    }

    // epsilon vs. penalty magnitude (the none-attack rows land at delta 0)
    let mut w = csv::Writer::from_path(dir.join("plot_epsilon_vs_delta.csv"))?;
    w.write_record([
        "experiment",
        "attack",
        "delta",
        "epsilon_mean",
        "epsilon_ci",
        "c_total_mean",
        "c_total_ci",
        "c_per_step_mean",
        "b_realized_mean",
        "repeats",
    ])?;
    for e in &experiments {
        let a = &e.aggregate;
        w.write_record([
            e.label.clone(),
            kind_name(e.config.attack.kind).to_string(),
            e.config.attack.delta.to_string(),
            a.epsilon.mean.to_string(),
            ci_str(a.epsilon.ci_half_width),
            a.c_total.mean.to_string(),
            ci_str(a.c_total.ci_half_width),
            a.c_per_step.mean.to_string(),
            a.b_realized.mean.to_string(),
            a.n.to_string(),
        ])?;
    }
    w.flush()?;

    // epsilon vs. spend cap for the hard-capped scenario
    let mut w = csv::Writer::from_path(dir.join("plot_epsilon_vs_c.csv"))?;
    w.write_record([
        "experiment",
        "attack",
        "delta",
        "cap_c",
        "cap_c_per_step",
        "epsilon_mean",
        "epsilon_ci",
    ])?;
    for e in &experiments {
        if let Scenario::HardCapped { cap_c } = e.config.scenario {
            w.write_record([
                e.label.clone(),
                kind_name(e.config.attack.kind).to_string(),
                e.config.attack.delta.to_string(),
                cap_c.to_string(),
                (cap_c / e.config.total_steps as f64).to_string(),
                e.aggregate.epsilon.mean.to_string(),
                ci_str(e.aggregate.epsilon.ci_half_width),
            ])?;
        }
    }
    w.flush()?;

    // per-epoch mean distance curves
    let mut w = csv::Writer::from_path(dir.join("plot_epoch_curves.csv"))?;
    w.write_record(["experiment", "epoch", "mean_distance"])?;
    for e in &experiments {
        for p in &e.aggregate.epoch_curve {
            w.write_record([
                e.label.clone(),
                p.epoch.to_string(),
                p.mean_distance.to_string(),
            ])?;
        }
    }
    w.flush()?;

    println!(
        "wrote plot_epsilon_vs_delta.csv, plot_epsilon_vs_c.csv, plot_epoch_curves.csv for {} experiments",
        experiments.len()
    );
    Ok(())
}
