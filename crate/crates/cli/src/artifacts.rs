//! On-disk artifact formats: policy files, step logs, reports.
//!
//! Policy files carry a versioned header, optional tier metadata, and the
//! representation payload; network weights are written as decimal text with
//! 17 significant digits, which round-trips every f64 bit-exactly. Step
//! logs are CSV with the fixed column order
//! `t,episode,s,a,r_true,delta,r_observed,distance,done`; state and action
//! components are semicolon-joined.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use rplab::mdp::TrainingLog;
use rplab::metrics::Tier;
use rplab::net::{Layer, MlpNet};
use rplab::policy::{NetPolicyKind, Policy, PolicyRepr, StateIndexer};
use rplab::space::{Action, ActionSpace};

pub const POLICY_FORMAT: &str = "rplab-policy";
pub const POLICY_VERSION: u32 = 1;

/// 17 significant digits: enough to reconstruct any f64 exactly.
fn encode_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn decode_f64(s: &str) -> Result<f64> {
    s.parse::<f64>()
        .with_context(|| format!("invalid decimal weight {s:?}"))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyFile {
    pub format: String,
    pub version: u32,
    #[serde(default)]
    pub tier: Option<Tier>,
    #[serde(default)]
    pub clean_value: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
    pub action_space: SpacePayload,
    pub representation: ReprPayload,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpacePayload {
    Discrete { count: usize },
    Continuous { lower: Vec<f64>, upper: Vec<f64> },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReprPayload {
    Tabular {
        table: Vec<usize>,
        indexer: StateIndexer,
    },
    Network {
        kind: NetPolicyKind,
        layers: Vec<LayerPayload>,
    },
    Constant {
        action: Action,
    },
}

#[derive(Debug, Serialize, Deserialize)]
pub struct LayerPayload {
    pub inputs: usize,
    pub outputs: usize,
    pub w: Vec<String>,
    pub b: Vec<String>,
}

impl SpacePayload {
    fn from_space(space: &ActionSpace) -> Self {
        match space {
            ActionSpace::Discrete { count } => SpacePayload::Discrete { count: *count },
            ActionSpace::Continuous { lower, upper, .. } => SpacePayload::Continuous {
                lower: lower.clone(),
                upper: upper.clone(),
            },
        }
    }

    fn to_space(&self) -> Result<ActionSpace> {
        Ok(match self {
            SpacePayload::Discrete { count } => ActionSpace::discrete(*count)?,
            SpacePayload::Continuous { lower, upper } => {
                ActionSpace::continuous(lower.clone(), upper.clone())?
            }
        })
    }
}

pub fn policy_to_file(
    policy: &Policy,
    tier: Option<Tier>,
    clean_value: Option<f64>,
    seed: Option<u64>,
) -> PolicyFile {
    let representation = match &policy.repr {
        PolicyRepr::Tabular { table, indexer } => ReprPayload::Tabular {
            table: table.clone(),
            indexer: indexer.clone(),
        },
        PolicyRepr::Network { net, kind } => ReprPayload::Network {
            kind: kind.clone(),
            layers: net
                .layers()
                .iter()
                .map(|l| LayerPayload {
                    inputs: l.inputs,
                    outputs: l.outputs,
                    w: l.w.iter().copied().map(encode_f64).collect(),
                    b: l.b.iter().copied().map(encode_f64).collect(),
                })
                .collect(),
        },
        PolicyRepr::Constant { action } => ReprPayload::Constant {
            action: action.clone(),
        },
    };
    PolicyFile {
        format: POLICY_FORMAT.to_string(),
        version: POLICY_VERSION,
        tier,
        clean_value,
        seed,
        action_space: SpacePayload::from_space(&policy.action_space),
        representation,
    }
}

pub fn policy_from_file(file: &PolicyFile) -> Result<Policy> {
    if file.format != POLICY_FORMAT {
        bail!("not a policy file: format {:?}", file.format);
    }
    if file.version != POLICY_VERSION {
        bail!("unsupported policy file version {}", file.version);
    }
    let action_space = file.action_space.to_space()?;
    let repr = match &file.representation {
        ReprPayload::Tabular { table, indexer } => PolicyRepr::Tabular {
            table: table.clone(),
            indexer: indexer.clone(),
        },
        ReprPayload::Network { kind, layers } => {
            let layers = layers
                .iter()
                .map(|l| {
                    Ok(Layer {
                        inputs: l.inputs,
                        outputs: l.outputs,
                        w: l.w.iter().map(|s| decode_f64(s)).collect::<Result<_>>()?,
                        b: l.b.iter().map(|s| decode_f64(s)).collect::<Result<_>>()?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            PolicyRepr::Network {
                net: MlpNet::from_layers(layers)?,
                kind: kind.clone(),
            }
        }
        ReprPayload::Constant { action } => PolicyRepr::Constant {
            action: action.clone(),
        },
    };
    Ok(Policy { repr, action_space })
}

pub fn save_policy(
    path: &Path,
    policy: &Policy,
    tier: Option<Tier>,
    clean_value: Option<f64>,
    seed: Option<u64>,
) -> Result<()> {
    let file = policy_to_file(policy, tier, clean_value, seed);
    write_json(path, &file)
}

pub fn load_policy(path: &Path) -> Result<Policy> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading policy file {}", path.display()))?;
    let file: PolicyFile = serde_json::from_str(&text)
        .with_context(|| format!("parsing policy file {}", path.display()))?;
    policy_from_file(&file)
}

/// Pretty JSON with a trailing newline; deterministic for identical values.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn join_components(xs: &[f64]) -> String {
    xs.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

fn split_components(s: &str) -> Result<Vec<f64>> {
    s.split(';')
        .map(|p| p.parse::<f64>().context("bad state/action component"))
        .collect()
}

pub fn write_steps_csv(path: &Path, log: &TrainingLog) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .with_context(|| format!("creating {}", path.display()))?;
    w.write_record([
        "t",
        "episode",
        "s",
        "a",
        "r_true",
        "delta",
        "r_observed",
        "distance",
        "done",
    ])?;
    for (rec, dist) in log.records.iter().zip(&log.distances) {
        w.write_record([
            rec.t.to_string(),
            rec.episode.to_string(),
            join_components(&rec.s),
            join_components(&rec.a.components()),
            rec.r_true.to_string(),
            rec.delta.to_string(),
            rec.r_observed.to_string(),
            dist.to_string(),
            rec.done.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One persisted step-log row, mirroring the CSV columns exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRow {
    pub t: usize,
    pub episode: usize,
    pub s: Vec<f64>,
    pub a: Vec<f64>,
    pub r_true: f64,
    pub delta: f64,
    pub r_observed: f64,
    pub distance: f64,
    pub done: bool,
}

pub fn log_to_rows(log: &TrainingLog) -> Vec<StepRow> {
    log.records
        .iter()
        .zip(&log.distances)
        .map(|(rec, dist)| StepRow {
            t: rec.t,
            episode: rec.episode,
            s: rec.s.clone(),
            a: rec.a.components(),
            r_true: rec.r_true,
            delta: rec.delta,
            r_observed: rec.r_observed,
            distance: *dist,
            done: rec.done,
        })
        .collect()
}

pub fn read_steps_csv(path: &Path) -> Result<Vec<StepRow>> {
    let mut r = csv::Reader::from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut rows = Vec::new();
    for row in r.records() {
        let row = row?;
        rows.push(StepRow {
            t: row[0].parse()?,
            episode: row[1].parse()?,
            s: split_components(&row[2])?,
            a: split_components(&row[3])?,
            r_true: row[4].parse()?,
            delta: row[5].parse()?,
            r_observed: row[6].parse()?,
            distance: row[7].parse()?,
            done: row[8].parse()?,
        });
    }
    Ok(rows)
}
