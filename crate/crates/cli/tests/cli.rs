//! End-to-end tests of the command-line surface: artifacts, determinism,
//! validation, verification, and plot tables.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rplab_cli::artifacts::{load_policy, log_to_rows, read_steps_csv, save_policy};
use rplab_cli::run::INCOMPLETE_MARKER;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rplab"))
}

fn write(path: &Path, text: &str) {
    fs::write(path, text).unwrap();
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().unwrap();
    assert!(
        out.status.success(),
        "command failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

const GRID_EXPERIMENT: &str = r#"{
    "environment": {"gridworld": {"width": 4, "height": 4, "goal": [3, 3], "horizon": 30}},
    "learner": {"tabular": {"epsilon_decay_steps": 500}},
    "attack": {"kind": "adaptive", "delta": 5.0},
    "target": {"tier": "random"},
    "total_steps": 2000,
    "epoch_len": 400,
    "repeats": 2,
    "seed": 9
}"#;

fn read_bytes(dir: &Path, rel: &str) -> Vec<u8> {
    fs::read(dir.join(rel)).unwrap_or_else(|e| panic!("reading {rel}: {e}"))
}

#[test]
fn run_writes_artifacts_and_reruns_byte_identically() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("exp.json");
    write(&cfg, GRID_EXPERIMENT);

    let out_a = tmp.path().join("a");
    let out_b = tmp.path().join("b");
    for out in [&out_a, &out_b] {
        run_ok(bin().args(["run", "--config"]).arg(&cfg).arg("--out").arg(out));
    }

    // orchestration contract: two run directories plus aggregate
    for rel in [
        "config.json",
        "target_policy.json",
        "aggregate.json",
        "run_000/steps.csv",
        "run_000/report.json",
        "run_001/steps.csv",
        "run_001/report.json",
    ] {
        assert!(out_a.join(rel).is_file(), "missing {rel}");
        assert_eq!(read_bytes(&out_a, rel), read_bytes(&out_b, rel), "{rel} differs");
    }
    assert!(!out_a.join(INCOMPLETE_MARKER).exists());

    let agg: serde_json::Value =
        serde_json::from_slice(&read_bytes(&out_a, "aggregate.json")).unwrap();
    assert_eq!(agg["n"], 2);
    assert!(agg["epsilon"]["ci_half_width"].is_number());

    // per-step interception invariant on the persisted log
    let rows = read_steps_csv(&out_a.join("run_000/steps.csv")).unwrap();
    assert_eq!(rows.len(), 2000);
    for row in &rows {
        assert_eq!(row.r_observed, row.r_true + row.delta);
    }
}

#[test]
fn different_seed_changes_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("exp.json");
    write(&cfg, GRID_EXPERIMENT);
    let out_a = tmp.path().join("a");
    let out_b = tmp.path().join("b");
    run_ok(bin().args(["run", "--config"]).arg(&cfg).arg("--out").arg(&out_a));
    run_ok(
        bin()
            .args(["run", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out_b)
            .args(["--seed", "10"]),
    );
    assert_ne!(
        read_bytes(&out_a, "run_000/steps.csv"),
        read_bytes(&out_b, "run_000/steps.csv")
    );
}

#[test]
fn greedy_on_continuous_environment_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("exp.json");
    write(
        &cfg,
        r#"{
            "environment": {"pointmass": {}},
            "learner": {"ddpg": {}},
            "attack": {"kind": "greedy", "delta": 5.0},
            "target": {"tier": "random"},
            "total_steps": 100,
            "seed": 1
        }"#,
    );
    let out = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path().join("out"))
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("discrete"), "stderr: {stderr}");
}

#[test]
fn unknown_config_key_fails_with_field_name() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("exp.json");
    write(&cfg, &GRID_EXPERIMENT.replace("\"seed\": 9", "\"seed\": 9, \"seeed\": 1"));
    let out = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path().join("out"))
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("seeed"));
}

#[test]
fn targets_command_writes_ordered_tiers() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("exp.json");
    write(
        &cfg,
        r#"{
            "environment": {"gridworld": {}},
            "learner": {"tabular": {"epsilon_decay_steps": 4000}},
            "attack": {"kind": "none"},
            "target": {"tier": "expert"},
            "total_steps": 20000,
            "seed": 3,
            "target_gen": {"train_steps": 20000, "snapshot_every": 1000}
        }"#,
    );
    let out_dir = tmp.path().join("targets");
    run_ok(bin().args(["targets", "--config"]).arg(&cfg).arg("--out").arg(&out_dir));

    let manifest: serde_json::Value =
        serde_json::from_slice(&read_bytes(&out_dir, "targets_manifest.json")).unwrap();
    let tiers = manifest["tiers"].as_array().unwrap();
    assert_eq!(tiers.len(), 3);
    let values: Vec<f64> = tiers
        .iter()
        .map(|t| t["clean_value"].as_f64().unwrap())
        .collect();
    assert!(values[0] <= values[1] && values[1] <= values[2], "{values:?}");

    for name in ["target_random.json", "target_medium.json", "target_expert.json"] {
        let p = load_policy(&out_dir.join(name)).unwrap();
        let reloaded = load_policy(&out_dir.join(name)).unwrap();
        assert_eq!(p, reloaded);
    }
}

fn write_random_grid_target(dir: &Path, grid_env: &str) -> PathBuf {
    use rplab::config::{EnvConfig, LearnerConfig, TabularSettings};
    use rplab::rng::{substream, Stream};
    let env: EnvConfig = serde_json::from_str(grid_env).unwrap();
    let learner = LearnerConfig::Tabular(TabularSettings::default());
    let policy = learner
        .random_policy(&env, &mut substream(5, Stream::Init))
        .unwrap();
    let path = dir.join("target.json");
    save_policy(&path, &policy, None, None, Some(5)).unwrap();
    path
}

#[test]
fn verify_passes_for_adaptive_and_fails_for_greedy() {
    let tmp = tempfile::tempdir().unwrap();
    let env_file = tmp.path().join("env.json");
    let env_json = r#"{"gridworld": {"width": 3, "height": 3, "goal": [2, 2], "horizon": 20}}"#;
    write(&env_file, env_json);
    let target = write_random_grid_target(tmp.path(), env_json);

    // auto-derived sufficient penalty: all checks pass, exit 0
    let out = run_ok(
        bin()
            .args(["verify", "--config"])
            .arg(&env_file)
            .arg("--target")
            .arg(&target),
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.matches("[PASS]").count(), 5, "stdout: {stdout}");

    // greedy breaks the perturbation bound: nonzero exit, condition 3 flagged
    let out = bin()
        .args(["verify", "--config"])
        .arg(&env_file)
        .arg("--target")
        .arg(&target)
        .args(["--attack", "greedy", "--delta", "5.0"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("[FAIL] em-condition-3"), "stdout: {stdout}");

    // zero penalty cannot make a non-optimal target optimal: condition 2
    let out = bin()
        .args(["verify", "--config"])
        .arg(&env_file)
        .arg("--target")
        .arg(&target)
        .args(["--delta", "0.0"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("[FAIL] em-condition-2"), "stdout: {stdout}");
}

#[test]
fn plotdata_builds_tables_with_clean_baseline_row() {
    let tmp = tempfile::tempdir().unwrap();
    let parent = tmp.path().join("exps");
    fs::create_dir_all(&parent).unwrap();

    let base = |attack: &str, scenario: &str| {
        format!(
            r#"{{
                "environment": {{"gridworld": {{"width": 4, "height": 4, "goal": [3, 3], "horizon": 30}}}},
                "learner": {{"tabular": {{"epsilon_decay_steps": 500}}}},
                "attack": {attack},
                "target": {{"tier": "random"}},
                {scenario}
                "total_steps": 2000,
                "epoch_len": 300,
                "repeats": 2,
                "seed": 11
            }}"#
        )
    };
    let cases = [
        ("clean", base(r#"{"kind": "none"}"#, "")),
        ("adaptive", base(r#"{"kind": "adaptive", "delta": 5.0}"#, "")),
        (
            "capped",
            base(
                r#"{"kind": "greedy", "delta": 5.0}"#,
                r#""scenario": {"hard_capped": {"cap_c": 600.0}},"#,
            ),
        ),
    ];
    for (name, cfg_text) in &cases {
        let cfg = tmp.path().join(format!("{name}.json"));
        write(&cfg, cfg_text);
        run_ok(
            bin()
                .args(["run", "--config"])
                .arg(&cfg)
                .arg("--out")
                .arg(parent.join(name)),
        );
    }

    run_ok(bin().args(["plotdata", "--dir"]).arg(&parent));

    let vs_delta = fs::read_to_string(parent.join("plot_epsilon_vs_delta.csv")).unwrap();
    let mut clean_rows = vs_delta.lines().filter(|l| l.starts_with("clean,"));
    let clean = clean_rows.next().expect("clean baseline row");
    assert!(clean.contains(",none,0,"), "row: {clean}");
    assert_eq!(vs_delta.lines().count(), 1 + cases.len());

    let vs_c = fs::read_to_string(parent.join("plot_epsilon_vs_c.csv")).unwrap();
    assert_eq!(vs_c.lines().count(), 2, "only the capped experiment: {vs_c}");
    assert!(vs_c.lines().nth(1).unwrap().contains("capped,greedy,5,600,0.3"));

    // epoch curve rows per experiment = ceil(T / epoch_len) = ceil(2000/300) = 7
    let curves = fs::read_to_string(parent.join("plot_epoch_curves.csv")).unwrap();
    for (name, _) in &cases {
        let n = curves.lines().filter(|l| l.starts_with(&format!("{name},"))).count();
        assert_eq!(n, 7, "epoch rows for {name}");
    }
}

#[test]
fn plotdata_lists_missing_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let broken = tmp.path().join("broken");
    fs::create_dir_all(&broken).unwrap();
    write(&broken.join("config.json"), GRID_EXPERIMENT);
    write(&broken.join(INCOMPLETE_MARKER), "leftover\n");
    let out = bin().args(["plotdata", "--dir"]).arg(tmp.path()).output().unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("INCOMPLETE"), "stderr: {stderr}");
}

#[test]
fn steps_csv_round_trips_rows_exactly() {
    use rplab::attacks::{Attack, AttackConfig, AttackKind};
    use rplab::config::{EnvConfig, LearnerConfig, TabularSettings};
    use rplab::mdp::run_training;
    use rplab::rng::{substream, Stream};

    let tmp = tempfile::tempdir().unwrap();
    let env_cfg: EnvConfig =
        serde_json::from_str(r#"{"gridworld": {"slip_prob": 0.1}}"#).unwrap();
    let env = env_cfg.build().unwrap();
    let learner_cfg = LearnerConfig::Tabular(TabularSettings::default());
    let mut learner = learner_cfg.build(&env_cfg, 500, 2).unwrap();
    let target = learner_cfg
        .random_policy(&env_cfg, &mut substream(2, Stream::Init))
        .unwrap();
    let mut attack = Attack::new(
        AttackConfig::new(AttackKind::Adaptive, 5.0, target),
        env.action_space(),
    )
    .unwrap();
    let log = run_training(env.as_ref(), learner.as_mut(), &mut attack, 500, 2).unwrap();

    let path = tmp.path().join("steps.csv");
    rplab_cli::artifacts::write_steps_csv(&path, &log).unwrap();
    let rows = read_steps_csv(&path).unwrap();
    assert_eq!(rows, log_to_rows(&log));
}
