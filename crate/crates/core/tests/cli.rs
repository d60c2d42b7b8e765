use std::path::Path;
use std::process::{Command, Output};

use safesim::cli::load_logs;
use safesim::diffusion::DenoiserModel;
use safesim::guidance::GuidanceConfig;
use safesim::metrics::aggregate;

fn safesim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_safesim"))
        .args(args)
        .env_remove("SAFESIM_SEED")
        .output()
        .unwrap()
}

fn ok(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn tiny_model(dir: &Path) -> std::path::PathBuf {
    let model = dir.join("model.json");
    ok(&safesim(&[
        "train", "--out", s(&model), "--episodes", "3", "--iterations", "20", "--hidden", "16", "--layers", "2",
        "--batch-size", "16",
    ]));
    model
}

#[test]
fn gen_scenarios_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&safesim(&["gen-scenarios", "--out", s(&a)]));
    ok(&safesim(&["gen-scenarios", "--out", s(&b)]));
    let mut names: Vec<_> = std::fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 12);
    for n in names {
        assert_eq!(std::fs::read(a.join(&n)).unwrap(), std::fs::read(b.join(&n)).unwrap());
    }
}

#[test]
fn simulate_then_evaluate_matches_in_process_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let model = tiny_model(dir.path());
    let scenarios = dir.path().join("scenarios");
    ok(&safesim(&["gen-scenarios", "--out", s(&scenarios)]));
    let logs = dir.path().join("logs");
    std::fs::create_dir_all(&logs).unwrap();
    for (i, name) in ["01-", "05-"].iter().enumerate() {
        let file = scenarios.join(file_named(&scenarios, name));
        let out = logs.join(format!("run{i}.jsonl"));
        let summary = ok(&safesim(&[
            "simulate", "--scenario", s(&file), "--model", s(&model), "--out", s(&out), "--samples", "2",
            "--duration", "1", "--seed", "3",
        ]));
        assert_eq!(summary["steps"], 10);
    }
    let prefix = dir.path().join("report");
    let summary = ok(&safesim(&["evaluate", "--logs", s(&logs), "--reference", s(&model), "--out", s(&prefix)]));
    assert_eq!(summary["runs"], 2);

    let loaded = load_logs(&logs).unwrap();
    let reference = DenoiserModel::load(&model).unwrap().reference;
    let g = GuidanceConfig::default();
    let report = aggregate(&loaded, reference.as_ref(), g.lambda_t, g.lambda_d).unwrap();
    assert_eq!(std::fs::read_to_string(prefix.with_extension("csv")).unwrap(), report.to_csv());
    assert_eq!(std::fs::read_to_string(prefix.with_extension("json")).unwrap(), report.to_json().unwrap());
}

#[test]
fn sweep_writes_one_row_per_cell_plus_marginals() {
    let dir = tempfile::tempdir().unwrap();
    let model = tiny_model(dir.path());
    let scenarios = dir.path().join("scenarios");
    ok(&safesim(&["gen-scenarios", "--out", s(&scenarios)]));
    let spec = dir.path().join("sweep.json");
    std::fs::write(
        &spec,
        serde_json::json!({
            "param": "w_ttc",
            "values": [0.0, 1.0],
            "seeds": [0, 1],
            "scenarios": [format!("scenarios/{}", file_named(&scenarios, "01-"))],
            "sim": { "num_samples": 2, "max_duration": 0.5 }
        })
        .to_string(),
    )
    .unwrap();
    let csv = dir.path().join("out.csv");
    let summary = ok(&safesim(&["sweep", "--spec", s(&spec), "--model", s(&model), "--out", s(&csv)]));
    // 2 values x 2 seeds x 1 scenario, plus one marginal row per value.
    assert_eq!(summary["rows"], 6);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 7);
}

fn file_named(dir: &Path, prefix: &str) -> String {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .find(|n| n.starts_with(prefix))
        .unwrap()
}

#[test]
fn exit_codes_classify_failures() {
    let dir = tempfile::tempdir().unwrap();
    let code = |out: Output| out.status.code().unwrap();

    assert_eq!(code(safesim(&["simulate", "--model", "m.json", "--out", "x.jsonl"])), 1);
    assert_eq!(code(safesim(&["no-such-command"])), 1);
    let missing = dir.path().join("missing.json");
    assert_eq!(
        code(safesim(&["simulate", "--scenario", s(&missing), "--model", s(&missing), "--out", "x.jsonl"])),
        1
    );

    let bad = safesim(&["simulate", "--scenario", s(&missing), "--model", "m", "--out", "o", "--samples", "x"]);
    assert_eq!(bad.status.code(), Some(1));
    let err: serde_json::Value = serde_json::from_slice(&bad.stderr).unwrap();
    assert_eq!(err["error"], "invalid-input");

    // A file where the output directory should be is a runtime failure.
    let blocker = dir.path().join("blocker");
    std::fs::write(&blocker, "").unwrap();
    let out = blocker.join("lib");
    let failed = safesim(&["gen-scenarios", "--out", s(&out)]);
    assert_eq!(failed.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&failed.stderr).unwrap();
    assert_eq!(err["error"], "runtime");
}

#[test]
fn config_file_supplies_flags_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let lib = dir.path().join("from-config");
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, serde_json::json!({ "out": s(&lib) }).to_string()).unwrap();
    ok(&safesim(&["--config", s(&cfg), "gen-scenarios"]));
    assert!(lib.is_dir());

    std::fs::remove_dir_all(&lib).unwrap();
    let flag = dir.path().join("from-flag");
    ok(&safesim(&["--config", s(&cfg), "gen-scenarios", "--out", s(&flag)]));
    assert!(flag.is_dir());
    assert!(!lib.exists());
}
