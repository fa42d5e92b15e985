use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_atomic-mimo");

const RATE_CONFIG: &str = r#"{
  "experiment": "rate_vs_snr",
  "dims": {"nt": 8, "nr": 4, "ns": 1, "n_rf": 2},
  "sweep": {"axis": "receive_snr_db", "grid": [0, 10]},
  "trials": 2,
  "seed": 3
}"#;

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("cfg.json");
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn run_writes_results_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), RATE_CONFIG);
    let out = dir.path().join("rate.csv");
    let res = run(&[
        "run",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
        "--jobs",
        "1",
    ]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("experiment,sweep_value,trial,metric,value,seed\n"));
    assert!(dir.path().join("rate.summary.csv").exists());
}

#[test]
fn identical_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), RATE_CONFIG);
    let mut outputs = Vec::new();
    for (i, jobs) in ["1", "1", "2"].iter().enumerate() {
        let out = dir.path().join(format!("r{i}.csv"));
        let res = run(&[
            "run",
            "--config",
            &cfg,
            "--out",
            out.to_str().unwrap(),
            "--jobs",
            jobs,
        ]);
        assert!(res.status.success());
        outputs.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
}

#[test]
fn flags_override_config_fields() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), RATE_CONFIG);
    let out = dir.path().join("o.json");
    let res = run(&[
        "run",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
        "--format",
        "json",
        "--seed",
        "11",
        "--trials",
        "1",
        "--override",
        "sweep.grid=[5]",
    ]);
    // `--trials` has no dot, so it is not a field flag and clap rejects it.
    assert_eq!(res.status.code(), Some(2));

    let res = run(&[
        "run",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
        "--format",
        "json",
        "--seed",
        "11",
        "--dims.nt=4",
        "--override",
        "sweep.grid=[5]",
    ]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let records: serde_json::Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    let records = records.as_array().unwrap();
    assert_eq!(records.len(), 2);
    for r in records {
        assert_eq!(r["sweep_value"], 5.0);
        assert_eq!(
            r["seed"].as_u64().unwrap(),
            11 + r["trial"].as_u64().unwrap()
        );
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();

    // SC needs N_RF | Nt.
    let cfg = write_config(dir.path(), RATE_CONFIG);
    let res = run(&["validate", "--config", &cfg, "--dims.n_rf", "3"]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("dims.n_rf"));

    let res = run(&["validate", "--config", &cfg]);
    assert_eq!(res.status.code(), Some(0));

    let res = run(&[
        "validate",
        "--config",
        dir.path().join("missing.json").to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(4));

    let bad = dir.path().join("no_dir").join("x.csv");
    let res = run(&["run", "--config", &cfg, "--out", bad.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(4));

    // A single path leaves the realified channel with rank 2 < 2Ns = 4.
    let numeric = write_config(
        dir.path(),
        r#"{"experiment":"rate_vs_snr","dims":{"nt":4,"nr":4,"ns":2,"n_rf":2},
            "channel":{"paths":1},"sweep":{"axis":"receive_snr_db","grid":[0]},"trials":1}"#,
    );
    let out = dir.path().join("n.csv");
    let res = run(&["run", "--config", &numeric, "--out", out.to_str().unwrap()]);
    assert_eq!(
        res.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    assert!(!out.exists());
}

#[test]
fn list_experiments_names_all_kinds() {
    let res = run(&["list-experiments"]);
    assert!(res.status.success());
    let text = String::from_utf8_lossy(&res.stdout);
    for name in [
        "dof_slope",
        "mi_vs_rsnr",
        "rate_vs_snr",
        "rate_vs_nr",
        "convergence",
    ] {
        assert!(text.contains(name), "{text}");
    }
}
