use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use epicheck_cli::{run, verify, VerifyArgs, EXIT_DOMAIN, EXIT_OK, EXIT_USAGE};
use epicheck_core::{check_valid, load_report};

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn path(rel: &str) -> String {
    root().join(rel).to_str().unwrap().to_string()
}

fn cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(std::iter::once("epicheck").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn check_minimal_scene() {
    let (code, out, _) = cli(&["check", &path("scenes/minimal.smcdel")]);
    assert_eq!(code, EXIT_OK);
    assert!(out.starts_with("TRUE\nstates: 2\n"), "{out}");
}

#[test]
fn check_machine_format_and_dot() {
    let dir = tempfile::tempdir().unwrap();
    let dot = dir.path().join("law.dot");
    let scene = write(dir.path(), "s.smcdel", "VARS 1,2\nLAW 1 | 2\nOBS a:1\nVALID? 1 | 2");
    let (code, out, _) = cli(&["--format", "machine", "check", &scene, "--dot", dot.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["verdict"], true);
    assert_eq!(v["state_count"], 3);
    let text = fs::read_to_string(dot).unwrap();
    assert!(text.starts_with("digraph bdd {"));
}

#[test]
fn malformed_scene_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let scene = write(dir.path(), "bad.smcdel", "VARS 1 LAW Top");
    let (code, out, err) = cli(&["check", &scene]);
    assert_eq!(code, EXIT_DOMAIN);
    assert!(out.is_empty());
    assert!(err.contains("1:15"), "{err}");
    let (code, _, _) = cli(&["oracle", &scene]);
    assert_eq!(code, EXIT_DOMAIN);
}

#[test]
fn oracle_mirrors_check() {
    for scene in ["scenes/minimal.smcdel", "scenes/cards.smcdel", "scenes/muddy.smcdel"] {
        let (c1, symbolic, _) = cli(&["check", &path(scene)]);
        let (c2, explicit, _) = cli(&["oracle", &path(scene)]);
        assert_eq!((c1, c2), (EXIT_OK, EXIT_OK));
        assert_eq!(symbolic.lines().next().unwrap(), explicit.trim_end(), "{scene}");
    }
    assert_eq!(cli(&["oracle", &path("scenes/cards.smcdel")]).1, "FALSE\n");
    let (code, _, err) = cli(&["oracle", &path("scenes/too_large.smcdel")]);
    assert_eq!(code, EXIT_DOMAIN);
    assert!(err.contains("21"));
}

#[test]
fn verify_small_runs() {
    let (code, out, _) = cli(&["verify", "--count", "1", "--seed", "0", "--max-props", "1", "--max-agents", "1", "--max-depth", "1"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(out, "1/1 agree\n");
    let (code, _, err) = cli(&["verify", "--count", "5"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("--seed"));
    assert_eq!(cli(&["verify", "--count", "0", "--seed", "1"]).0, EXIT_USAGE);
}

#[test]
fn corrupted_checker_is_caught() {
    let args = VerifyArgs {
        count: 50,
        max_props: 4,
        max_agents: 2,
        max_depth: 3,
        max_announce: 1,
    };
    let mut out = Vec::new();
    let mut err = Vec::new();
    let ok = verify(&args, 3, |s| check_valid(s).map(|r| !r.verdict), &mut out, &mut err);
    assert!(!ok);
    let out = String::from_utf8(out).unwrap();
    assert!(out.contains("disagrees") && out.contains("VARS "), "{out}");
    assert!(out.ends_with("0/50 agree\n"));
    let mut out = Vec::new();
    assert!(verify(&args, 3, |s| check_valid(s).map(|r| r.verdict), &mut out, &mut err));
}

#[test]
fn usage_errors() {
    assert_eq!(cli(&[]).0, EXIT_USAGE);
    assert_eq!(cli(&["frobnicate"]).0, EXIT_USAGE);
    assert_eq!(cli(&["check"]).0, EXIT_USAGE);
    let (code, out, _) = cli(&["--help"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("export-ft"));
}

fn six_item_setup(dir: &Path) -> String {
    let mut dataset = String::new();
    let mut replay = String::new();
    let answers = ["TRUE", "FALSE", "TRUE", "maybe", "false", "TRUE."];
    for (i, answer) in answers.iter().enumerate() {
        let label = i % 2 == 0;
        dataset.push_str(&format!(
            "{{\"id\": \"q{i}\", \"premise\": \"P{i}\", \"hypothesis\": \"H{i}\", \"label\": {label}}}\n"
        ));
        replay.push_str(&format!("{{\"id\": \"q{i}\", \"response\": \"{answer}\"}}\n"));
    }
    write(dir, "data.jsonl", &dataset);
    write(dir, "replay.jsonl", &replay);
    write(dir, "example.json", "{\"id\": \"ex\", \"premise\": \"EP\", \"hypothesis\": \"EH\", \"label\": false}\n");
    write(
        dir,
        "eval.toml",
        "label = \"six\"\nsetting = \"direct\"\ndataset = \"data.jsonl\"\nexample = \"example.json\"\nsample_size = 6\nseed = 1\nout = \"six.json\"\n\n[backend]\nmode = \"replay\"\nfixture = \"replay.jsonl\"\n",
    )
}

#[test]
fn eval_six_items() {
    let dir = tempfile::tempdir().unwrap();
    let config = six_item_setup(dir.path());
    let (code, out, _) = cli(&["eval", &config]);
    assert_eq!(code, EXIT_OK);
    let report = load_report(&dir.path().join("six.json")).unwrap();
    assert_eq!(report.outcomes.len(), 6);
    assert_eq!(report.executed, 5);
    assert_eq!(report.example_id.as_deref(), Some("ex"));
    let table = fs::read_to_string(dir.path().join("six.txt")).unwrap();
    assert_eq!(out, table);
    assert!(table.contains("six       83.33  50.00"), "{table}");

    // the run is reproducible and --seed overrides the config
    let again = dir.path().join("again.json");
    assert_eq!(cli(&["eval", &config, "--out", again.to_str().unwrap()]).0, EXIT_OK);
    let second = load_report(&again).unwrap();
    assert_eq!(report.without_volatile(), second.without_volatile());
    let reseeded = dir.path().join("reseeded.json");
    assert_eq!(cli(&["eval", &config, "--seed", "2", "--out", reseeded.to_str().unwrap()]).0, EXIT_OK);
    assert_ne!(load_report(&reseeded).unwrap().config_digest, report.config_digest);
}

#[test]
fn eval_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    six_item_setup(dir.path());
    let no_fixture = write(
        dir.path(),
        "nofix.toml",
        "label = \"x\"\nsetting = \"direct\"\ndataset = \"data.jsonl\"\nexample = \"example.json\"\nseed = 1\nout = \"x.json\"\n\n[backend]\nmode = \"replay\"\n",
    );
    let (code, _, err) = cli(&["eval", &no_fixture]);
    assert_eq!(code, EXIT_USAGE, "{err}");
    assert!(!dir.path().join("x.json").exists());

    let missing_data = write(
        dir.path(),
        "nodata.toml",
        "label = \"x\"\nsetting = \"direct\"\ndataset = \"absent.jsonl\"\nexample = \"example.json\"\nseed = 1\nout = \"y.json\"\n\n[backend]\nmode = \"replay\"\nfixture = \"replay.jsonl\"\n",
    );
    assert_eq!(cli(&["eval", &missing_data]).0, EXIT_DOMAIN);
    assert!(!dir.path().join("y.json").exists());

    let sfg_without_gold = write(
        dir.path(),
        "sfg.toml",
        "label = \"x\"\nsetting = \"sfg\"\ndataset = \"data.jsonl\"\nexample = \"example.json\"\nseed = 1\nout = \"z.json\"\n\n[backend]\nmode = \"replay\"\nfixture = \"replay.jsonl\"\n",
    );
    assert_eq!(cli(&["eval", &sfg_without_gold]).0, EXIT_DOMAIN);
    assert_eq!(cli(&["eval", &write(dir.path(), "junk.toml", "label = 3")]).0, EXIT_USAGE);
}

#[test]
fn export_counts() {
    let dir = tempfile::tempdir().unwrap();
    six_item_setup(dir.path());
    let data = dir.path().join("data.jsonl");
    let example = dir.path().join("example.json");
    let out = dir.path().join("ft.jsonl");
    let base = |n: &'static str, setting: &'static str| {
        vec![
            "export-ft".to_string(), "--dataset".into(), data.to_str().unwrap().into(),
            "--setting".into(), setting.into(), "--example".into(), example.to_str().unwrap().into(),
            "--n".into(), n.into(), "--seed".into(), "4".into(), "--out".into(), out.to_str().unwrap().into(),
        ]
    };
    let args = base("4", "direct");
    let (code, stdout, _) = cli(&args.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!((code, stdout.as_str()), (EXIT_OK, "4 written\n"));
    let text = fs::read_to_string(&out).unwrap();
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        let last = v["messages"].as_array().unwrap().last().unwrap().clone();
        assert_eq!(last["role"], "assistant");
        assert!(last["content"] == "TRUE" || last["content"] == "FALSE");
    }
    assert_eq!(text.lines().count(), 4);

    let args = base("0", "direct");
    let (code, stdout, _) = cli(&args.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!((code, stdout.as_str()), (EXIT_OK, "0 written\n"));
    assert_eq!(fs::read_to_string(&out).unwrap(), "");

    // no gold formulations in this dataset
    let args = base("2", "sfg");
    assert_eq!(cli(&args.iter().map(String::as_str).collect::<Vec<_>>()).0, EXIT_DOMAIN);
}

#[test]
fn sample_is_seeded() {
    let data = path("fixtures/reference/dataset.jsonl");
    let a = cli(&["sample", "--dataset", &data, "--n", "10", "--seed", "8"]);
    let b = cli(&["sample", "--dataset", &data, "--n", "10", "--seed", "8"]);
    assert_eq!(a.0, EXIT_OK);
    assert_eq!(a.1, b.1);
    assert_eq!(a.1.lines().count(), 10);
    assert_eq!(a.1.matches("\"label\":true").count(), 5);
    assert_eq!(cli(&["sample", "--dataset", &data, "--n", "3", "--seed", "8"]).0, EXIT_DOMAIN);
    assert_eq!(cli(&["sample", "--dataset", &data, "--n", "4"]).0, EXIT_USAGE);
}

#[test]
fn report_formats() {
    let dir = tempfile::tempdir().unwrap();
    let config = six_item_setup(dir.path());
    assert_eq!(cli(&["eval", &config]).0, EXIT_OK);
    let report = dir.path().join("six.json");
    let report = report.to_str().unwrap();
    let (_, table, _) = cli(&["report", report, report]);
    assert_eq!(table.lines().count(), 3);
    let (_, csv, _) = cli(&["--format", "csv", "report", report]);
    assert_eq!(csv, "run,label,TRUE,FALSE,UNKNOWN\nsix,true,2,1,0\nsix,false,1,1,1\n");
    let (_, machine, _) = cli(&["report", report, "--format", "machine"]);
    assert_eq!(machine, fs::read_to_string(report).unwrap());
    assert_eq!(cli(&["report", "/nonexistent.json"]).0, EXIT_DOMAIN);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_epicheck");
    let ok = Command::new(bin).args(["check", &path("scenes/cards.smcdel")]).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).starts_with("FALSE\n"));
    let usage = Command::new(bin).arg("verify").output().unwrap();
    assert_eq!(usage.status.code(), Some(2));
    let domain = Command::new(bin).args(["oracle", &path("scenes/too_large.smcdel")]).output().unwrap();
    assert_eq!(domain.status.code(), Some(1));
}
