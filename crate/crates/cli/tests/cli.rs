use std::path::PathBuf;
use std::process::{Command, Output};

fn lantern(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lantern")).args(args).output().expect("binary runs")
}

fn tmp(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("lantern-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}

#[test]
fn eta_out_of_range_names_the_key() {
    let o = lantern(&["train", "--eta", "1.5"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("reward.eta") && err.contains("(0,1)"), "{err}");
}

#[test]
fn unknown_flag_prints_usage() {
    let o = lantern(&["train", "--bogus", "3"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn bad_set_value_names_the_key() {
    let o = lantern(&["train", "--set", "ppo.clip=-1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("ppo.clip"));
}

#[test]
fn short_sync_training_run() {
    let d = tmp("train");
    let out = d.join("run");
    let o = lantern(&[
        "train",
        "--task",
        "staircase3",
        "--reward",
        "classification",
        "--beta",
        "0.4",
        "--steps",
        "8192",
        "--out",
        out.to_str().unwrap(),
        "--set",
        "mode=sync",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["config.txt", "metrics.csv", "timing.csv", "summary.json", "store.jsonl", "checkpoints/final.ckpt"] {
        assert!(out.join(f).exists(), "missing {f}");
    }
    let cfg = std::fs::read_to_string(out.join("config.txt")).unwrap();
    assert!(cfg.contains("reward.beta = 0.4"), "{cfg}");

    let plots = d.join("plots");
    let metrics = out.join("metrics.csv");
    let o = lantern(&["plot", "--out", plots.to_str().unwrap(), &format!("cls={}", metrics.display())]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(plots.join("success_rate.svg").exists());
    std::fs::remove_dir_all(d).ok();
}

#[test]
fn ranking_flags_are_accepted() {
    let d = tmp("rank");
    let out = d.join("run");
    let o = lantern(&[
        "train",
        "--reward",
        "ranking",
        "--beta",
        "0.05",
        "--nu",
        "0",
        "--steps",
        "4096",
        "--out",
        out.to_str().unwrap(),
        "--set",
        "mode=sync",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    std::fs::remove_dir_all(d).ok();
}

#[test]
fn annotate_offline_writes_store() {
    let d = tmp("offline");
    let input = d.join("dump.jsonl");
    std::fs::write(&input, "{\"caption\":\"5 gold pieces.\"}\n{\"caption\":\"The newt bites!\"}\n").unwrap();
    let output = d.join("store.jsonl");
    let o = lantern(&[
        "annotate-offline",
        "--input",
        input.to_str().unwrap(),
        "--output",
        output.to_str().unwrap(),
        "--set",
        "goal.variant=gold",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&output).unwrap();
    assert!(text.contains(r#""caption":"5 gold pieces.","label":1"#), "{text}");
    std::fs::remove_dir_all(d).ok();
}

#[test]
fn unreachable_http_backend_counts_transport_drops() {
    let d = tmp("unreachable");
    let input = d.join("dump.txt");
    std::fs::write(&input, "You kill the newt!\n").unwrap();
    let o = lantern(&[
        "annotate-offline",
        "--input",
        input.to_str().unwrap(),
        "--output",
        d.join("s.jsonl").to_str().unwrap(),
        "--annotator",
        "http",
        "--url",
        "http://127.0.0.1:9/v1/chat/completions",
    ]);
    // Every request fails at the transport level; the run completes with drops.
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("transport drops 1"));
    std::fs::remove_dir_all(d).ok();
}
