use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fus::io;
use fus::sequence::read_manifest;

fn fus(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fus"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn generate(root: &Path, name: &str, kind: &str, seed: &str, frames: &str) -> PathBuf {
    let out = root.join(name);
    let o = fus(&[
        "generate",
        "--kind",
        kind,
        "--seed",
        seed,
        "--frames",
        frames,
        "--out",
        path(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

fn tree(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((
                    p.strip_prefix(dir).unwrap().to_path_buf(),
                    std::fs::read(&p).unwrap(),
                ));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn generate_is_byte_identical_for_the_same_seed() {
    let root = tempfile::tempdir().unwrap();
    let a = generate(root.path(), "a", "door", "5", "4");
    let b = generate(root.path(), "b", "door", "5", "4");
    let c = generate(root.path(), "c", "door", "6", "4");
    assert_eq!(tree(&a), tree(&b));
    assert_ne!(tree(&a), tree(&c));
}

#[test]
fn drawer_manifest_lists_its_parts() {
    let root = tempfile::tempdir().unwrap();
    let dir = generate(root.path(), "d", "drawer", "1", "2");
    let manifest = read_manifest(&dir).unwrap();
    assert_eq!(manifest.parts, ["base", "facade", "handle"]);
    assert_eq!(manifest.frames, 2);
    assert_eq!(manifest.generation.seed, 1);
}

#[test]
fn missing_kind_names_the_field_and_leaves_nothing_behind() {
    let root = tempfile::tempdir().unwrap();
    let out = root.path().join("x");
    let o = fus(&["generate", "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(1));
    let msg = String::from_utf8_lossy(&o.stderr);
    assert!(msg.contains("scenes") && msg.contains("--kind"), "{msg}");
    assert_eq!(std::fs::read_dir(root.path()).unwrap().count(), 0);

    let cfg = root.path().join("c.json");
    std::fs::write(&cfg, r#"{ "scenes": [ { "options": { "frames": 2 } } ] }"#).unwrap();
    let o = fus(&["generate", "--config", path(&cfg), "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing field `kind`"));
}

#[test]
fn usage_and_data_errors_use_distinct_exit_codes() {
    let root = tempfile::tempdir().unwrap();
    assert_eq!(
        fus(&["generate", "--kind", "window"]).status.code(),
        Some(1)
    );
    assert_eq!(fus(&["frobnicate"]).status.code(), Some(1));
    let o = fus(&[
        "sample",
        "--sequence",
        path(&root.path().join("nope")),
        "--out",
        path(&root.path().join("s")),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!root.path().join("s").exists());
}

#[test]
fn a_non_empty_output_directory_is_refused() {
    let root = tempfile::tempdir().unwrap();
    let dir = generate(root.path(), "seq", "door", "1", "2");
    let before = tree(&dir);
    let o = fus(&["generate", "--kind", "faucet", "--out", path(&dir)]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(tree(&dir), before);
}

#[test]
fn sample_writes_parts_times_budget_and_reruns_identically() {
    let root = tempfile::tempdir().unwrap();
    let seq = generate(root.path(), "seq", "door", "2", "5");
    let run = |name: &str, strategy: &str| {
        let out = root.path().join(name);
        let o = fus(&[
            "sample",
            "--sequence",
            path(&seq),
            "--strategy",
            strategy,
            "--seed",
            "7",
            "--out",
            path(&out),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        out
    };
    let a = run("a", "FUS");
    let b = run("b", "FUS");
    assert_eq!(tree(&a), tree(&b));
    for t in 0..5 {
        let v = io::read_ply(&a.join("frames").join(format!("{t:04}.ply"))).unwrap();
        assert_eq!(v.len(), 3 * 32, "frame {t}");
        for part in 1..=3u8 {
            assert_eq!(v.iter().filter(|p| p.part.0 == part).count(), 32);
        }
    }
    let u = run("u", "UniformDownsample");
    for t in 0..5 {
        let v = io::read_ply(&u.join("frames").join(format!("{t:04}.ply"))).unwrap();
        assert_eq!(v.len(), 1024);
    }
}

#[test]
fn evaluate_scores_every_frame_and_part() {
    let root = tempfile::tempdir().unwrap();
    let seq = generate(root.path(), "seq", "faucet", "3", "4");
    let samples = root.path().join("s");
    assert!(
        fus(&["sample", "--sequence", path(&seq), "--out", path(&samples)])
            .status
            .success()
    );
    let out = root.path().join("e");
    let o = fus(&[
        "evaluate",
        "--sequence",
        path(&seq),
        "--samples",
        path(&samples),
        "--out",
        path(&out),
        "--format",
        "json",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows: Vec<fus::harness::MetricRow> = io::read_json(&out.join("metrics.json")).unwrap();
    // faucet: base and handle
    assert_eq!(rows.len(), 4 * 2);
    assert!(rows.iter().all(|r| r.frame == 0 || r.consistency.is_some()));
    assert!(out.join("summary.json").exists() && out.join("manifest.json").exists());

    let other = generate(root.path(), "other", "faucet", "4", "4");
    let o = fus(&[
        "evaluate",
        "--sequence",
        path(&other),
        "--samples",
        path(&samples),
        "--out",
        path(&root.path().join("e2")),
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn compare_covers_the_grid_and_rejects_an_empty_strategy_list() {
    let root = tempfile::tempdir().unwrap();
    let out = root.path().join("c");
    let o = fus(&[
        "compare",
        "--kind",
        "door",
        "--seeds",
        "2",
        "--strategies",
        "FUS,Random",
        "--workers",
        "2",
        "--out",
        path(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value = io::read_json(&out.join("summary.json")).unwrap();
    let aggregates = summary["aggregates"].as_array().unwrap();
    for strategy in ["FUS", "Random"] {
        assert!(aggregates
            .iter()
            .any(|a| a["strategy"] == strategy && a["part_name"] == "handle"));
    }
    assert_eq!(summary["cells"], 4);
    let csv = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    // header + 2 strategies x 2 seeds x 20 frames x 3 parts
    assert_eq!(csv.lines().count(), 1 + 2 * 2 * 20 * 3);

    let cfg = root.path().join("empty.json");
    std::fs::write(&cfg, r#"{ "strategies": [] }"#).unwrap();
    let o = fus(&[
        "compare",
        "--config",
        path(&cfg),
        "--kind",
        "door",
        "--out",
        path(&root.path().join("e")),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("strategy list is empty"));
}

#[test]
fn ablation_flag_runs_the_three_fus_variants() {
    let root = tempfile::tempdir().unwrap();
    let seq = generate(root.path(), "seq", "drawer", "1", "3");
    let out = root.path().join("c");
    let o = fus(&[
        "compare",
        "--sequence",
        path(&seq),
        "--ablation",
        "--seeds",
        "1",
        "--out",
        path(&out),
        "--format",
        "json",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows: Vec<fus::harness::MetricRow> = io::read_json(&out.join("metrics.json")).unwrap();
    let mut names: Vec<String> = rows.iter().map(|r| r.strategy.to_string()).collect();
    names.dedup();
    assert_eq!(names, ["FUS", "FUS-no-uncertainty", "FUS-no-consistency"]);
}

#[test]
fn compare_marks_failed_cells_and_exits_nonzero() {
    let root = tempfile::tempdir().unwrap();
    let good = generate(root.path(), "good", "door", "1", "2");
    let bad = generate(root.path(), "bad", "door", "2", "2");
    std::fs::write(bad.join("prob").join("0001.bin"), b"junk").unwrap();
    let out = root.path().join("c");
    let o = fus(&[
        "compare",
        "--sequence",
        path(&good),
        "--sequence",
        path(&bad),
        "--strategies",
        "Random",
        "--seeds",
        "1",
        "--out",
        path(&out),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let summary: serde_json::Value = io::read_json(&out.join("summary.json")).unwrap();
    assert_eq!(summary["failures"].as_array().unwrap().len(), 1);
    assert!(summary["failures"][0]["error"]
        .as_str()
        .unwrap()
        .contains("frame 1"));
    let csv = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 3);
}
