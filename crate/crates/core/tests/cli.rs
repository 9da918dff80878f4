//! The `treegrad` binary end to end.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_treegrad"))
        .args(args)
        .current_dir(root())
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn convert_reports_full_fidelity() {
    let tmp = tempfile::tempdir().unwrap();
    for name in ["binary_100tree", "multiclass_100tree"] {
        let out = tmp.path().join(name);
        let fx = format!("fixtures/{name}");
        let o = run(&[
            "convert",
            "--model",
            &format!("{fx}/model.txt"),
            "--calib",
            &format!("{fx}/samples.csv"),
            "--out",
            s(&out),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        assert!(stdout(&o).contains("fidelity: 1.0"), "{}", stdout(&o));
        assert!(out.join("model.json").exists() && out.join("config.json").exists());
    }
}

#[test]
fn bad_input_path_exits_two_without_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let o = run(&["convert", "--model", "no/such/model.txt", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn missing_manifest_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&[
        "train",
        "--model",
        "fixtures/glass_lgbm/model.txt",
        "--manifest",
        "no/such/manifest.json",
        "--dataset",
        "glass",
        "--out",
        s(&tmp.path().join("o")),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn smoke_convert_train_evaluate_export() {
    let tmp = tempfile::tempdir().unwrap();
    let (c, t, e) = (tmp.path().join("c"), tmp.path().join("t"), tmp.path().join("x"));
    let o = run(&["convert", "--model", "fixtures/glass_lgbm/model.txt", "--out", s(&c)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let ckpt = c.join("model.json");
    let o = run(&[
        "train", "--model", s(&ckpt), "--data", "data/glass.csv", "--label", "type", "--epochs", "1", "--out", s(&t),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let history = std::fs::read_to_string(t.join("history.jsonl")).unwrap();
    assert_eq!(history.lines().count(), 1);

    let o = run(&["evaluate", "--model", s(&t.join("model.json")), "--data", "data/glass.csv", "--label", "type"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let m: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert!(m["accuracy"].as_f64().unwrap() > 0.5);

    // a converted model exports; a trained (oblique) one is a state error
    let o = run(&["export", "--model", s(&ckpt), "--out", s(&e)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(e.join("tree_model.json").exists());
    let bad = tmp.path().join("bad");
    let o = run(&["export", "--model", s(&t.join("model.json")), "--out", s(&bad)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("oblique"), "{}", stderr(&o));
    assert!(!bad.exists());
}

#[test]
fn reruns_are_byte_identical_except_timestamp() {
    let tmp = tempfile::tempdir().unwrap();
    let dirs: Vec<PathBuf> = (0..2).map(|i| tmp.path().join(format!("r{i}"))).collect();
    for d in &dirs {
        let o = run(&[
            "train",
            "--model",
            "fixtures/glass_lgbm/model.txt",
            "--data",
            "data/glass.csv",
            "--label",
            "type",
            "--reinit",
            "--num-trees",
            "12",
            "--epochs",
            "2",
            "--seed",
            "5",
            "--threads",
            "2",
            "--out",
            s(d),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    for f in ["model.json", "history.jsonl", "metrics.json"] {
        let a = std::fs::read(dirs[0].join(f)).unwrap();
        assert_eq!(a, std::fs::read(dirs[1].join(f)).unwrap(), "{f}");
    }
    let strip = |d: &Path| {
        let mut v: serde_json::Value = serde_json::from_slice(&std::fs::read(d.join("config.json")).unwrap()).unwrap();
        v.as_object_mut().unwrap().remove("created_unix").expect("timestamp field");
        // the runs differ only in where they write
        v["args"]["fit"]["out"] = serde_json::Value::Null;
        v
    };
    assert_eq!(strip(&dirs[0]), strip(&dirs[1]));
}

#[test]
fn numerical_failure_exits_four_and_cleans_up() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let o = run(&[
        "train", "--model", "fixtures/depth2/model.txt", "--data", "data/glass.csv", "--label", "type", "--out",
        s(&out),
    ]);
    // depth2 reads 4 features, glass has 9
    assert_eq!(o.status.code(), Some(2));
    let o = run(&[
        "train",
        "--model",
        "fixtures/glass_lgbm/model.txt",
        "--data",
        "data/glass.csv",
        "--label",
        "type",
        "--num-trees",
        "6",
        "--lr",
        "1e300",
        "--epochs",
        "3",
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    assert!(stderr(&o).contains("non-finite loss"));
    assert!(!out.exists());
}

#[test]
fn sparsify_yields_axis_parallel_model() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("s");
    let o = run(&[
        "sparsify",
        "--model",
        "fixtures/glass_lgbm/model.txt",
        "--data",
        "data/glass.csv",
        "--label",
        "type",
        "--reinit",
        "--single-tree",
        "--epochs",
        "20",
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("fine_tuned"));
    let o = run(&["export", "--model", s(&out.join("model.json")), "--out", s(&tmp.path().join("e"))]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn report_reproduces_rank_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("r");
    let o = run(&["report", "--table", "data/benchmark_accuracy.json", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("0.762      0.452      0.619"), "{text}");
    assert!(text.contains("0.762      0.714      0.429"), "{text}");
    let r: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(r["sections"][0]["wins"], serde_json::json!([4, 1, 2]));
    assert_eq!(r["sections"][1]["wins"], serde_json::json!([4, 3, 1]));
}
