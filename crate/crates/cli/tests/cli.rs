use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dispersive"))
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn zero_scenario_writes_zero_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("zero");
    let o = run(&["solve", "--scenario", path_str(&scenario("zero.toml")), "--out", path_str(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("solution.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,x,re,im");
    for line in lines {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!((cols[2], cols[3]), (0.0, 0.0), "{line}");
    }
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert!(report.is_object());
    assert!(!std::fs::read_to_string(out.join("trace.jsonl")).unwrap().is_empty());
}

#[test]
fn malformed_scenario_exits_2_without_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "n_points = 64\nlength = \"sixteen\"\n").unwrap();
    let out = dir.path().join("out");
    let o = run(&["solve", "--scenario", path_str(&bad), "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("PARSE"));
    assert!(!out.exists());

    let uuxx = std::fs::read_to_string(scenario("zero.toml")).unwrap().replace("a1 = 1", "a2 = 1");
    let path = dir.path().join("uuxx.toml");
    std::fs::write(&path, uuxx).unwrap();
    let o = run(&["solve", "--scenario", path_str(&path), "--out", path_str(&out)]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("PRESENCE_OF_UUXX"), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!out.exists());

    let o = run(&["solve", "--scenario", path_str(&dir.path().join("missing.toml")), "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn probe_prints_json_and_rejects_unknown_tags() {
    let o = run(&["probe", "--tag", "est:alg", "--trials", "1", "--seed", "5"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["trials"], 1);
    assert_eq!(v["tag"], "alg");
    let o = run(&["probe", "--tag", "est:nothing", "--trials", "1"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn diagnose_reads_a_field_file() {
    let dir = tempfile::tempdir().unwrap();
    let field = dir.path().join("a.csv");
    let mut text = String::from("x,re,im\n");
    for i in 0..64 {
        text.push_str(&format!("{},0,0\n", -8.0 + 0.25 * i as f64));
    }
    std::fs::write(&field, &text).unwrap();
    let o = run(&["diagnose", path_str(&field), "--s", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["mizohata"], 0.0);
    assert_eq!(v["l2"], 0.0);

    std::fs::write(&field, "x,re\n0,1\n").unwrap();
    assert_eq!(run(&["diagnose", path_str(&field)]).status.code(), Some(2));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let files = ["solution.csv", "trace.jsonl", "report.json"];
    let mut outputs = Vec::new();
    for (i, threads) in ["1", "1", "2"].iter().enumerate() {
        let out = dir.path().join(format!("run{i}"));
        let o = run(&[
            "--threads",
            threads,
            "solve",
            "--scenario",
            path_str(&scenario("kdv_soliton.toml")),
            "--out",
            path_str(&out),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        outputs.push(files.map(|f| std::fs::read(out.join(f)).unwrap()));
    }
    assert!(outputs[0] == outputs[1], "repeat at --threads 1 differs");
    assert!(outputs[0] == outputs[2], "--threads 2 differs");
    let probe = |threads: &str| run(&["--threads", threads, "probe", "--tag", "bil", "--trials", "3", "--seed", "9"]).stdout;
    assert_eq!(probe("1"), probe("1"));
    assert_eq!(probe("1"), probe("3"));
}

#[test]
fn version_and_thread_flag() {
    let o = run(&["version"]);
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("dispersive "));
    assert_eq!(run(&["--threads", "0", "version"]).status.code(), Some(4));
}
