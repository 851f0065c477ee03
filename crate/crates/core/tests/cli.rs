//! End-to-end checks of the `localvote` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn localvote(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_localvote"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn small(out: &Path) -> Vec<String> {
    [
        "--nodes", "12", "--area", "400", "--radius", "180", "--connections", "3",
        "--packets", "8", "--interval", "4", "--slots", "16", "--jobs", "1",
    ]
    .iter()
    .map(|s| s.to_string())
    .chain(["--out".to_string(), out.display().to_string()])
    .collect()
}

fn run(args: &[String]) -> Output {
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    localvote(&refs)
}

#[test]
fn single_run_writes_one_summary_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r");
    let mut args = small(&out);
    args.extend(["--scheduler", "lqf", "--seeds", "7"].map(String::from));
    let o = run(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("scheduler,seed,"));
    assert!(lines[1].starts_with("lqf,7,12,3,16,"));
    assert!(out.join("plot_lqf.dat").is_file());
    assert!(!out.join("plot_coloring.dat").exists());
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let read = |name: &str| {
        let out = dir.path().join(name);
        let mut args = small(&out);
        args.extend(["--seeds", "1-3", "--logs", "true"].map(String::from));
        assert!(run(&args).status.success());
        (
            fs::read(out.join("summary.csv")).unwrap(),
            fs::read(out.join("aggregate.csv")).unwrap(),
            fs::read(out.join("runs/local-voting_c3_i4_seed2_trace.csv")).unwrap(),
        )
    };
    assert_eq!(read("a"), read("b"));
}

#[test]
fn invalid_interval_is_rejected_by_name() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = small(&dir.path().join("r"));
    let at = args.iter().position(|a| a == "--interval").unwrap();
    args[at + 1] = "0".into();
    let o = run(&args);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("--interval"), "{err}");
    assert!(!dir.path().join("r/summary.csv").exists());
}

#[test]
fn topology_file_conflicts_with_geometry_flags() {
    let o = localvote(&["--topology-file", "t.txt", "--nodes", "10"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("cannot be used with"));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.conf");
    let out = dir.path().join("r");
    fs::write(
        &cfg,
        format!(
            "# small sweep\nnodes = 12\narea = 400\nradius = 180\nconnections = 3\n\
             packets = 8\ninterval = 4\nslots = 16\nscheduler = coloring\nseeds = 1,2\nout = {}\n",
            out.display()
        ),
    )
    .unwrap();
    let o = localvote(&["--config", cfg.to_str().unwrap(), "--seeds", "5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    let rows: Vec<&str> = summary.lines().skip(1).collect();
    assert_eq!(rows.len(), 1);
    assert!(rows[0].starts_with("coloring,5,"));
    let echoed = fs::read_to_string(out.join("config.txt")).unwrap();
    assert!(echoed.lines().any(|l| l == "seeds=5"), "{echoed}");
}

#[test]
fn unknown_config_key_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.conf");
    fs::write(&cfg, "nodes = 12\nspeed = 3\n").unwrap();
    let o = localvote(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("speed") && err.contains("line 2"), "{err}");
}

#[test]
fn frame_cap_hit_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = small(&dir.path().join("r"));
    args.extend(["--scheduler", "coloring", "--seeds", "1", "--frame-cap", "1"].map(String::from));
    let o = run(&args);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("frame cap reached"));
    let summary = fs::read_to_string(dir.path().join("r/summary.csv")).unwrap();
    let row = summary.lines().nth(1).unwrap();
    assert!(row.starts_with("coloring,1,"), "{row}");
    assert!(row.ends_with(",24"), "{row}");
}

#[test]
fn topology_file_runs() {
    let dir = tempfile::tempdir().unwrap();
    let topo = dir.path().join("ring.txt");
    fs::write(&topo, "# ring\n6\n0 1\n1 2\n2 3\n3 4\n4 5\n0 5\n").unwrap();
    let out = dir.path().join("r");
    let o = localvote(&[
        "--topology-file", topo.to_str().unwrap(), "--connections", "2", "--packets", "5",
        "--slots", "8", "--seeds", "3", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 3);
}
