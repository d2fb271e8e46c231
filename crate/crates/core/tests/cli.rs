use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_badcavity")).args(args).output().unwrap()
}

fn sweep(out: &Path, threads: &str) -> Output {
    run(&[
        "sweep",
        "--n",
        "40",
        "--gamma",
        "0.1",
        "--grid",
        "0.05:0.2:7",
        "--threads",
        threads,
        "--out",
        out.to_str().unwrap(),
    ])
}

#[test]
fn sweep_is_reproducible_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (dir.path().join("a.csv"), dir.path().join("b.csv"), dir.path().join("c.csv"));
    for (path, threads) in [(&a, "1"), (&b, "1"), (&c, "3")] {
        let o = sweep(path, threads);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    assert_eq!(text, fs::read_to_string(&c).unwrap());
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "w,jz_mean,jz_var,jpjm,sf,xi2,g2,method,n_atoms");
    assert_eq!(lines.len(), 8);
    assert!(lines[1].ends_with(",ed,40"));
}

#[test]
fn sidecar_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first.json");
    let o = run(&[
        "steady",
        "--n",
        "30",
        "--w",
        "0.12",
        "--alpha",
        "0.5",
        "--method",
        "cumulant3",
        "--out",
        first.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let meta = dir.path().join("first.json.meta.json");
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&meta).unwrap()).unwrap();
    assert_eq!(v["command"], "steady");
    assert_eq!(v["config"]["method"], "cumulant3");

    let second = dir.path().join("second.json");
    let o = run(&["steady", "--config", meta.to_str().unwrap(), "--out", second.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read_to_string(&first).unwrap(), fs::read_to_string(&second).unwrap());
}

#[test]
fn partial_failures_keep_completed_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    let o = run(&[
        "sweep",
        "--n",
        "1000",
        "--method",
        "analytic",
        "--grid",
        "0.05:1.5:4",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(fs::read_to_string(&out).unwrap().lines().count(), 4);
    let failures: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("s.csv.failures.json")).unwrap()).unwrap();
    assert_eq!(failures.as_array().unwrap().len(), 1);
    assert_eq!(failures[0]["w"], 1.5);
}

#[test]
fn configuration_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"n_atoms": 10, "w": 0.1, "colour": "red"}"#).unwrap();
    assert_eq!(run(&["steady", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(run(&["steady", "--n", "10", "--w", "-1"]).status.code(), Some(2));
    assert_eq!(run(&["steady", "--n", "10", "--w", "0.1", "--jmax", "2", "--jmax-auto"]).status.code(), Some(2));
}

#[test]
fn oracle_check_and_rate_dump() {
    let o = run(&["oracle-check", "--n", "3", "--w", "0.2", "--t2-inv", "0.1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("field,ed,oracle,abs_diff"));

    let o = run(&["dump-rates", "--n", "2", "--w", "0.2"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    // Every column of the generator sums to zero.
    let mut sums = [0.0f64; 4];
    for r in &rows {
        let f: Vec<&str> = r.split(',').collect();
        sums[f[1].parse::<usize>().unwrap()] += f[6].parse::<f64>().unwrap();
    }
    assert!(sums.iter().all(|s| s.abs() < 1e-12), "{sums:?}");
}

#[test]
fn scaling_and_inhom_commands() {
    let o = run(&["scaling", "--n-list", "100,200,400", "--method", "cumulant2", "--bracket", "0.8:1.6"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.ends_with(",cumulant2")).count(), 3);
    assert!(text.lines().last().unwrap().starts_with("# {\"fit\":{"));

    let o = run(&["inhom", "--n", "1000", "--bins", "5", "--grid", "0.05:0.15:3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().next().unwrap(), "w,jz_mean,power,sf,method,n_atoms,bins");
    assert_eq!(text.lines().count(), 4);
}
