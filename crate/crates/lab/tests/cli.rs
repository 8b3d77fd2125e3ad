use std::path::Path;
use std::process::{Command, Output};

const SMALL: [&str; 6] = ["--n", "2000", "--table-horizon", "5000", "--seed", "7"];

fn dslab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dslab")).args(args).output().expect("run dslab")
}

fn ok(args: &[&str]) -> Output {
    let out = dslab(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

fn data_lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

fn column<'a>(text: &'a str, name: &str) -> Vec<Vec<&'a str>> {
    data_lines(text).into_iter().skip(1).map(|l| l.split(',').collect::<Vec<_>>()).filter(|f| f[0] == name).collect()
}

#[test]
fn rerun_and_replay_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let c = dir.path().join("c.csv");
    let mut args = vec!["sweep", "--rho", "0.3,0.6", "--y", "1", "--y", "2", "--reps", "60"];
    args.extend(SMALL);
    let run = |out: &Path, extra: &[&str]| {
        let mut v = args.clone();
        v.extend(extra);
        v.extend(["--out", out.to_str().unwrap()]);
        ok(&v);
    };
    run(&a, &[]);
    run(&b, &[]);
    assert_eq!(read(&a), read(&b));
    ok(&["--config", a.to_str().unwrap(), "--out", c.to_str().unwrap()]);
    assert_eq!(read(&a), read(&c));

    let text = read(&a);
    assert_eq!(column(&text, "block_exceedance_rate").len(), 4);
    assert_eq!(column(&text, "y_scaling_ratio").len(), 2);
    let verdicts = column(&text, "sweep_ordering");
    assert_eq!(verdicts.len(), 2);
    assert!(["decreasing", "not-decreasing"].contains(&verdicts[0][11]));
    let plot = read(&dir.path().join("a.plot.csv"));
    assert!(plot.starts_with("x,y,ci_lo,ci_hi\n"));
    assert_eq!(plot.lines().count(), 3);
    let meta: serde_json::Value = serde_json::from_str(&read(&dir.path().join("a.meta.json"))).unwrap();
    assert_eq!(meta["command"], "sweep");
    assert!(meta["wall_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn results_do_not_depend_on_parallelism() {
    let dir = tempfile::tempdir().unwrap();
    let mut outs = Vec::new();
    for threads in ["1", "4"] {
        let path = dir.path().join(format!("t{threads}.csv"));
        let mut v = vec!["macro", "--reps", "40", "--trend-n", "1000", "--parallelism", threads];
        v.extend(SMALL);
        v.extend(["--out", path.to_str().unwrap()]);
        ok(&v);
        outs.push(read(&path));
    }
    assert_eq!(data_lines(&outs[0]), data_lines(&outs[1]));
    assert_eq!(column(&outs[0], "running_max_cdf").len(), 4);
    assert_eq!(column(&outs[0], "cluster_flatness_trend").len(), 2);
}

#[test]
fn jsonl_output_replays() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    let mut v = vec!["tailproc", "--reps", "2000", "--format", "jsonl", "--out", a.to_str().unwrap()];
    v.extend(SMALL);
    ok(&v);
    ok(&["--config", a.to_str().unwrap(), "--out", b.to_str().unwrap()]);
    let text = read(&a);
    assert_eq!(text, read(&b));
    let rows: Vec<serde_json::Value> = text.lines().skip(1).map(|l| serde_json::from_str(l).unwrap()).collect();
    let names: Vec<&str> = rows.iter().map(|r| r["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["candidate_index", "common_count_mean", "common_count_gof_p", "two_sided_count_gof_p"]);
    assert_eq!(rows[0]["target_provenance"], "qF2");
    assert!(rows.iter().all(|r| r["seed"] == 7));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# small run\ncommand=ac\nn=2000\nrho=0.5\nreps=10\nseed=3\n").unwrap();
    let out = ok(&["--config", cfg.to_str().unwrap(), "--reps", "30"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("#@ reps=30\n"));
    assert!(text.contains("#@ seed=3\n"));
    // lags 1, d/8, d/4, d/2, 3d/4 with d = 44
    assert_eq!(column(&text, "ac_profile").len(), 5);
}

#[test]
fn hitprob_and_sums_rows() {
    let mut v = vec!["hitprob", "--rho", "0.5", "--reps", "40000"];
    v.extend(SMALL);
    let text = String::from_utf8(ok(&v).stdout).unwrap();
    for name in ["hit_single", "hit_pair"] {
        let row = &column(&text, name)[0];
        let z: f64 = row[8].parse().unwrap();
        assert!(z.abs() < 4.0, "{name} z = {z}");
    }
    let mut v = vec!["sums", "--reps", "200"];
    v.extend(SMALL);
    let text = String::from_utf8(ok(&v).stdout).unwrap();
    let ks: f64 = column(&text, "partial_sum_ks_distance")[0][3].parse().unwrap();
    assert!((0.0..=1.0).contains(&ks));
}

#[test]
fn parameter_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad_cfg = dir.path().join("bad.cfg");
    std::fs::write(&bad_cfg, "command=sweep\nspeed=3\n").unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec![],
        vec!["sweep", "--rho", "1.5"],
        vec!["sweep", "--rho", ""],
        vec!["sweep", "--reps", "many"],
        vec!["macro", "--m", "1"],
        vec!["constants", "--n", "10000", "--table-horizon", "5000"],
        vec!["--config", bad_cfg.to_str().unwrap()],
        vec!["--config", "/nonexistent/run.cfg"],
        vec!["sweep", "--unknown-flag"],
        vec!["sweep", "--format", "xml"],
    ];
    for args in cases {
        let out = dslab(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn table_cache_is_reused() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let args = ["constants", "--n", "1000", "--table-horizon", "3000", "--cache-dir", cache.to_str().unwrap()];
    let first = ok(&args).stdout;
    assert_eq!(std::fs::read_dir(&cache).unwrap().count(), 1);
    let second = ok(&args).stdout;
    assert_eq!(first, second);
    let fresh = ok(&args[..5]).stdout;
    assert_eq!(data_lines(&String::from_utf8(first).unwrap()), data_lines(&String::from_utf8(fresh).unwrap()));
}
