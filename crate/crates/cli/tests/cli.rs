use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn ldpcount(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ldpcount"))
        .args(args)
        .env_remove("LDPCOUNT_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn column(header: &str, name: &str) -> usize {
    header.split(',').position(|c| c == name).unwrap()
}

/// Data rows whose `key` column equals `value`.
fn rows_where<'a>(csv: &'a str, key: &str, value: &str) -> Vec<Vec<&'a str>> {
    let mut lines = csv.lines();
    let k = column(lines.next().unwrap(), key);
    lines
        .map(|l| l.split(',').collect::<Vec<_>>())
        .filter(|r| r[k] == value)
        .collect()
}

#[test]
fn triangles_in_k4() {
    let k4 = fixture("k4.txt");
    let out = ldpcount(&["count-exact", k4.to_str().unwrap(), "--kind", "triangle"]);
    assert_eq!(stdout(&out), "4\n");
}

#[test]
fn two_stars_in_a_path() {
    let p = fixture("path3.txt");
    let out = ldpcount(&["count-exact", p.to_str().unwrap(), "--kind", "2star"]);
    assert_eq!(stdout(&out), "2\n");
}

#[test]
fn all_counts_in_k4() {
    let k4 = fixture("k4.txt");
    let out = stdout(&ldpcount(&["count-exact", k4.to_str().unwrap(), "--kind", "all"]));
    assert_eq!(out, "kind,count\ntriangle,4\nquadrangle,3\ntwo-star,24\n");
}

#[test]
fn missing_file_exits_two() {
    let out = ldpcount(&["count-exact", "/definitely/not/here.txt"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no such file"));
    let out = ldpcount(&["estimate", "/definitely/not/here.txt", "--trials", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_file_is_a_runtime_failure() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "0 1\nzero two\n").unwrap();
    let out = ldpcount(&["count-exact", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn estimate_is_reproducible() {
    let k4 = fixture("k4.txt");
    let args = ["estimate", k4.to_str().unwrap(), "--trials", "4", "--seed", "9", "--mechanism", "both"];
    let a = ldpcount(&args);
    let b = ldpcount(&args);
    assert_eq!(stdout(&a), stdout(&b));
    let csv = stdout(&a);
    assert!(!csv.contains('\r'));
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("seed,estimator,mechanism,stage,epsilon"));
    // five estimators times two mechanisms
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 10);
    assert!(rows.iter().all(|r| r.starts_with("9,")));
    let other = stdout(&ldpcount(&["estimate", k4.to_str().unwrap(), "--trials", "4", "--seed", "10"]));
    assert_ne!(other.lines().nth(1), csv.lines().nth(1));
}

#[test]
fn figure_mode_sweeps_twelve_budgets_per_mechanism() {
    let k4 = fixture("k4.txt");
    let dir = tempfile::tempdir().unwrap();
    let out = ldpcount(&[
        "estimate",
        k4.to_str().unwrap(),
        "--figure",
        "--trials",
        "2",
        "--mechanism",
        "both",
        "--estimators",
        "trior,trimtr",
        "--output",
        dir.path().to_str().unwrap(),
    ]);
    stdout(&out);
    for alg in ["trior", "trimtr"] {
        let csv = std::fs::read_to_string(dir.path().join(format!("estimate_{alg}.csv"))).unwrap();
        assert_eq!(rows_where(&csv, "mechanism", "rr").len(), 12);
        assert_eq!(rows_where(&csv, "mechanism", "laplace").len(), 12);
        assert!(csv.ends_with('\n'));
    }
    assert!(!dir.path().join("estimate_quatr.csv").exists());
}

#[test]
fn stage_sweep_emits_four_series() {
    let k4 = fixture("k4.txt");
    let csv = stdout(&ldpcount(&[
        "stage-sweep",
        k4.to_str().unwrap(),
        "--trials",
        "2",
        "--eps-grid",
        "1:2:2",
    ]));
    for alg in ["tritr", "trimtr", "quatr"] {
        let rows = rows_where(&csv, "estimator", alg);
        assert_eq!(rows.len(), 8);
        let stage = column(csv.lines().next().unwrap(), "stage");
        let mut stages: Vec<&str> = rows.iter().map(|r| r[stage]).collect();
        stages.dedup();
        assert_eq!(stages, ["1", "2", "3", "4"]);
    }
    let out = ldpcount(&["stage-sweep", k4.to_str().unwrap(), "--estimators", "trior"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn flags_override_config_and_dump_round_trips() {
    let conf = fixture("small.conf");
    let k4 = fixture("k4.txt");
    let dump = stdout(&ldpcount(&[
        "estimate",
        k4.to_str().unwrap(),
        "--config",
        conf.to_str().unwrap(),
        "--epsilon",
        "0.5",
        "--dump-config",
    ]));
    assert!(dump.contains("epsilon = 0.5\n"));
    assert!(dump.contains("estimators = tritr,trimtr\n"));
    assert!(dump.contains("seed = 5\n"));

    let dir = tempfile::tempdir().unwrap();
    let saved = dir.path().join("run.conf");
    std::fs::write(&saved, &dump).unwrap();
    let again = stdout(&ldpcount(&["estimate", "--config", saved.to_str().unwrap(), "--dump-config"]));
    assert_eq!(again, dump);

    let direct = stdout(&ldpcount(&[
        "estimate",
        k4.to_str().unwrap(),
        "--config",
        conf.to_str().unwrap(),
        "--epsilon",
        "0.5",
    ]));
    let replay = stdout(&ldpcount(&["estimate", "--config", saved.to_str().unwrap()]));
    assert_eq!(direct, replay);
    assert_eq!(rows_where(&direct, "epsilon", "0.5").len(), 2);

    let seeded = stdout(&ldpcount(&["estimate", "--config", saved.to_str().unwrap(), "--seed", "6", "--dump-config"]));
    assert!(seeded.contains("seed = 6\n"));
}

#[test]
fn config_errors_are_reported_together() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("bad.conf");
    std::fs::write(&conf, "epsilon = -2\nbeta = 7\ncolour = blue\n").unwrap();
    let out = ldpcount(&["estimate", "--config", conf.to_str().unwrap(), "--stage", "9"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    for needle in ["epsilon", "beta", "colour", "stage", "dataset"] {
        assert!(err.contains(needle), "{needle} missing from: {err}");
    }
    assert_eq!(err.lines().filter(|l| l.starts_with("error:")).count(), 5);
}

#[test]
fn attack_rows_match_closed_forms() {
    let dir = tempfile::tempdir().unwrap();
    let out = ldpcount(&["attack", "--eps", "1", "--p", "0.1,0.5", "--output", dir.path().to_str().unwrap()]);
    stdout(&out);
    let read = |n: &str| std::fs::read_to_string(dir.path().join(n)).unwrap();
    let num = |s: &str| s.parse::<f64>().unwrap();

    let tradeoff = read("tradeoff.csv");
    let infl = rows_where(&tradeoff, "point", "inflection");
    assert_eq!(infl.len(), 1);
    assert!((num(infl[0][4]) - 0.2689).abs() < 5e-5 && (num(infl[0][5]) - 0.2689).abs() < 5e-5);
    let k2 = rows_where(&tradeoff, "point", "kappa2");
    assert!((num(k2[0][4]) - 0.3033).abs() < 5e-5 && (num(k2[0][5]) - 0.3033).abs() < 5e-5);

    let confusion = read("confusion.csv");
    let lap2 = rows_where(&confusion, "strategy", "lap-k2");
    assert_eq!(lap2.len(), 2);
    let h = confusion.lines().next().unwrap();
    for r in &lap2 {
        assert!((num(r[column(h, "type1")]) - 0.3033).abs() < 5e-5);
        assert!((num(r[column(h, "type2")]) - 0.3033).abs() < 5e-5);
    }

    let variance = read("variance.csv");
    let row: Vec<&str> = variance.lines().nth(1).unwrap().split(',').collect();
    assert!((num(row[2]) - 0.9207).abs() < 1e-4);
    assert_eq!(num(row[3]), 2.0);
    assert_eq!(num(row[4]), 2.0 * num(row[2]));
}

#[test]
fn attack_monte_carlo_columns_track_the_analytic_ones() {
    let csv = stdout(&ldpcount(&["attack", "--eps", "1", "--p", "0.5", "--draws", "200000", "--series", "confusion"]));
    let h = csv.lines().next().unwrap();
    for r in csv.lines().skip(1) {
        let r: Vec<f64> = r.split(',').skip(2).map(|x| x.parse().unwrap()).collect();
        let off = |name: &str| r[column(h, name) - 2];
        assert!((off("type1") - off("mc_type1")).abs() < 0.01);
        assert!((off("type2") - off("mc_type2")).abs() < 0.01);
    }
    let again = stdout(&ldpcount(&["attack", "--eps", "1", "--p", "0.5", "--draws", "200000", "--series", "confusion"]));
    assert_eq!(csv, again);
}

#[test]
fn invalid_attack_grid_exits_two() {
    let out = ldpcount(&["attack", "--eps", "0:1:3", "--p", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(String::from_utf8_lossy(&out.stderr).lines().count(), 2);
}

#[test]
fn download_cost_on_k4() {
    let k4 = fixture("k4.txt");
    let csv = stdout(&ldpcount(&["cost", k4.to_str().unwrap()]));
    let h = csv.lines().next().unwrap();
    let bytes = column(h, "cost_dl_bytes");
    let get = |alg: &str| rows_where(&csv, "estimator", alg)[0][bytes].to_string();
    assert_eq!(get("tritr"), "128");
    assert_eq!(get("quatr"), "128");
    assert_eq!(get("trimtr"), "32");
    assert_eq!(get("trior"), "0");
    assert_eq!(get("2star"), "0");
}

#[test]
fn seed_comes_from_the_environment() {
    let k4 = fixture("k4.txt");
    let out = Command::new(env!("CARGO_BIN_EXE_ldpcount"))
        .args(["cost", k4.to_str().unwrap(), "--estimators", "tritr"])
        .env("LDPCOUNT_SEED", "4242")
        .output()
        .unwrap();
    let csv = stdout(&out);
    assert!(csv.lines().skip(1).all(|l| l.starts_with("4242,")));
}

#[test]
fn joint_run_spends_the_summed_budget() {
    let k4 = fixture("k4.txt");
    let csv = stdout(&ldpcount(&["joint", k4.to_str().unwrap(), "--trials", "3"]));
    let h = csv.lines().next().unwrap();
    let kinds: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').nth(column(h, "kind")).unwrap()).collect();
    assert_eq!(kinds, ["triangle", "quadrangle", "two-star"]);
    for l in csv.lines().skip(1) {
        let r: Vec<&str> = l.split(',').collect();
        assert!((r[column(h, "ledger_total")].parse::<f64>().unwrap() - 1.1).abs() < 1e-9);
        assert_eq!(r[column(h, "cost_dl_bytes")], "128");
    }
}

#[test]
fn large_graphs_need_acknowledgement() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("long_path.txt");
    let text: String = (0..8000).map(|i| format!("{i} {}\n", i + 1)).collect();
    std::fs::write(&path, text).unwrap();
    let p = path.to_str().unwrap();
    let out = ldpcount(&["cost", p, "--estimators", "trimtr"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--large"));
    // 2-stars never build a dense matrix
    stdout(&ldpcount(&["cost", p, "--estimators", "2star"]));
    assert_eq!(stdout(&ldpcount(&["count-exact", p, "--kind", "2star"])), "15998\n");
}
