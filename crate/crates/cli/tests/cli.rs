use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn tcalab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tcalab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

/// Data rows of an output CSV, skipping the provenance comment and header.
fn rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path).unwrap();
    r.records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect()
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

fn run_ok(args: &[&str]) {
    let out = tcalab(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn row<'a>(table: &'a [Vec<String>], first: &str) -> &'a [String] {
    table.iter().find(|r| r[0] == first).unwrap()
}

#[test]
fn simulate_scenario_one_looks_gaussian() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(
        tmp.path(),
        "c.json",
        r#"{"order": {"intervals": 13}, "scenario": 1, "budget": {"path_count": 10000}}"#,
    );
    let out = tmp.path().join("o");
    run_ok(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    for f in ["costs.csv", "hist.csv", "moments.csv", "fits.csv", "ks.csv"] {
        let text = std::fs::read_to_string(out.join(f)).unwrap();
        assert!(
            text.starts_with("# seed=1, paths=10000, scenario=arithmetic/"),
            "{f}: {text:.80}"
        );
    }
    let ks = rows(&out.join("ks.csv"));
    assert_eq!(row(&ks, "gaussian")[3], "false");
    let m = rows(&out.join("moments.csv"));
    assert!((num(&row(&m, "mean")[1]) + 0.71).abs() < 0.03);
    assert_eq!(rows(&out.join("costs.csv")).len(), 10_000);
    let hist_total: usize = rows(&out.join("hist.csv"))
        .iter()
        .map(|r| r[2].parse::<usize>().unwrap())
        .sum();
    assert_eq!(hist_total, 10_000);
}

#[test]
fn simulate_scenario_four_rejects_the_t_fit() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "c.json", r#"{"order": {"intervals": 13}, "scenario": 4}"#);
    let out = tmp.path().join("o");
    run_ok(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--paths",
        "10000",
    ]);
    let ks = rows(&out.join("ks.csv"));
    assert_eq!(row(&ks, "gaussian")[3], "true");
    assert_eq!(row(&ks, "student_t")[3], "true");
}

#[test]
fn bad_configuration_exits_with_one() {
    let tmp = TempDir::new().unwrap();
    let zero = write(tmp.path(), "z.json", r#"{"budget": {"path_count": 0}}"#);
    let out = tcalab(&[
        "simulate",
        "--config",
        zero.to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("path_count"));

    let unknown = write(tmp.path(), "u.json", r#"{"order": {"intervals": 2}, "seed": 3}"#);
    let out = tcalab(&["optimize", "--config", unknown.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));

    let out = tcalab(&[
        "optimize",
        "--config",
        tmp.path().join("missing.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));

    let out = tcalab(&["simulate", "--degree", "4"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn runtime_failure_exits_with_two() {
    // Twelve intervals leave too few quasi-random points inside the simplex.
    let tmp = TempDir::new().unwrap();
    let cfg = write(
        tmp.path(),
        "c.json",
        r#"{"order": {"intervals": 12}, "utility": {"kind": "ac_analytic", "lambda": 0.3}}"#,
    );
    let out = tcalab(&[
        "optimize",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn optimize_reproduces_the_two_interval_optimum() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(
        tmp.path(),
        "c.json",
        r#"{"order": {"intervals": 2}, "scenario": 1, "utility": {"kind": "ac_analytic", "lambda": 0.3}}"#,
    );
    let out = tmp.path().join("o");
    run_ok(&[
        "optimize",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    let res = rows(&out.join("result.csv"));
    let fit = row(&res, "FitGD");
    assert!((num(&fit[1]) - 0.65).abs() < 0.005);
    assert!((num(&fit[2]) - 0.35).abs() < 0.005);
    assert!((num(&fit[3]) - 0.58).abs() < 0.005);
    assert_eq!(res.len(), 4);
    assert_eq!(rows(&out.join("candidates.csv")).len(), 100);
    assert_eq!(rows(&out.join("surface.csv")).len(), 3);
}

#[test]
fn optimize_geometric_impact_models() {
    let tmp = TempDir::new().unwrap();
    let cases = [
        ("lin_exp", r#"{"kind": "dm", "lambda": 0.3, "c_tilde": -1}"#, 0.29),
        ("sqrt", r#"{"kind": "ac_numeric", "lambda": 0.3}"#, 0.43),
    ];
    for (impact, utility, n1) in cases {
        let cfg = write(
            tmp.path(),
            "c.json",
            &format!(
                r#"{{"order": {{"intervals": 2}}, "utility": {utility},
                    "scenario": {{"dynamics": "geometric_propagator", "impact": "{impact}"}}}}"#
            ),
        );
        let out = tmp.path().join(impact);
        run_ok(&[
            "optimize",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--methods",
            "fit-gd",
        ]);
        let text = std::fs::read_to_string(out.join("result.csv")).unwrap();
        assert!(text.starts_with("# seed=1, paths=15000, scenario=geometric/"));
        let res = rows(&out.join("result.csv"));
        assert!((num(&row(&res, "FitGD")[1]) - n1).abs() < 0.05, "{impact}: {text}");
    }
}

#[test]
fn map_and_frontier() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(
        tmp.path(),
        "dm.json",
        r#"{"order": {"intervals": 2}, "utility": {"kind": "dm", "lambda": 0.3, "c_tilde": -1}}"#,
    );
    let out = tmp.path().join("map");
    run_ok(&["map", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    let map = rows(&out.join("map.csv"));
    assert_eq!(map.len(), 25);
    for r in map.iter().filter(|r| r[0] == "0") {
        assert!(
            (num(&r[2]) - 0.5).abs() < 0.02 && (num(&r[3]) - 0.5).abs() < 0.02,
            "{r:?}"
        );
    }

    let ac = write(
        tmp.path(),
        "ac.json",
        r#"{"order": {"intervals": 5}, "utility": {"kind": "ac_analytic", "lambda": 0}}"#,
    );
    let out = tmp.path().join("frontier");
    run_ok(&[
        "frontier",
        "--config",
        ac.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    let f = rows(&out.join("frontier.csv"));
    assert_eq!(f.len(), 11);
    assert_eq!(f[0].len(), 8);
    for w in f.windows(2) {
        assert!(num(&w[1][2]) < num(&w[0][2]), "risk must fall: {w:?}");
    }
}

#[test]
fn reruns_are_byte_identical_and_seeds_matter() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(
        tmp.path(),
        "c.json",
        r#"{"order": {"intervals": 3}, "utility": {"kind": "dm", "lambda": 0.4, "c_tilde": -0.8},
            "budget": {"path_count": 2000, "q_target": 60}}"#,
    );
    let c = cfg.to_str().unwrap();
    let dirs: Vec<PathBuf> = ["a", "b", "c"].iter().map(|d| tmp.path().join(d)).collect();
    for (dir, seed) in dirs.iter().zip(["5", "5", "6"]) {
        let d = dir.to_str().unwrap();
        run_ok(&["simulate", "--config", c, "--seed", seed, "--out", d]);
        run_ok(&["optimize", "--config", c, "--seed", seed, "--out", d]);
        run_ok(&[
            "frontier",
            "--config",
            c,
            "--seed",
            seed,
            "--out",
            d,
            "--lambdas",
            "0.2,0.6",
        ]);
        run_ok(&[
            "map",
            "--config",
            c,
            "--seed",
            seed,
            "--out",
            d,
            "--lambdas",
            "0.5",
            "--thresholds=-1,0",
        ]);
    }
    let files = [
        "costs.csv",
        "hist.csv",
        "moments.csv",
        "fits.csv",
        "ks.csv",
        "candidates.csv",
        "surface.csv",
        "result.csv",
        "frontier.csv",
        "map.csv",
    ];
    for f in files {
        let a = std::fs::read(dirs[0].join(f)).unwrap();
        let b = std::fs::read(dirs[1].join(f)).unwrap();
        assert_eq!(a, b, "{f} differs between identical runs");
    }
    assert_ne!(
        std::fs::read(dirs[0].join("costs.csv")).unwrap(),
        std::fs::read(dirs[2].join("costs.csv")).unwrap()
    );
}

#[test]
fn benchmark_examples() {
    let tmp = TempDir::new().unwrap();
    let tape = write(tmp.path(), "tape.csv", "k,price,volume\n1,10,100\n2,12,300\n");
    let t = tape.to_str().unwrap();

    let vwap = write(tmp.path(), "vwap.csv", "k,shares,price\n1,1,11.5\n");
    let out = tmp.path().join("o");
    run_ok(&[
        "benchmark",
        "--fills",
        vwap.to_str().unwrap(),
        "--tape",
        t,
        "--kind",
        "vwap",
        "--shares",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    let r = rows(&out.join("benchmark.csv"));
    assert_eq!(num(&r[0][3]), 11.5);
    assert_eq!(num(&r[0][4]), 0.0);

    // Executing the TWAP schedule at tape prices costs nothing.
    let twap = write(tmp.path(), "twap.csv", "k,shares,price\n1,0.5,10\n2,0.5,12\n");
    let o = tcalab(&[
        "benchmark",
        "--fills",
        twap.to_str().unwrap(),
        "--tape",
        t,
        "--kind",
        "twap",
        "--shares",
        "1",
    ]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("cost 0"));

    // Selling above the arrival price is a gain.
    let above = write(tmp.path(), "above.csv", "k,shares,price\n1,1,10.5\n");
    let o = tcalab(&[
        "benchmark",
        "--fills",
        above.to_str().unwrap(),
        "--tape",
        t,
        "--kind",
        "is",
        "--shares",
        "1",
    ]);
    assert!(String::from_utf8_lossy(&o.stdout).contains("cost 0.5"));
    let o = tcalab(&[
        "benchmark",
        "--fills",
        above.to_str().unwrap(),
        "--tape",
        t,
        "--kind",
        "is",
        "--shares",
        "1",
        "--side",
        "buy",
    ]);
    assert!(String::from_utf8_lossy(&o.stdout).contains("cost -0.5"));

    let o = tcalab(&[
        "benchmark",
        "--fills",
        above.to_str().unwrap(),
        "--tape",
        t,
        "--kind",
        "pwp",
        "--shares",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(1));
}
