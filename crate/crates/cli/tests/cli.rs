use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ddu_vpp::oracle::{instances, oracle_full, OracleOptions};
use ddu_vpp::uncertainty::BudgetParams;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ddu-vpp"))
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out").arg(out).output().expect("binary runs")
}

fn solution(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("solution.json")).unwrap()).unwrap()
}

fn micro1_args() -> Vec<String> {
    vec![
        "solve".into(),
        "--case".into(),
        data("micro-1.json").display().to_string(),
        "--elasticity".into(),
        data("micro-1_elasticity.csv").display().to_string(),
        "--tol".into(),
        "1e-4".into(),
    ]
}

#[test]
fn micro1_solve_matches_the_oracle() {
    let tmp = tempfile::tempdir().unwrap();
    let args = micro1_args();
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    let out = run(&args, tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let sol = solution(tmp.path());
    let (case, table) = instances::micro1();
    let full = oracle_full(&case, &table, 25, BudgetParams::slack(1, 1), &OracleOptions::default()).unwrap();
    let obj = sol["objective"].as_f64().unwrap();
    assert!(obj <= full.value + 1e-6 && obj >= full.value - full.grid_error - 1e-6, "{obj} vs {}", full.value);
    assert_eq!(sol["status"], "converged");
}

#[test]
fn objective_is_the_last_upper_bound() {
    let tmp = tempfile::tempdir().unwrap();
    let args = micro1_args();
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    run(&args, tmp.path());
    let obj = solution(tmp.path())["objective"].as_f64().unwrap();
    let mut rdr = csv::Reader::from_path(tmp.path().join("iterations.csv")).unwrap();
    let headers = rdr.headers().unwrap().clone();
    let ub_col = headers.iter().position(|h| h == "UB").unwrap();
    let last = rdr.records().last().unwrap().unwrap();
    let ub: f64 = last[ub_col].parse().unwrap();
    assert_eq!(ub, obj);
    let loads = std::fs::read_to_string(tmp.path().join("worst_case_loads.csv")).unwrap();
    assert!(loads.starts_with("iter,source,node,t,interval,price,v,xi,predicted,realized"));
}

#[test]
fn missing_column_is_named() {
    let tmp = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(data("micro-1_elasticity.csv")).unwrap();
    let trimmed: String = text
        .lines()
        .map(|l| l.rsplit_once(',').unwrap().0.to_string() + "\n")
        .collect();
    let bad = tmp.path().join("bad.csv");
    std::fs::write(&bad, trimmed).unwrap();
    let out = bin()
        .args(["solve", "--case"])
        .arg(data("micro-1.json"))
        .arg("--elasticity")
        .arg(&bad)
        .arg("--out")
        .arg(tmp.path().join("o"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("xi_hi"));
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bin().args(["solve", "--no-such-flag"]).output().unwrap();
    assert_eq!(out.status.code(), Some(64));
    let out = run(&["solve", "--case", "builtin:micro1", "--budgets", "1"], tmp.path());
    assert_eq!(out.status.code(), Some(64));
    let out = run(&["solve", "--case", "builtin:micro1", "--budgets", "5,5"], tmp.path());
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let out = run(&["solve", "--case", "/nonexistent/case.json"], tmp.path());
    assert_eq!(out.status.code(), Some(3));
    let out = run(&["solve", "--case", "builtin:micro1", "--tol", "0", "--max-iters", "1"], tmp.path());
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn gen_data_is_seeded() {
    let tmp = tempfile::tempdir().unwrap();
    let gen = |seed: &str, dir: &str| {
        let out = bin()
            .args(["gen-data", "--seed", seed, "--periods", "4", "--intervals", "5", "--out"])
            .arg(tmp.path().join(dir))
            .output()
            .unwrap();
        assert!(out.status.success());
        std::fs::read_to_string(tmp.path().join(dir).join("ieee33-t4_elasticity.csv")).unwrap()
    };
    let a = gen("3", "a");
    assert_eq!(a, gen("3", "b"));
    assert_ne!(a, gen("4", "c"));
    let mut bounds: Vec<(String, String)> = a
        .lines()
        .skip(1)
        .filter(|l| l.starts_with("1,0,"))
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[3].to_string(), f[4].to_string())
        })
        .collect();
    bounds.dedup();
    let expect = [("0", "0.25"), ("0.25", "0.5"), ("0.5", "1"), ("1", "4"), ("4", "16")];
    assert_eq!(bounds.len(), 5);
    for ((lo, hi), (elo, ehi)) in bounds.iter().zip(expect) {
        assert_eq!(lo.parse::<f64>().unwrap(), elo.parse::<f64>().unwrap());
        assert_eq!(hi.parse::<f64>().unwrap(), ehi.parse::<f64>().unwrap());
    }
}

#[test]
fn zero_budget_sweep_row() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&["sweep-budgets", "--case", "builtin:micro2", "--pairs", "0,0;2,2", "--tol", "1e-4"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let mut rdr = csv::Reader::from_path(tmp.path().join("budget_sweep.csv")).unwrap();
    let headers = rdr.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 2);
    let obj = |r: &csv::StringRecord| r[col("objective")].parse::<f64>().unwrap();
    assert!(obj(&rows[0]) <= obj(&rows[1]) + 1e-4);
    assert!(tmp.path().join("manifest.json").exists());
}
