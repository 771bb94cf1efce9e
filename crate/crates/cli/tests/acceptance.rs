//! Acceptance checks, one PASS/FAIL line each. Exits non-zero if any fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ddu_vpp::ccg::{
    self, audit_claims, evaluate_recourse, solve_feasibility_check, solve_subproblem, uncertain_mask, AdversaryOptions,
    Algorithm, CcgConfig, RunStatus,
};
use ddu_vpp::experiments::{fixed_tou, sweep_budgets};
use ddu_vpp::network::{polygon_halfplanes, NetworkCase};
use ddu_vpp::oracle::{first_stage_for_prices, instances, oracle_full, oracle_worst_case, OracleOptions};
use ddu_vpp::parallel::Parallelism;
use ddu_vpp::uncertainty::{BudgetParams, ElasticityTable};

type Outcome = Result<String, String>;

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn bundled_ieee33() -> (NetworkCase, ElasticityTable) {
    let d = data_dir();
    let case = NetworkCase::load(&d.join("ieee33-t24.json")).expect("bundled case");
    let table = ElasticityTable::load_csv(&d.join("ieee33-t24_elasticity.csv")).expect("bundled table");
    (case, table)
}

fn entries(case: &NetworkCase) -> usize {
    uncertain_mask(case).iter().flatten().filter(|&&b| b).count()
}

fn loaded_nodes(case: &NetworkCase) -> usize {
    uncertain_mask(case).iter().filter(|r| r.iter().any(|&b| b)).count()
}

fn subproblem_equivalence() -> Outcome {
    let start = Instant::now();
    let opts = OracleOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for seed in 0..24 {
        let (case, table) = instances::random_micro(seed);
        if case.num_nodes() * case.periods > 8 || table.num_intervals() > 3 {
            return Err(format!("instance {seed} exceeds the size limits"));
        }
        let prices: Vec<f64> = (0..case.periods).map(|_| rng.gen_range(case.prices.tou_min..=case.prices.tou_max)).collect();
        let x = first_stage_for_prices(&case, &prices, &opts).map_err(|e| e.to_string())?.ok_or("no dispatch")?;
        let n = loaded_nodes(&case);
        for budgets in [BudgetParams::slack(n, case.periods), BudgetParams { gamma_t: 1.0, gamma_s: 1.0 }] {
            let brute = oracle_worst_case(&case, &table, &x, None, budgets, &opts).map_err(|e| e.to_string())?;
            let sp = solve_subproblem(&case, &table, &x, None, &AdversaryOptions::new(budgets)).map_err(|e| e.to_string())?;
            let err = (brute.value - sp.value).abs() / (1.0 + brute.value.abs());
            worst = worst.max(err);
            checked += 1;
            if err > 1e-5 {
                return Err(format!("instance {seed} {budgets:?}: oracle {} vs subproblem {}", brute.value, sp.value));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    if secs >= 300.0 {
        return Err(format!("took {secs:.1}s"));
    }
    Ok(format!("{checked} comparisons on 24 instances, max scaled error {worst:.2e}, {secs:.1}s"))
}

fn end_to_end_equivalence() -> Outcome {
    let opts = OracleOptions::default();
    let mut notes = Vec::new();
    let third = {
        let (mut c, t) = instances::random_micro(3);
        c.name = "tiny-3".into();
        (c, t)
    };
    for ((case, table), points) in [(instances::micro1(), 25), (instances::micro2(), 9), (third, 9)] {
        let n = loaded_nodes(&case);
        let budgets = BudgetParams::slack(n, case.periods);
        let cfg = CcgConfig { tol: 1e-4, ..Default::default() };
        let report = ccg::run(&cfg, &case, &table).map_err(|e| e.to_string())?;
        let full = oracle_full(&case, &table, points, budgets, &opts).map_err(|e| e.to_string())?;
        let lo = full.value - full.grid_error - 1e-6;
        let hi = full.value + 1e-6;
        if report.status != RunStatus::Converged || report.upper_bound < lo || report.upper_bound > hi {
            return Err(format!(
                "{}: C&CG {} ({:?}) outside [{lo}, {hi}]",
                case.name, report.upper_bound, report.status
            ));
        }
        let half = full.grid_error / 2.0;
        let claims = audit_claims(&report, Some(full.value - half), entries(&case), half + 1e-6);
        if !claims.all_hold() {
            return Err(format!("{}: claims fail {claims:?}", case.name));
        }
        notes.push(format!("{} {:.4} in [{lo:.4}, {hi:.4}]", case.name, report.upper_bound));
    }
    Ok(notes.join("; "))
}

fn fc_soundness() -> Outcome {
    let opts = OracleOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut zero, mut positive) = (0, 0);
    for s_max in [1000.0, 125.0, 118.0, 110.0] {
        for price in [0.05, 0.08, 0.1, 0.2, 0.3] {
            let (mut case, table) = instances::micro1();
            case.lines[0].s_max = s_max;
            let Some(x) = first_stage_for_prices(&case, &[price], &opts).map_err(|e| e.to_string())? else {
                continue;
            };
            let budgets = BudgetParams::slack(1, 1);
            let fc = solve_feasibility_check(&case, &table, &x, None, &AdversaryOptions::new(budgets))
                .map_err(|e| e.to_string())?;
            if fc.value <= 1e-6 {
                zero += 1;
                let ks = table.admissible_intervals(0, price / case.prices.c_ref[0]);
                for _ in 0..100 {
                    let k = ks[rng.gen_range(0..ks.len())];
                    let v = vec![vec![0.0], vec![rng.gen_range(0.0..=1.0)]];
                    let xi = table.vertex_to_scenario(&[k], &v);
                    if evaluate_recourse(&case, &x, &xi, 16, false, &opts.solver).map_err(|e| e.to_string())?.is_none() {
                        return Err(format!("s_max {s_max}, price {price}: zero slack but scenario {xi:?} has no recourse"));
                    }
                }
            } else {
                positive += 1;
                let direct = evaluate_recourse(&case, &x, &fc.xi, 16, false, &opts.solver).map_err(|e| e.to_string())?;
                if direct.is_some() {
                    return Err(format!("s_max {s_max}, price {price}: slack {} but recourse exists", fc.value));
                }
            }
        }
    }
    if zero == 0 || positive == 0 {
        return Err(format!("did not exercise both outcomes ({zero} zero, {positive} positive)"));
    }
    Ok(format!("{zero} certified feasible with 100 samples each, {positive} infeasible confirmed by the LP"))
}

fn polygon_bounds() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let s = 250.0;
    for sides in [3usize, 4, 16, 64] {
        let planes = polygon_halfplanes(sides, s).map_err(|e| e.to_string())?;
        let inside = |p: f64, q: f64| planes.iter().all(|h| h.eval(p, q) <= h.rhs + 1e-9 * s);
        let mut feasible = 0;
        for _ in 0..20000 {
            let (p, q) = (rng.gen_range(-s..s), rng.gen_range(-s..s));
            if inside(p, q) {
                feasible += 1;
                if p * p + q * q > s * s * (1.0 + 1e-12) {
                    return Err(format!("S={sides}: ({p}, {q}) is in the polygon but outside the disk"));
                }
            }
            let r = (std::f64::consts::PI / sides as f64).cos() * s * rng.gen_range(0.0f64..=1.0).sqrt();
            let a = rng.gen_range(0.0..std::f64::consts::TAU);
            if !inside(r * a.cos(), r * a.sin()) {
                return Err(format!("S={sides}: inner-disk point at radius {r} is cut"));
            }
        }
        if feasible == 0 {
            return Err(format!("S={sides}: no polygon point sampled"));
        }
    }
    Ok("20000 box and 20000 inner-disk samples at S = 3, 4, 16, 64".into())
}

fn linearization_exactness(scale_report: &ccg::CcgReport) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut runs = vec![(scale_report.envelope_error, scale_report.square_error)];
    for (case, table) in [instances::micro1(), instances::micro2(), instances::random_micro(6)] {
        let r = ccg::run(&CcgConfig::default(), &case, &table).map_err(|e| e.to_string())?;
        runs.push((r.envelope_error, r.square_error));
    }
    for (env, sq) in &runs {
        worst = worst.max(*env).max(*sq);
    }
    if worst > 1e-6 {
        return Err(format!("largest |w − z·c| or |ω − z·c²| is {worst:.3e}"));
    }
    Ok(format!("{} runs, largest deviation {worst:.2e}", runs.len()))
}

fn comparative_findings() -> Outcome {
    let mut notes = Vec::new();
    // (a) optimized prices never lose to fixed ones
    let (big, big_table) = bundled_ieee33();
    for (case, table, tol) in [
        (instances::micro1().0, instances::micro1().1, 1e-4),
        (instances::micro2().0, instances::micro2().1, 1e-4),
        (big.clone(), big_table.clone(), 1.0),
    ] {
        let cfg = CcgConfig { tol, ..Default::default() };
        let rows = fixed_tou(&cfg, &case, &table, &[1.0, 2.0, 5.0], Parallelism::default()).map_err(|e| e.to_string())?;
        let best = rows[0].objective.ok_or("optimized run has no objective")?;
        let mut compared = 0;
        for r in &rows[1..] {
            if let Some(o) = r.objective {
                compared += 1;
                if best > o + tol {
                    return Err(format!("(a) {}: {} beats optimized {best} by more than {tol}", case.name, r.label()));
                }
            }
        }
        notes.push(format!("(a) {} optimized {best:.3} vs {compared} fixed rows", case.name));
    }
    // (b) shrinking budgets never raise the objective
    for (case, table, tol) in [(instances::micro2().0, instances::micro2().1, 1e-4), (big, big_table, 1.0)] {
        let n = loaded_nodes(&case) as f64;
        let t = case.periods as f64;
        let budgets = [
            BudgetParams { gamma_t: t, gamma_s: n },
            BudgetParams { gamma_t: (t / 2.0).ceil(), gamma_s: (n / 2.0).ceil() },
            BudgetParams { gamma_t: 1.0, gamma_s: 1.0 },
            BudgetParams { gamma_t: 0.0, gamma_s: 0.0 },
        ];
        let cfg = CcgConfig { tol, ..Default::default() };
        let rows = sweep_budgets(&cfg, &case, &table, &budgets, Parallelism::default()).map_err(|e| e.to_string())?;
        for w in rows.windows(2) {
            if w[1].objective > w[0].objective + 2.0 * tol {
                return Err(format!(
                    "(b) {}: ({}, {}) gives {} above ({}, {}) at {}",
                    case.name, w[1].gamma_t, w[1].gamma_s, w[1].objective, w[0].gamma_t, w[0].gamma_s, w[0].objective
                ));
            }
        }
        let objs: Vec<String> = rows.iter().map(|r| format!("{:.2}", r.objective)).collect();
        notes.push(format!("(b) {} {}", case.name, objs.join(" ≥ ")));
    }
    // (c) traditional iteration fails where the improved one converges
    let (case, table) = instances::ddu_showcase();
    let run = |algorithm| ccg::run(&CcgConfig { algorithm, max_iters: 10, ..Default::default() }, &case, &table);
    let imp = run(Algorithm::Improved).map_err(|e| e.to_string())?;
    let trad = run(Algorithm::Traditional).map_err(|e| e.to_string())?;
    let failed = trad.status != RunStatus::Converged || trad.lb_exceeded_ub;
    if imp.status != RunStatus::Converged || !failed {
        return Err(format!("(c) improved {:?}, traditional {:?} (LB > UB: {})", imp.status, trad.status, trad.lb_exceeded_ub));
    }
    notes.push(format!(
        "(c) improved converged in {}, traditional {:?} with LB > UB: {}",
        imp.iterations, trad.status, trad.lb_exceeded_ub
    ));
    Ok(notes.join("; "))
}

fn scale_check() -> (Outcome, Option<ccg::CcgReport>) {
    let (case, table) = bundled_ieee33();
    if case.num_nodes() != 33 || case.periods != 24 || table.num_intervals() != 5 {
        return (Err("bundled case is not 33 nodes × 24 periods × 5 intervals".into()), None);
    }
    let start = Instant::now();
    let r = match ccg::run(&CcgConfig::default(), &case, &table) {
        Ok(r) => r,
        Err(e) => return (Err(e.to_string()), None),
    };
    let secs = start.elapsed().as_secs_f64();
    let gap = r.upper_bound - r.lower_bound;
    let ok = r.status == RunStatus::Converged && gap.abs() <= 1.0 && r.iterations <= 10 && secs <= 1800.0;
    let msg = format!("gap {gap:.4} after {} iterations in {secs:.1}s ({:?})", r.iterations, r.status);
    (if ok { Ok(msg) } else { Err(msg) }, Some(r))
}

fn determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_ddu-vpp");
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = data_dir();
    let mut files = Vec::new();
    for run in 0..2 {
        let out = tmp.path().join(format!("run{run}"));
        let status = Command::new(bin)
            .args(["solve", "--case"])
            .arg(d.join("ieee33-t24.json"))
            .arg("--elasticity")
            .arg(d.join("ieee33-t24_elasticity.csv"))
            .args(["--seed", "7", "--jobs", "1", "--out"])
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?
            .status;
        if !status.success() {
            return Err(format!("run {run} exited with {status}"));
        }
        files.push(std::fs::read(out.join("solution.json")).map_err(|e| e.to_string())?);
    }
    let gen = |dir: &Path| -> Result<Vec<u8>, String> {
        let status = Command::new(bin)
            .args(["gen-data", "--seed", "7", "--out"])
            .arg(dir)
            .output()
            .map_err(|e| e.to_string())?
            .status;
        if !status.success() {
            return Err("gen-data failed".into());
        }
        std::fs::read(dir.join("ieee33-t24_elasticity.csv")).map_err(|e| e.to_string())
    };
    let a = gen(&tmp.path().join("g0"))?;
    let b = gen(&tmp.path().join("g1"))?;
    if files[0] != files[1] {
        return Err("solution.json differs between identical runs".into());
    }
    if a != b {
        return Err("synthetic data differs under the same seed".into());
    }
    Ok(format!("solution.json identical over 2 runs ({} bytes); gen-data identical", files[0].len()))
}

fn main() {
    let mut failures = 0;
    let mut report = |name: &str, outcome: Outcome| {
        match &outcome {
            Ok(msg) => println!("[PASS] {name}: {msg}"),
            Err(msg) => {
                failures += 1;
                println!("[FAIL] {name}: {msg}")
            }
        }
    };
    report("oracle equivalence (subproblem)", subproblem_equivalence());
    report("oracle equivalence (end-to-end)", end_to_end_equivalence());
    report("feasibility-check soundness", fc_soundness());
    report("polygon bounds", polygon_bounds());
    let (scale, scale_report) = scale_check();
    match &scale_report {
        Some(r) => report("linearization exactness", linearization_exactness(r)),
        None => report("linearization exactness", Err("scale run failed".into())),
    }
    report("comparative findings", comparative_findings());
    report("scale check", scale);
    report("determinism", determinism());
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
