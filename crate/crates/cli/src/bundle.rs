//! Result files: `solution.json`, `iterations.csv`, `worst_case_loads.csv`,
//! experiment summaries and `manifest.json`.

use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

use ddu_vpp::ccg::{Algorithm, CcgReport, RunStatus};
use ddu_vpp::experiments::{BudgetSweepRow, FixedTouRow};
use ddu_vpp::network::{FirstStageSolution, NetworkCase, SecondStageSolution};
use ddu_vpp::uncertainty::{realized_demand, BudgetParams, Scenario};

/// Everything in `solution.json`. Wall times are left out so that repeated
/// runs produce identical files.
#[derive(Serialize)]
struct Solution<'a> {
    case: &'a str,
    algorithm: Algorithm,
    status: RunStatus,
    /// Final upper bound.
    objective: f64,
    lower_bound: f64,
    iterations: usize,
    budgets: BudgetParams,
    c_tou: Option<&'a [f64]>,
    dispatch: Option<&'a FirstStageSolution>,
    worst_case: Option<&'a Scenario>,
    recourse: Option<&'a SecondStageSolution>,
    lb_exceeded_ub: bool,
    envelope_error: f64,
    square_error: f64,
    warnings: &'a [String],
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn create(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

pub fn write_run(dir: &Path, case: &NetworkCase, report: &CcgReport) -> Result<()> {
    create(dir)?;
    let solution = Solution {
        case: &case.name,
        algorithm: report.algorithm,
        status: report.status,
        objective: report.upper_bound,
        lower_bound: report.lower_bound,
        iterations: report.iterations,
        budgets: report.budgets,
        c_tou: report.incumbent.as_ref().map(|x| x.c_tou.as_slice()),
        dispatch: report.incumbent.as_ref(),
        worst_case: report.incumbent_scenario.as_ref(),
        recourse: report.incumbent_recourse.as_ref(),
        lb_exceeded_ub: report.lb_exceeded_ub,
        envelope_error: report.envelope_error,
        square_error: report.square_error,
        warnings: &report.warnings,
    };
    write_json(&dir.join("solution.json"), &solution)?;
    std::fs::write(dir.join("iterations.csv"), report.iterations_csv())?;
    write_loads(&dir.join("worst_case_loads.csv"), case, report)
}

/// Predicted against realized load for every scenario the run returned, and
/// for the incumbent's worst case.
fn write_loads(path: &Path, case: &NetworkCase, report: &CcgReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["iter", "source", "node", "t", "interval", "price", "v", "xi", "predicted", "realized"])?;
    let mut emit = |iter: String, source: &str, prices: &[f64], s: &Scenario| -> Result<()> {
        for (i, node) in case.nodes.iter().enumerate() {
            for t in 0..case.periods {
                let load = node.load[t];
                if load == 0.0 {
                    continue;
                }
                let realized = realized_demand(load, s.xi[i][t], prices[t], case.prices.c_ref[t]);
                w.write_record([
                    iter.clone(),
                    source.to_string(),
                    i.to_string(),
                    t.to_string(),
                    s.z[t].to_string(),
                    prices[t].to_string(),
                    s.v[i][t].to_string(),
                    s.xi[i][t].to_string(),
                    load.to_string(),
                    realized.to_string(),
                ])?;
            }
        }
        Ok(())
    };
    for v in &report.vertices {
        let s = Scenario {
            xi: v.xi.clone(),
            v: v.v.clone(),
            z: v.z.clone(),
        };
        emit(v.iter.to_string(), &v.source, &v.prices, &s)?;
    }
    if let (Some(x), Some(s)) = (&report.incumbent, &report.incumbent_scenario) {
        emit("final".into(), "incumbent", &x.c_tou, s)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sweep(dir: &Path, rows: &[BudgetSweepRow]) -> Result<()> {
    create(dir)?;
    let mut w = csv::Writer::from_path(dir.join("budget_sweep.csv"))?;
    w.write_record(["gamma_t", "gamma_s", "objective", "lower_bound", "time_s", "iterations", "status"])?;
    for r in rows {
        w.write_record([
            r.gamma_t.to_string(),
            r.gamma_s.to_string(),
            r.objective.to_string(),
            r.lower_bound.to_string(),
            format!("{:.3}", r.wall_s),
            r.iterations.to_string(),
            serde_json::to_value(r.status)?.as_str().unwrap_or_default().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_fixed_tou(dir: &Path, rows: &[FixedTouRow]) -> Result<()> {
    create(dir)?;
    let mut w = csv::Writer::from_path(dir.join("fixed_tou.csv"))?;
    w.write_record(["row", "multiplier", "objective", "time_s", "iterations", "status", "prices"])?;
    for r in rows {
        w.write_record([
            r.label(),
            r.multiplier.map(|m| m.to_string()).unwrap_or_default(),
            r.objective.map(|o| o.to_string()).unwrap_or_default(),
            format!("{:.3}", r.wall_s),
            r.iterations.to_string(),
            serde_json::to_value(r.status)?.as_str().unwrap_or_default().to_string(),
            r.prices.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(" "),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Manifest<'a, A: Serialize> {
    experiment: &'a str,
    args: &'a A,
    version: &'a str,
}

pub fn write_manifest(dir: &Path, experiment: &str, args: &impl Serialize) -> Result<()> {
    create(dir)?;
    write_json(
        &dir.join("manifest.json"),
        &Manifest {
            experiment,
            args,
            version: env!("CARGO_PKG_VERSION"),
        },
    )
}
