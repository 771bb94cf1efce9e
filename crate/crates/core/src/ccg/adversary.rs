//! Worst-case scenario search for a fixed first stage: the feasibility check
//! and the cost subproblem, each a single max-min MILP per period group.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::evaluate::evaluate_recourse;
use super::kkt::{add_kkt, KktMode};
use super::CcgError;
use crate::model::{LinExpr, Model, ObjSense, SolverOptions};
use crate::network::{
    build_recourse, FirstStageSolution, NetworkCase, Param, RecourseLp, RecourseOptions, SecondStageSolution,
};
use crate::parallel::{par_map, Parallelism};
use crate::uncertainty::{add_adversary_scenario, BudgetParams, ElasticityTable, IntervalChoice};

/// Entries `(node, t)` with a nonzero predicted load; the others carry no
/// uncertainty.
pub fn uncertain_mask(case: &NetworkCase) -> Vec<Vec<bool>> {
    case.nodes
        .iter()
        .map(|n| n.load.iter().map(|&l| l != 0.0).collect())
        .collect()
}

#[derive(Clone, Debug)]
pub struct AdversaryOptions {
    pub budgets: BudgetParams,
    pub v_binary: bool,
    pub polygon_sides: usize,
    pub solver: SolverOptions,
    pub parallelism: Parallelism,
    /// Times the dual bound may be multiplied by 10 after the audit flags it.
    pub m_escalations: usize,
    /// Integrality tolerance of a second search. Tight tolerances stop Big-M
    /// leakage but can make the solver miss the optimum or report a false
    /// infeasibility; the worse of the two scenarios, evaluated exactly, wins.
    pub second_mip_feas_tol: Option<f64>,
}

impl AdversaryOptions {
    pub fn new(budgets: BudgetParams) -> Self {
        AdversaryOptions {
            budgets,
            v_binary: false,
            polygon_sides: crate::network::DEFAULT_POLYGON_SIDES,
            solver: SolverOptions::default(),
            parallelism: Parallelism::default(),
            m_escalations: 3,
            second_mip_feas_tol: Some(1e-7),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdversaryOutcome {
    /// Worst-case recourse cost, or the total feasibility slack.
    pub value: f64,
    pub v: Vec<Vec<f64>>,
    pub z: Vec<usize>,
    pub xi: Vec<Vec<f64>>,
    pub recourse: SecondStageSolution,
    /// Objective of the MILP that produced the scenario; `value` is the
    /// recourse LP re-solved at that scenario.
    pub milp_value: f64,
    /// Dual bound of the last solve (after escalation).
    pub big_m: f64,
    /// False when a solve still had audit findings.
    pub clean: bool,
}

/// Interval choice per period: the given selector, or every interval
/// containing the price ratio.
pub fn interval_choices(
    case: &NetworkCase,
    table: &ElasticityTable,
    prices: &[f64],
    z: Option<&[usize]>,
) -> Result<Vec<IntervalChoice>, CcgError> {
    (0..case.periods)
        .map(|t| match z {
            Some(z) => Ok(IntervalChoice::Fixed(z[t])),
            None => Ok(IntervalChoice::for_ratio(table, t, prices[t] / case.prices.c_ref[t])?),
        })
        .collect()
}

struct GroupResult {
    value: f64,
    v: Vec<(usize, usize, f64)>,
    z: Vec<(usize, usize)>,
    y: Vec<(usize, f64)>,
    big_m: f64,
    clean: bool,
}

#[allow(clippy::too_many_arguments)]
fn solve_group(
    case: &NetworkCase,
    table: &ElasticityTable,
    lp: &RecourseLp,
    x: &FirstStageSolution,
    choices: &[IntervalChoice],
    mask: &[Vec<bool>],
    periods: &BTreeSet<usize>,
    mode: KktMode,
    opts: &AdversaryOptions,
) -> Result<GroupResult, CcgError> {
    let mut big_m = opts.solver.big_m;
    let mut attempt = 0;
    loop {
        let mut model = Model::with_big_m(big_m);
        let scen = add_adversary_scenario(&mut model, table, choices, periods, mask, opts.budgets, opts.v_binary)?;
        let resolve = |p: Param| match p {
            Param::P0Da(t) => LinExpr::constant(x.p0_da[t]),
            Param::Demand { node, t } => {
                let load = case.load_at(node, t);
                let r = x.c_tou[t] / case.prices.c_ref[t];
                let mut e = LinExpr::constant(load);
                e.add_scaled(&scen.xi[node][t], load * (r - 1.0));
                e
            }
            Param::Price(_) => unreachable!("prices only enter costs"),
        };
        let kkt = add_kkt(&mut model, lp, periods, resolve, &x.c_tou, mode, big_m, "")?;
        model.set_objective(ObjSense::Maximize, kkt.objective.clone())?;
        let mut solver = opts.solver.clone();
        solver.big_m = big_m;
        let r = model.solve(&solver)?;
        if !r.is_optimal() {
            return match mode {
                KktMode::Subproblem => Err(CcgError::InnerInfeasible(format!(
                    "no recourse for some scenario in periods {periods:?} (status {:?})",
                    r.status
                ))),
                KktMode::Feasibility => Err(CcgError::Solver(format!(
                    "feasibility check returned {:?} for periods {periods:?}",
                    r.status
                ))),
            };
        }
        if !r.big_m_clean() && attempt < opts.m_escalations {
            log::warn!("dual bound {big_m} active in periods {periods:?}; retrying with {}", big_m * 10.0);
            big_m *= 10.0;
            attempt += 1;
            continue;
        }
        let mut v = Vec::new();
        for (i, row) in scen.v.iter().enumerate() {
            for &t in periods {
                if let Some(var) = row[t] {
                    v.push((i, t, r.value(var).clamp(0.0, 1.0)));
                }
            }
        }
        let active = scen.active_intervals(|e| r.eval(e));
        let z = periods.iter().map(|&t| (t, active[t])).collect();
        let y = kkt
            .y
            .iter()
            .enumerate()
            .filter_map(|(j, o)| o.map(|var| (j, r.value(var))))
            .collect();
        return Ok(GroupResult {
            value: r.objective,
            v,
            z,
            y,
            big_m,
            clean: r.audit_clean(),
        });
    }
}

/// Period groups: one per period when the period budget cannot bind,
/// otherwise a single group.
pub fn period_groups(periods: usize, budgets: &BudgetParams) -> Vec<BTreeSet<usize>> {
    if budgets.periods_separable(periods) {
        (0..periods).map(|t| [t].into()).collect()
    } else {
        vec![(0..periods).collect()]
    }
}

fn search(
    case: &NetworkCase,
    table: &ElasticityTable,
    x: &FirstStageSolution,
    z: Option<&[usize]>,
    mode: KktMode,
    opts: &AdversaryOptions,
) -> Result<AdversaryOutcome, CcgError> {
    table.check_case(case)?;
    let choices = interval_choices(case, table, &x.c_tou, z)?;
    let bounds = table.demand_bounds(case, Some(&x.c_tou));
    let lp = build_recourse(
        case,
        &bounds,
        RecourseOptions {
            polygon_sides: opts.polygon_sides,
        },
    )?;
    let mask = uncertain_mask(case);
    let groups = period_groups(case.periods, &opts.budgets);
    let results = par_map(opts.parallelism, &groups, |g| {
        solve_group(case, table, &lp, x, &choices, &mask, g, mode, opts)
    });
    let n = case.num_nodes();
    let nt = case.periods;
    let mut v = vec![vec![0.0; nt]; n];
    let mut zs = vec![0; nt];
    let mut y = vec![f64::NAN; lp.num_vars()];
    let mut value = 0.0;
    let mut big_m = opts.solver.big_m;
    let mut clean = true;
    for r in results {
        let r = r?;
        value += r.value;
        big_m = big_m.max(r.big_m);
        clean &= r.clean;
        for (i, t, val) in r.v {
            v[i][t] = val;
        }
        for (t, k) in r.z {
            zs[t] = k;
        }
        for (j, val) in r.y {
            y[j] = val;
        }
    }
    let xi = table.vertex_to_scenario(&zs, &v);
    Ok(AdversaryOutcome {
        value,
        v,
        z: zs,
        xi,
        recourse: lp.solution_from(|j| y[j]),
        milp_value: value,
        big_m,
        clean,
    })
}

fn solve_adversary(
    case: &NetworkCase,
    table: &ElasticityTable,
    x: &FirstStageSolution,
    z: Option<&[usize]>,
    mode: KktMode,
    opts: &AdversaryOptions,
) -> Result<AdversaryOutcome, CcgError> {
    let relax = mode == KktMode::Feasibility;
    let mut tols = vec![opts.solver.mip_feas_tol];
    tols.extend(opts.second_mip_feas_tol.filter(|&t| t != opts.solver.mip_feas_tol));
    let mut best: Option<AdversaryOutcome> = None;
    let mut first_err = None;
    for tol in tols {
        let o = AdversaryOptions {
            solver: SolverOptions {
                mip_feas_tol: tol,
                ..opts.solver.clone()
            },
            ..opts.clone()
        };
        let mut out = match search(case, table, x, z, mode, &o) {
            Ok(out) => out,
            Err(e) => {
                first_err.get_or_insert(e);
                continue;
            }
        };
        match evaluate_recourse(case, x, &out.xi, opts.polygon_sides, relax, &opts.solver)? {
            Some(d) => {
                out.value = d.value;
                out.recourse = d.recourse;
            }
            None => {
                return Err(CcgError::InnerInfeasible(format!(
                    "no recourse for the worst-case scenario {:?}",
                    out.xi
                )))
            }
        }
        if best.as_ref().map_or(true, |b| out.value > b.value) {
            best = Some(out);
        }
    }
    best.ok_or_else(|| first_err.expect("at least one search ran"))
}

/// Largest total constraint slack the recourse needs over the uncertainty
/// set at `x`. Zero certifies that every scenario admits a recourse.
pub fn solve_feasibility_check(
    case: &NetworkCase,
    table: &ElasticityTable,
    x: &FirstStageSolution,
    z: Option<&[usize]>,
    opts: &AdversaryOptions,
) -> Result<AdversaryOutcome, CcgError> {
    solve_adversary(case, table, x, z, KktMode::Feasibility, opts)
}

/// Worst-case recourse cost at `x`. With `z = None` a price on a shared
/// interval endpoint lets the adversary use either interval.
pub fn solve_subproblem(
    case: &NetworkCase,
    table: &ElasticityTable,
    x: &FirstStageSolution,
    z: Option<&[usize]>,
    opts: &AdversaryOptions,
) -> Result<AdversaryOutcome, CcgError> {
    solve_adversary(case, table, x, z, KktMode::Subproblem, opts)
}
