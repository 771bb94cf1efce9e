//! Master problem: first stage, interval selection and one recourse copy per
//! stored scenario, with the price-dependent demand linearized exactly.

use serde::{Deserialize, Serialize};

use super::CcgError;
use crate::model::{Bounds, LinExpr, Model, ObjSense, Sense, SolveStatus, SolverOptions, VarRef};
use crate::network::{build_first_stage, build_recourse, FirstStageSolution, NetworkCase, Param, RecourseOptions};
use crate::uncertainty::{add_interval_selector, ElasticityTable};

/// Objective weight on each `ω`. Large enough to clear the LP dual
/// tolerance, small enough to be negligible against any bound gap.
const SQUARE_TIE_BREAK: f64 = 1e-5;

/// A scenario stored in the master.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum StoredScenario {
    /// Vertex coordinates `[node][t]`; the elasticity follows the interval
    /// the master selects.
    Vertex(Vec<Vec<f64>>),
    /// Elasticity `[node][t]` fixed as returned.
    Fixed(Vec<Vec<f64>>),
}

#[derive(Clone, Debug)]
pub struct MasterOptions {
    pub polygon_sides: usize,
    /// Lower bound on the recourse epigraph variable.
    pub eta_floor: f64,
    pub solver: SolverOptions,
    pub fixed_prices: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MasterOutcome {
    pub x: FirstStageSolution,
    pub z: Vec<usize>,
    pub lower_bound: f64,
    pub eta: f64,
    /// Largest `|w − z·c|` over periods and intervals.
    pub envelope_error: f64,
    /// Largest `|ω − z·c²|` over the squares present.
    pub square_error: f64,
    pub cut_rounds: usize,
}

/// Demand coefficient `φ` per `[node][t][k]` of a stored scenario.
pub fn scenario_coefficients(case: &NetworkCase, table: &ElasticityTable, s: &StoredScenario) -> Vec<Vec<Vec<f64>>> {
    let nk = table.num_intervals();
    (0..case.num_nodes())
        .map(|i| {
            (0..case.periods)
                .map(|t| {
                    let load = case.load_at(i, t);
                    (0..nk)
                        .map(|k| match s {
                            StoredScenario::Vertex(v) => {
                                let (a, b) = table.bounds(i, t, k);
                                load * ((1.0 - v[i][t]) * a + v[i][t] * b)
                            }
                            StoredScenario::Fixed(xi) => load * xi[i][t],
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

pub fn solve_master(
    case: &NetworkCase,
    table: &ElasticityTable,
    scenarios: &[StoredScenario],
    opts: &MasterOptions,
) -> Result<MasterOutcome, CcgError> {
    let nt = case.periods;
    let nk = table.num_intervals();
    let prices = &case.prices;
    let (c_lo, c_hi) = (prices.tou_min, prices.tou_max);
    let mut model = Model::with_big_m(opts.solver.big_m);
    let fs = build_first_stage(&mut model, case, opts.polygon_sides)?;
    if let Some(fixed) = &opts.fixed_prices {
        for t in 0..nt {
            model.add_constraint(Sense::Eq, LinExpr::from(fs.c[t]), fixed[t], format!("master:fixed-price:t={t}"))?;
        }
    }
    let price_exprs: Vec<LinExpr> = fs.c.iter().map(|&c| LinExpr::from(c)).collect();
    let z = add_interval_selector(&mut model, table, &prices.c_ref, &price_exprs, "master:")?;

    // w = z·c
    let mut w = vec![Vec::with_capacity(nk); nt];
    for t in 0..nt {
        for k in 0..nk {
            let wk = model.add_continuous(Bounds::new(c_lo.min(0.0), c_hi.max(0.0)));
            let zk = z[t][k];
            let c = fs.c[t];
            let tag = |s: &str| format!("master:envelope-{s}:t={t},k={k}");
            model.add_constraint(Sense::Ge, LinExpr::from(wk) - zk * c_lo, 0.0, tag("lo"))?;
            model.add_constraint(Sense::Le, LinExpr::from(wk) - zk * c_hi, 0.0, tag("hi"))?;
            // w ≥ c − C̄(1 − z), w ≤ c − C̲(1 − z)
            model.add_constraint(Sense::Ge, wk - c + zk * (-c_hi), -c_hi, tag("c-lo"))?;
            model.add_constraint(Sense::Le, wk - c + zk * (-c_lo), -c_lo, tag("c-hi"))?;
            w[t].push(wk);
        }
    }

    let phis: Vec<Vec<Vec<Vec<f64>>>> = scenarios
        .iter()
        .map(|s| scenario_coefficients(case, table, s))
        .collect();
    // ω = z·c², only where some stored scenario needs it
    let mut omega: Vec<Vec<Option<VarRef>>> = vec![vec![None; nk]; nt];
    for t in 0..nt {
        for k in 0..nk {
            let needed = phis.iter().any(|phi| phi.iter().any(|node| node[t][k] != 0.0));
            if !needed {
                continue;
            }
            let om = model.add_continuous(Bounds::new(0.0, c_hi * c_hi));
            model.add_constraint(
                Sense::Le,
                LinExpr::from(om) - w[t][k] * c_hi,
                0.0,
                format!("master:square-cap:t={t},k={k}"),
            )?;
            model.add_convex_square_leq(fs.c[t], om, Some(z[t][k]), format!("master:square:t={t},k={k}"))?;
            omega[t][k] = Some(om);
        }
    }

    let eta = model.add_continuous(Bounds::new(opts.eta_floor, f64::INFINITY));
    if !scenarios.is_empty() {
        let bounds = table.demand_bounds(case, opts.fixed_prices.as_deref());
        let lp = build_recourse(
            case,
            &bounds,
            RecourseOptions {
                polygon_sides: opts.polygon_sides,
            },
        )?;
        let all = lp.all_periods();
        for (m, phi) in phis.iter().enumerate() {
            let demand = |i: usize, t: usize| -> LinExpr {
                let cref = prices.c_ref[t];
                let mut e = LinExpr::constant(case.load_at(i, t));
                for k in 0..nk {
                    let f = phi[i][t][k];
                    if f != 0.0 {
                        e.add_term(w[t][k], f / cref).add_term(z[t][k], -f);
                    }
                }
                e
            };
            let emb = lp.embed(
                &mut model,
                &all,
                |p| match p {
                    Param::P0Da(t) => LinExpr::from(fs.p0[t]),
                    Param::Demand { node, t } => demand(node, t),
                    Param::Price(_) => unreachable!(),
                },
                false,
                &format!("m{m}:"),
            )?;
            let (mut cost, priced) = emb.split_cost(&lp);
            debug_assert_eq!(priced.len(), case.num_nodes() * nt);
            // −c·l = −c·L − Σ_k φ (ω/C_ref − w)
            for t in 0..nt {
                let cref = prices.c_ref[t];
                for i in 0..case.num_nodes() {
                    cost.add_term(fs.c[t], -case.load_at(i, t));
                    for k in 0..nk {
                        let f = phi[i][t][k];
                        if f != 0.0 {
                            cost.add_term(omega[t][k].expect("square present"), -f / cref)
                                .add_term(w[t][k], f);
                        }
                    }
                }
            }
            model.add_constraint(Sense::Ge, LinExpr::from(eta) - cost, 0.0, format!("m{m}:epigraph"))?;
        }
    }

    // Among optimal points prefer ω = z·c².
    let mut objective = fs.cost(case) + eta;
    for om in omega.iter().flatten().flatten() {
        objective.add_term(*om, SQUARE_TIE_BREAK);
    }
    model.set_objective(ObjSense::Minimize, objective)?;
    let r = model.solve(&opts.solver)?;
    match r.status {
        SolveStatus::Optimal => {}
        SolveStatus::Infeasible => return Err(CcgError::MasterInfeasible),
        s => return Err(CcgError::Solver(format!("master returned {s:?}"))),
    }
    // a valid bound despite the tie-break: subtract its largest possible value
    let n_squares = omega.iter().flatten().flatten().count() as f64;
    let lower_bound = r.objective - SQUARE_TIE_BREAK * n_squares * c_hi * c_hi;
    let x = fs.extract(case, &r);
    let mut zs = vec![0; nt];
    let mut envelope_error: f64 = 0.0;
    let mut square_error: f64 = 0.0;
    for t in 0..nt {
        let c = r.value(fs.c[t]);
        let mut best = f64::NEG_INFINITY;
        for k in 0..nk {
            let zv = r.value(z[t][k]);
            if zv > best {
                best = zv;
                zs[t] = k;
            }
            envelope_error = envelope_error.max((r.value(w[t][k]) - zv * c).abs());
            if let Some(om) = omega[t][k] {
                square_error = square_error.max((r.value(om) - zv * c * c).abs());
            }
        }
    }
    Ok(MasterOutcome {
        x,
        z: zs,
        lower_bound,
        eta: r.value(eta),
        envelope_error,
        square_error,
        cut_rounds: r.cut_rounds,
    })
}
