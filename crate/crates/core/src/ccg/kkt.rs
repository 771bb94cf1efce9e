//! Optimality conditions of the recourse LP as mixed-integer constraints, so
//! an outer maximization over the scenario can be solved as one MILP.

use std::collections::BTreeSet;

use crate::model::{Bounds, ConstraintRef, LinExpr, Model, ModelError, Sense, VarRef};
use crate::network::{Param, RecourseLp};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KktMode {
    /// `min e(x)ᵀy` over the recourse rows.
    Subproblem,
    /// `min 1ᵀs` with slacks on every relaxable row.
    Feasibility,
}

/// Handles of one KKT system.
#[derive(Clone, Debug)]
pub struct KktSystem {
    /// Recourse columns per column of the LP (`None` outside the periods).
    pub y: Vec<Option<VarRef>>,
    /// Feasibility slacks.
    pub s: Vec<VarRef>,
    /// Row duals per row of the LP.
    pub pi: Vec<Option<VarRef>>,
    /// Duals of `s ≥ 0`.
    pub theta: Vec<VarRef>,
    /// Duals of the column bounds `(lower, upper)`.
    pub bound_duals: Vec<(Option<VarRef>, Option<VarRef>)>,
    pub binaries: Vec<VarRef>,
    pub stationarity: Vec<ConstraintRef>,
    /// `e(x)ᵀy` or `1ᵀs`, including constants.
    pub objective: LinExpr,
}

struct Col {
    lo: f64,
    hi: f64,
    cost: f64,
    /// Largest `y − lo` or `hi − y` at an optimum when a bound is infinite.
    reach: f64,
    dual_m: f64,
    lp_index: Option<usize>,
}

struct Row {
    terms: Vec<(usize, f64)>,
    sense: Sense,
    rhs: LinExpr,
    slack_m: f64,
    dual_m: f64,
    lp_index: Option<usize>,
    tag: String,
}

/// Registers primal feasibility, dual feasibility, stationarity and Big-M
/// complementarity of the recourse LP for `periods`. Right-hand sides are
/// resolved through `resolve`; costs use the fixed `prices`.
#[allow(clippy::too_many_arguments)]
pub fn add_kkt(
    model: &mut Model,
    lp: &RecourseLp,
    periods: &BTreeSet<usize>,
    mut resolve: impl FnMut(Param) -> LinExpr,
    prices: &[f64],
    mode: KktMode,
    big_m: f64,
    tag: &str,
) -> Result<KktSystem, ModelError> {
    let fc = mode == KktMode::Feasibility;
    let mut cols: Vec<Col> = Vec::new();
    let mut col_of = vec![None; lp.vars.len()];
    for (j, v) in lp.vars.iter().enumerate() {
        if !periods.contains(&v.t) {
            continue;
        }
        let cost = if fc {
            0.0
        } else {
            v.cost.eval(|p| match p {
                Param::Price(t) => prices[t],
                _ => unreachable!("recourse costs depend on prices only"),
            })
        };
        col_of[j] = Some(cols.len());
        cols.push(Col {
            lo: v.lo,
            hi: v.hi,
            cost,
            reach: f64::INFINITY,
            dual_m: big_m,
            lp_index: Some(j),
        });
    }
    let mut rows: Vec<Row> = Vec::new();
    let mut slack_cols = Vec::new();
    for (i, r) in lp.rows_in(periods) {
        let mut terms: Vec<(usize, f64)> = r.terms.iter().map(|&(j, a)| (col_of[j].unwrap(), a)).collect();
        let rhs = r.rhs.to_expr(&mut resolve);
        let relax = lp.relax_bound[r.t] * 1.5 + 1.0;
        let mut slack_m = r.slack_bound;
        let mut dual_m = big_m;
        if fc && r.relaxable {
            let mut add_slack = |coef: f64, terms: &mut Vec<(usize, f64)>| {
                slack_cols.push(cols.len());
                terms.push((cols.len(), coef));
                cols.push(Col {
                    lo: 0.0,
                    hi: f64::INFINITY,
                    cost: 1.0,
                    reach: relax,
                    dual_m: 1.0,
                    lp_index: None,
                });
            };
            match r.sense {
                Sense::Ge => add_slack(1.0, &mut terms),
                Sense::Le => add_slack(-1.0, &mut terms),
                Sense::Eq => {
                    add_slack(1.0, &mut terms);
                    add_slack(-1.0, &mut terms);
                }
            }
            slack_m += relax;
            dual_m = 1.0;
        }
        rows.push(Row {
            terms,
            sense: r.sense,
            rhs,
            slack_m,
            dual_m,
            lp_index: Some(i),
            tag: r.tag.clone(),
        });
    }

    let y: Vec<VarRef> = cols
        .iter()
        .map(|c| model.add_continuous(Bounds::new(c.lo, c.hi)))
        .collect();
    let mut binaries = Vec::new();
    let mut pi = vec![None; lp.rows.len()];
    // stationarity accumulators: Σ duals·coef per column
    let mut grad: Vec<LinExpr> = vec![LinExpr::new(); cols.len()];
    for row in &rows {
        // orient inequalities as `a·y ≥ b`
        let sign = if row.sense == Sense::Le { -1.0 } else { 1.0 };
        let mut lhs = LinExpr::new();
        for &(c, a) in &row.terms {
            lhs.add_term(y[c], sign * a);
        }
        let slack = lhs - row.rhs.clone() * sign;
        let p = match row.sense {
            Sense::Eq => {
                let bound = if row.dual_m.is_finite() && fc && row.dual_m <= 1.0 { row.dual_m } else { f64::INFINITY };
                let p = model.add_continuous(Bounds::new(-bound, bound));
                model.add_constraint(Sense::Eq, slack, 0.0, format!("{tag}primal:{}", row.tag))?;
                p
            }
            _ => {
                let p = model.add_continuous(Bounds::new(0.0, row.dual_m));
                let b = model.add_complementarity_bounded(
                    p,
                    slack,
                    row.dual_m,
                    fc && row.dual_m <= 1.0,
                    row.slack_m.max(1.0),
                    format!("{tag}cs:{}", row.tag),
                )?;
                binaries.push(b);
                p
            }
        };
        for &(c, a) in &row.terms {
            grad[c].add_term(p, sign * a);
        }
        if let Some(i) = row.lp_index {
            pi[i] = Some(p);
        }
    }

    let mut bound_duals = vec![(None, None); lp.vars.len()];
    let mut theta = Vec::new();
    for (c, col) in cols.iter().enumerate() {
        let width = col.hi - col.lo;
        let reach = if width.is_finite() { width } else { col.reach };
        let mut lo_dual = None;
        let mut hi_dual = None;
        if col.lo.is_finite() && col.hi.is_finite() && width <= 0.0 {
            let d = model.add_continuous(Bounds::FREE);
            grad[c].add_term(d, 1.0);
            lo_dual = Some(d);
        } else {
            if col.lo.is_finite() {
                let d = model.add_continuous(Bounds::new(0.0, col.dual_m));
                let b = model.add_complementarity_bounded(
                    d,
                    LinExpr::from(y[c]) - col.lo,
                    col.dual_m,
                    fc && col.dual_m <= 1.0,
                    reach.max(1.0),
                    format!("{tag}cs-lo:col={c}"),
                )?;
                binaries.push(b);
                grad[c].add_term(d, 1.0);
                lo_dual = Some(d);
            }
            if col.hi.is_finite() {
                let d = model.add_continuous(Bounds::new(0.0, col.dual_m));
                let b = model.add_complementarity_bounded(
                    d,
                    LinExpr::constant(col.hi) - y[c],
                    col.dual_m,
                    fc && col.dual_m <= 1.0,
                    reach.max(1.0),
                    format!("{tag}cs-hi:col={c}"),
                )?;
                binaries.push(b);
                grad[c].add_term(d, -1.0);
                hi_dual = Some(d);
            }
        }
        match col.lp_index {
            Some(j) => bound_duals[j] = (lo_dual, hi_dual),
            None => theta.extend(lo_dual),
        }
    }

    let mut stationarity = Vec::with_capacity(cols.len());
    for (c, col) in cols.iter().enumerate() {
        let g = std::mem::take(&mut grad[c]);
        stationarity.push(model.add_constraint(Sense::Eq, g, col.cost, format!("{tag}stationarity:col={c}"))?);
    }

    let mut objective = LinExpr::new();
    for (c, col) in cols.iter().enumerate() {
        if col.cost != 0.0 {
            objective.add_term(y[c], col.cost);
        }
    }
    if !fc {
        for &t in periods {
            objective.add_constant(lp.cost_constant[t]);
        }
    }
    let mut y_out = vec![None; lp.vars.len()];
    for (c, col) in cols.iter().enumerate() {
        if let Some(j) = col.lp_index {
            y_out[j] = Some(y[c]);
        }
    }
    Ok(KktSystem {
        y: y_out,
        s: slack_cols.iter().map(|&c| y[c]).collect(),
        pi,
        theta,
        bound_duals,
        binaries,
        stationarity,
        objective,
    })
}
