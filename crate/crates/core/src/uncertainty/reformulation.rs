//! Model-building side of the uncertainty set.

use std::collections::BTreeSet;

use super::{BudgetParams, ElasticityTable, UncertaintyError};
use crate::model::{Bounds, ConstraintRef, LinExpr, Model, Sense, VarKind, VarRef};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SetMode {
    /// Prices are decisions; one binary per (period, interval).
    Master,
    /// Prices are fixed; the active interval is resolved up front, with both
    /// neighbours kept as a binary choice on a shared endpoint.
    Adversary,
}

#[derive(Clone, Copy, Debug)]
pub enum PriceInput<'a> {
    Variable(&'a [VarRef]),
    Fixed(&'a [f64]),
}

#[derive(Clone, Debug)]
pub struct SetHandles {
    /// Interval selector per `[t][k]` (constants where resolved).
    pub z: Vec<Vec<LinExpr>>,
    /// Elasticity per `[node][t]`.
    pub xi: Vec<Vec<VarRef>>,
}

/// Binary selector `z[t][k]` with exactly one active interval per period and
/// the price ratio inside the selected interval.
pub fn add_interval_selector(
    model: &mut Model,
    table: &ElasticityTable,
    c_ref: &[f64],
    price: &[LinExpr],
    tag: &str,
) -> Result<Vec<Vec<VarRef>>, UncertaintyError> {
    let mut z = Vec::with_capacity(table.num_periods());
    for (t, row) in table.intervals.iter().enumerate() {
        let zt: Vec<VarRef> = (0..row.len()).map(|_| model.add_binary()).collect();
        let mut lo = price[t].clone();
        let mut hi = price[t].clone();
        let mut one = LinExpr::new();
        for (k, &(r_lo, r_hi)) in row.iter().enumerate() {
            lo.add_term(zt[k], -c_ref[t] * r_lo);
            hi.add_term(zt[k], -c_ref[t] * r_hi);
            one.add_term(zt[k], 1.0);
        }
        model.add_constraint(Sense::Ge, lo, 0.0, format!("{tag}ratio-lo:t={t}"))?;
        model.add_constraint(Sense::Le, hi, 0.0, format!("{tag}ratio-hi:t={t}"))?;
        model.add_constraint(Sense::Eq, one, 1.0, format!("{tag}one-interval:t={t}"))?;
        z.push(zt);
    }
    Ok(z)
}

/// Registers the mixed-integer form of the decision-dependent set: interval
/// selection and `Σ_k ξ⁻ z ≤ ξ ≤ Σ_k ξ⁺ z`.
pub fn add_set_reformulation(
    model: &mut Model,
    table: &ElasticityTable,
    c_ref: &[f64],
    price: PriceInput<'_>,
    mode: SetMode,
) -> Result<SetHandles, UncertaintyError> {
    table.validate()?;
    let nt = table.num_periods();
    let z: Vec<Vec<LinExpr>> = match (mode, price) {
        (SetMode::Master, p) => {
            let exprs: Vec<LinExpr> = (0..nt)
                .map(|t| match p {
                    PriceInput::Variable(c) => LinExpr::from(c[t]),
                    PriceInput::Fixed(c) => LinExpr::constant(c[t]),
                })
                .collect();
            add_interval_selector(model, table, c_ref, &exprs, "set:")?
                .into_iter()
                .map(|r| r.into_iter().map(LinExpr::from).collect())
                .collect()
        }
        (SetMode::Adversary, PriceInput::Fixed(c)) => {
            let mut z = Vec::with_capacity(nt);
            for t in 0..nt {
                let choice = IntervalChoice::for_ratio(table, t, c[t] / c_ref[t])?;
                z.push(choice.selector(model, table.num_intervals(), &format!("set:one-interval:t={t}"))?);
            }
            z
        }
        (SetMode::Adversary, PriceInput::Variable(_)) => {
            return Err(UncertaintyError::InvalidTable(
                "adversary mode needs fixed prices".into(),
            ))
        }
    };
    let mut xi = Vec::with_capacity(table.num_nodes());
    for i in 0..table.num_nodes() {
        let mut row = Vec::with_capacity(nt);
        for t in 0..nt {
            let x = model.add_continuous(Bounds::FREE);
            let mut lo = LinExpr::from(x);
            let mut hi = LinExpr::from(x);
            for (k, zk) in z[t].iter().enumerate() {
                let (a, b) = table.bounds(i, t, k);
                lo.add_scaled(zk, -a);
                hi.add_scaled(zk, -b);
            }
            model.add_constraint(Sense::Ge, lo, 0.0, format!("set:xi-lo:node={i},t={t}"))?;
            model.add_constraint(Sense::Le, hi, 0.0, format!("set:xi-hi:node={i},t={t}"))?;
            row.push(x);
        }
        xi.push(row);
    }
    Ok(SetHandles { z, xi })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IntervalChoice {
    Fixed(usize),
    /// Adversary may pick any of these (a shared endpoint).
    Either(Vec<usize>),
}

impl IntervalChoice {
    pub fn for_ratio(table: &ElasticityTable, t: usize, ratio: f64) -> Result<Self, UncertaintyError> {
        let ks = table.admissible_intervals(t, ratio);
        match ks.len() {
            0 => Err(UncertaintyError::OutOfCoverage { t, ratio }),
            1 => Ok(IntervalChoice::Fixed(ks[0])),
            _ => Ok(IntervalChoice::Either(ks)),
        }
    }

    fn selector(&self, model: &mut Model, nk: usize, tag: &str) -> Result<Vec<LinExpr>, UncertaintyError> {
        let mut z = vec![LinExpr::new(); nk];
        match self {
            IntervalChoice::Fixed(k) => z[*k] = LinExpr::constant(1.0),
            IntervalChoice::Either(ks) => {
                let mut one = LinExpr::new();
                for &k in ks {
                    let b = model.add_binary();
                    z[k] = LinExpr::from(b);
                    one.add_term(b, 1.0);
                }
                model.add_constraint(Sense::Eq, one, 1.0, tag)?;
            }
        }
        Ok(z)
    }
}

#[derive(Clone, Debug)]
pub struct BudgetHandles {
    /// `u ≥ |2v − 1|` per `[node][t]`.
    pub u: Vec<Vec<Option<VarRef>>>,
    pub spatial: Vec<ConstraintRef>,
    pub temporal: Vec<ConstraintRef>,
}

/// `u ≥ |2v − 1|`, `u ≤ 1`, `Σ_i u_it ≤ Γ_S` for every period and
/// `Σ_t u_it ≤ Γ_T` for every node, over the entries of `v` that exist.
pub fn add_budget_constraints(
    model: &mut Model,
    v: &[Vec<Option<VarRef>>],
    budgets: BudgetParams,
    tag: &str,
) -> Result<BudgetHandles, UncertaintyError> {
    let nt = v.first().map_or(0, |r| r.len());
    let mut u = vec![vec![None; nt]; v.len()];
    for (i, row) in v.iter().enumerate() {
        for (t, vi) in row.iter().enumerate() {
            if let Some(vi) = *vi {
                let ui = model.add_continuous(Bounds::new(0.0, 1.0));
                model.add_constraint(Sense::Ge, LinExpr::from(ui) - vi * 2.0 + 1.0, 0.0, format!("{tag}abs-up:node={i},t={t}"))?;
                model.add_constraint(Sense::Ge, LinExpr::from(ui) + vi * 2.0 - 1.0, 0.0, format!("{tag}abs-dn:node={i},t={t}"))?;
                u[i][t] = Some(ui);
            }
        }
    }
    let mut spatial = Vec::new();
    for t in 0..nt {
        let mut e = LinExpr::new();
        for row in &u {
            if let Some(x) = row[t] {
                e.add_term(x, 1.0);
            }
        }
        if !e.terms().is_empty() {
            spatial.push(model.add_constraint(Sense::Le, e, budgets.gamma_s, format!("{tag}spatial-budget:t={t}"))?);
        }
    }
    let mut temporal = Vec::new();
    for (i, row) in u.iter().enumerate() {
        let mut e = LinExpr::new();
        for x in row.iter().flatten() {
            e.add_term(*x, 1.0);
        }
        if !e.terms().is_empty() {
            temporal.push(model.add_constraint(Sense::Le, e, budgets.gamma_t, format!("{tag}temporal-budget:node={i}"))?);
        }
    }
    Ok(BudgetHandles { u, spatial, temporal })
}

/// The adversary's scenario variables for fixed prices: vertex coordinates
/// `v`, the interval selector and `ξ` as an expression in them.
#[derive(Clone, Debug)]
pub struct AdversaryScenario {
    pub v: Vec<Vec<Option<VarRef>>>,
    pub z: Vec<Vec<LinExpr>>,
    pub xi: Vec<Vec<LinExpr>>,
    pub budgets: BudgetHandles,
}

impl AdversaryScenario {
    pub fn active_intervals(&self, values: impl Fn(&LinExpr) -> f64) -> Vec<usize> {
        self.z
            .iter()
            .map(|zt| {
                let mut best = 0;
                let mut best_val = f64::NEG_INFINITY;
                for (k, e) in zt.iter().enumerate() {
                    let x = values(e);
                    if x > best_val + 1e-9 {
                        best = k;
                        best_val = x;
                    }
                }
                best
            })
            .collect()
    }
}

/// Builds the adversary's scenario for the given periods and the entries
/// `(node, t)` enabled in `mask` (others keep `ξ = 0`). With a fixed
/// interval `ξ` is affine in `v`; on a shared endpoint the interval is a
/// binary choice and `z·v` is linearized exactly.
pub fn add_adversary_scenario(
    model: &mut Model,
    table: &ElasticityTable,
    choices: &[IntervalChoice],
    periods: &BTreeSet<usize>,
    mask: &[Vec<bool>],
    budgets: BudgetParams,
    v_binary: bool,
) -> Result<AdversaryScenario, UncertaintyError> {
    let n = table.num_nodes();
    let nt = table.num_periods();
    let nk = table.num_intervals();
    let kind = if v_binary { VarKind::Binary } else { VarKind::Continuous };
    let mut v = vec![vec![None; nt]; n];
    for (i, row) in v.iter_mut().enumerate() {
        for &t in periods {
            if mask[i][t] {
                row[t] = Some(model.add_variable(kind, Bounds::UNIT)?);
            }
        }
    }
    let mut z = vec![Vec::new(); nt];
    for &t in periods {
        z[t] = choices[t].selector(model, nk, &format!("adv:one-interval:t={t}"))?;
    }
    let mut xi = vec![vec![LinExpr::new(); nt]; n];
    for i in 0..n {
        for &t in periods {
            let Some(vi) = v[i][t] else { continue };
            let e = &mut xi[i][t];
            match &choices[t] {
                IntervalChoice::Fixed(k) => {
                    let (a, b) = table.bounds(i, t, *k);
                    e.add_constant(a).add_term(vi, b - a);
                }
                IntervalChoice::Either(ks) => {
                    for &k in ks {
                        let (a, b) = table.bounds(i, t, k);
                        let zk = z[t][k].clone();
                        // g = z·v
                        let g = model.add_continuous(Bounds::UNIT);
                        let tag = |s: &str| format!("adv:zv-{s}:node={i},t={t},k={k}");
                        model.add_constraint(Sense::Le, LinExpr::from(g) - zk.clone(), 0.0, tag("z"))?;
                        model.add_constraint(Sense::Le, g - vi, 0.0, tag("v"))?;
                        model.add_constraint(Sense::Ge, LinExpr::from(g) - vi - zk.clone(), -1.0, tag("sum"))?;
                        e.add_scaled(&zk, a).add_term(g, b - a);
                    }
                }
            }
        }
    }
    let budgets = add_budget_constraints(model, &v, budgets, "adv:")?;
    Ok(AdversaryScenario { v, z, xi, budgets })
}
