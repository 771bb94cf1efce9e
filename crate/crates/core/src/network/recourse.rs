//! The real-time recourse problem as a parametric LP.
//!
//! Rows and costs depend on a small set of outer quantities ([`Param`]): the
//! day-ahead grid purchase, the realized demand of each node and the TOU
//! price. Callers resolve those parameters to numbers or to expressions in
//! their own model, so one description serves the adversarial subproblems,
//! the master's recourse copies and the brute-force oracle alike.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{polygon_halfplanes, NetworkCase, NetworkError};
use crate::model::{Bounds, ConstraintRef, LinExpr, Model, Sense, SolveResult, VarRef};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Param {
    /// Day-ahead purchase `p0_da` in period t.
    P0Da(usize),
    /// Realized demand `l_it`.
    Demand { node: usize, t: usize },
    /// TOU price `c_t`.
    Price(usize),
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamAffine {
    pub constant: f64,
    pub terms: Vec<(Param, f64)>,
}

impl ParamAffine {
    pub fn constant(c: f64) -> Self {
        ParamAffine {
            constant: c,
            terms: Vec::new(),
        }
    }

    pub fn param(p: Param, coef: f64) -> Self {
        ParamAffine {
            constant: 0.0,
            terms: vec![(p, coef)],
        }
    }

    pub fn eval(&self, mut value: impl FnMut(Param) -> f64) -> f64 {
        self.constant + self.terms.iter().map(|&(p, a)| a * value(p)).sum::<f64>()
    }

    pub fn to_expr(&self, mut resolve: impl FnMut(Param) -> LinExpr) -> LinExpr {
        let mut e = LinExpr::constant(self.constant);
        for &(p, a) in &self.terms {
            e.add_scaled(&resolve(p), a);
        }
        e
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RowKind {
    Demand,
    RootLink,
    BalanceP,
    BalanceQ,
    VoltageDrop,
    VoltageLo,
    VoltageHi,
    LineLimit,
    RootBound,
}

#[derive(Clone, Debug)]
pub struct RVar {
    pub lo: f64,
    pub hi: f64,
    pub cost: ParamAffine,
    pub t: usize,
}

#[derive(Clone, Debug)]
pub struct RRow {
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: ParamAffine,
    pub tag: String,
    pub kind: RowKind,
    pub t: usize,
    /// Gets a penalized slack in the feasibility check.
    pub relaxable: bool,
    /// Upper bound on `|lhs − rhs|` for inequality rows at any recourse-feasible
    /// point.
    pub slack_bound: f64,
}

/// Range of the realized demand per `[node][t]` over every admissible price
/// and elasticity.
#[derive(Clone, Debug, PartialEq)]
pub struct DemandBounds {
    pub lo: Vec<Vec<f64>>,
    pub hi: Vec<Vec<f64>>,
}

impl DemandBounds {
    /// Demand fixed at the prediction.
    pub fn fixed(case: &NetworkCase) -> Self {
        let l: Vec<Vec<f64>> = case.nodes.iter().map(|n| n.load.clone()).collect();
        DemandBounds {
            lo: l.clone(),
            hi: l,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RecourseOptions {
    pub polygon_sides: usize,
}

impl Default for RecourseOptions {
    fn default() -> Self {
        RecourseOptions {
            polygon_sides: super::DEFAULT_POLYGON_SIDES,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RecourseLp {
    pub periods: usize,
    pub vars: Vec<RVar>,
    pub rows: Vec<RRow>,
    /// Cost of fixed generation, per period.
    pub cost_constant: Vec<f64>,
    /// Bound on the optimal total slack of the feasibility check, per period.
    pub relax_bound: Vec<f64>,
    pub demand: Vec<Vec<usize>>,
    /// Active/reactive generation columns (`None` when fixed); the root entry
    /// is the real-time grid exchange.
    pub p_rt: Vec<Vec<Option<usize>>>,
    pub q_rt: Vec<Vec<Option<usize>>>,
    pub fixed_p: Vec<f64>,
    pub fixed_q: Vec<f64>,
    pub pf: Vec<Vec<usize>>,
    pub qf: Vec<Vec<usize>>,
    pub w: Vec<Vec<usize>>,
    pub up: Vec<usize>,
    pub dn: Vec<usize>,
    pub voltage_scale: f64,
}

fn net_range(items: impl Iterator<Item = (f64, f64, f64, f64)>) -> (f64, f64) {
    // Σ (a − g) with a ∈ [alo, ahi], g ∈ [glo, ghi]
    items.fold((0.0, 0.0), |(lo, hi), (alo, ahi, glo, ghi)| {
        (lo + alo - ghi, hi + ahi - glo)
    })
}

fn max_abs(r: (f64, f64)) -> f64 {
    r.0.abs().max(r.1.abs())
}

/// Builds the second-stage LP for every period: demand definition, root
/// exchange with up/down adjustments, nodal balances, voltage drop,
/// generation limits, polygonized line limits and voltage limits.
///
/// Half-planes that no admissible injection pattern can reach are left out;
/// line flows are fixed by the nodal injections in a radial network, so the
/// omission never changes the feasible set.
pub fn build_recourse(
    case: &NetworkCase,
    demand: &DemandBounds,
    opts: RecourseOptions,
) -> Result<RecourseLp, NetworkError> {
    let topo = case.topology()?;
    let n = case.num_nodes();
    let nl = case.num_lines();
    let nt = case.periods;
    let scale = case.voltage_scale();
    if demand.lo.len() != n || demand.lo.iter().any(|r| r.len() != nt) {
        return Err(NetworkError::DimensionMismatch("demand bounds do not match the case".into()));
    }
    let prices = &case.prices;
    let mut lp = RecourseLp {
        periods: nt,
        vars: Vec::new(),
        rows: Vec::new(),
        cost_constant: vec![0.0; nt],
        relax_bound: vec![0.0; nt],
        demand: vec![Vec::new(); n],
        p_rt: vec![Vec::new(); n],
        q_rt: vec![Vec::new(); n],
        fixed_p: case.nodes.iter().map(|nd| nd.p_min).collect(),
        fixed_q: case.nodes.iter().map(|nd| nd.q_min).collect(),
        pf: vec![Vec::new(); nl],
        qf: vec![Vec::new(); nl],
        w: vec![Vec::new(); n],
        up: Vec::new(),
        dn: Vec::new(),
        voltage_scale: scale,
    };
    let add_var = |lp: &mut RecourseLp, lo: f64, hi: f64, cost: ParamAffine, t: usize| {
        lp.vars.push(RVar { lo, hi, cost, t });
        lp.vars.len() - 1
    };
    let root = &case.nodes[0];
    let lmax_abs = |i: usize, t: usize| demand.lo[i][t].abs().max(demand.hi[i][t].abs());

    for t in 0..nt {
        // bound on |p0| at any balanced real-time or day-ahead point
        let gen_abs: f64 = case.nodes[1..]
            .iter()
            .map(|nd| nd.p_min.abs().max(nd.p_max.abs()))
            .sum();
        let rt_abs: f64 = (0..n).map(|i| lmax_abs(i, t)).sum::<f64>() + gen_abs;
        let da_abs: f64 = case.total_load(t) + gen_abs;
        let d_max = rt_abs + da_abs + 1.0;

        for i in 0..n {
            let l = add_var(&mut lp, f64::NEG_INFINITY, f64::INFINITY, ParamAffine::param(Param::Price(t), -1.0), t);
            lp.demand[i].push(l);
        }
        for (i, nd) in case.nodes.iter().enumerate() {
            if i == 0 {
                let p0 = add_var(&mut lp, f64::NEG_INFINITY, f64::INFINITY, ParamAffine::default(), t);
                let q0 = add_var(&mut lp, f64::NEG_INFINITY, f64::INFINITY, ParamAffine::default(), t);
                lp.p_rt[0].push(Some(p0));
                lp.q_rt[0].push(Some(q0));
                continue;
            }
            if nd.has_active_gen() {
                let v = add_var(&mut lp, nd.p_min, nd.p_max, ParamAffine::constant(nd.gen_cost), t);
                lp.p_rt[i].push(Some(v));
            } else {
                lp.cost_constant[t] += nd.gen_cost * nd.p_min;
                lp.p_rt[i].push(None);
            }
            if nd.has_reactive_gen() {
                let v = add_var(&mut lp, nd.q_min, nd.q_max, ParamAffine::default(), t);
                lp.q_rt[i].push(Some(v));
            } else {
                lp.q_rt[i].push(None);
            }
        }
        for k in 0..nl {
            let a = add_var(&mut lp, f64::NEG_INFINITY, f64::INFINITY, ParamAffine::default(), t);
            let b = add_var(&mut lp, f64::NEG_INFINITY, f64::INFINITY, ParamAffine::default(), t);
            lp.pf[k].push(a);
            lp.qf[k].push(b);
        }
        for i in 0..n {
            let v = add_var(&mut lp, f64::NEG_INFINITY, f64::INFINITY, ParamAffine::default(), t);
            lp.w[i].push(v);
        }
        let up = add_var(&mut lp, 0.0, d_max, ParamAffine::constant(prices.rho_up[t]), t);
        let dn = add_var(&mut lp, 0.0, d_max, ParamAffine::constant(-prices.rho_dn[t]), t);
        lp.up.push(up);
        lp.dn.push(dn);

        let mut rows: Vec<RRow> = Vec::new();
        let push_row = |rows: &mut Vec<RRow>,
                            terms: Vec<(usize, f64)>,
                            sense: Sense,
                            rhs: ParamAffine,
                            kind: RowKind,
                            tag: String,
                            relaxable: bool,
                            slack_bound: f64| {
            rows.push(RRow {
                terms,
                sense,
                rhs,
                tag,
                kind,
                t,
                relaxable,
                slack_bound,
            });
        };

        for i in 0..n {
            push_row(
                &mut rows,
                vec![(lp.demand[i][t], 1.0)],
                Sense::Eq,
                ParamAffine::param(Param::Demand { node: i, t }, 1.0),
                RowKind::Demand,
                format!("rt-demand:node={i},t={t}"),
                false,
                0.0,
            );
        }
        let p0 = lp.p_rt[0][t].unwrap();
        push_row(
            &mut rows,
            vec![(p0, 1.0), (up, -1.0), (dn, 1.0)],
            Sense::Eq,
            ParamAffine::param(Param::P0Da(t), 1.0),
            RowKind::RootLink,
            format!("rt-root-exchange:t={t}"),
            false,
            0.0,
        );
        if case.root_bounded {
            let q0 = lp.q_rt[0][t].unwrap();
            for (var, lo, hi, what) in [(p0, root.p_min, root.p_max, "p"), (q0, root.q_min, root.q_max, "q")] {
                let width = hi - lo;
                push_row(&mut rows, vec![(var, 1.0)], Sense::Ge, ParamAffine::constant(lo), RowKind::RootBound,
                    format!("rt-root-bound-{what}-lo:t={t}"), true, width);
                push_row(&mut rows, vec![(var, 1.0)], Sense::Le, ParamAffine::constant(hi), RowKind::RootBound,
                    format!("rt-root-bound-{what}-hi:t={t}"), true, width);
            }
        }
        for (j, nd) in case.nodes.iter().enumerate() {
            let mut tp = vec![(lp.demand[j][t], -1.0)];
            let mut tq = vec![(lp.demand[j][t], -nd.kappa)];
            let mut cp = 0.0;
            let mut cq = 0.0;
            match lp.p_rt[j][t] {
                Some(v) => tp.push((v, 1.0)),
                None => cp -= lp.fixed_p[j],
            }
            match lp.q_rt[j][t] {
                Some(v) => tq.push((v, 1.0)),
                None => cq -= lp.fixed_q[j],
            }
            if let Some(k) = topo.parent_line[j] {
                tp.push((lp.pf[k][t], 1.0));
                tq.push((lp.qf[k][t], 1.0));
            }
            for &k in &topo.child_lines[j] {
                tp.push((lp.pf[k][t], -1.0));
                tq.push((lp.qf[k][t], -1.0));
            }
            push_row(&mut rows, tp, Sense::Eq, ParamAffine::constant(cp), RowKind::BalanceP,
                format!("rt-balance-p:node={j},t={t}"), false, 0.0);
            push_row(&mut rows, tq, Sense::Eq, ParamAffine::constant(cq), RowKind::BalanceQ,
                format!("rt-balance-q:node={j},t={t}"), false, 0.0);
        }

        // flow ranges from subtree injections
        let mut pbox = Vec::with_capacity(nl);
        let mut qbox = Vec::with_capacity(nl);
        for k in 0..nl {
            let sub = &topo.subtree[k];
            pbox.push(net_range(sub.iter().map(|&j| {
                let nd = &case.nodes[j];
                (demand.lo[j][t], demand.hi[j][t], nd.p_min, nd.p_max)
            })));
            qbox.push(net_range(sub.iter().map(|&j| {
                let nd = &case.nodes[j];
                let a = nd.kappa * demand.lo[j][t];
                let b = nd.kappa * demand.hi[j][t];
                (a.min(b), a.max(b), nd.q_min, nd.q_max)
            })));
        }

        let mut relax = 0.0;
        for (k, line) in case.lines.iter().enumerate() {
            push_row(
                &mut rows,
                vec![
                    (lp.w[line.to][t], 1.0),
                    (lp.w[line.from][t], -1.0),
                    (lp.pf[k][t], line.r),
                    (lp.qf[k][t], line.x),
                ],
                Sense::Eq,
                ParamAffine::constant(0.0),
                RowKind::VoltageDrop,
                format!("rt-voltage-drop:line={k},t={t}"),
                false,
                0.0,
            );
            for (s, hp) in polygon_halfplanes(opts.polygon_sides, line.s_max)?.into_iter().enumerate() {
                let (plo, phi) = pbox[k];
                let (qlo, qhi) = qbox[k];
                let reach = (hp.cos * plo).max(hp.cos * phi) + (hp.sin * qlo).max(hp.sin * qhi);
                if reach <= hp.rhs {
                    continue;
                }
                let low = (hp.cos * plo).min(hp.cos * phi) + (hp.sin * qlo).min(hp.sin * qhi);
                relax += reach - hp.rhs;
                push_row(
                    &mut rows,
                    vec![(lp.pf[k][t], hp.cos), (lp.qf[k][t], hp.sin)],
                    Sense::Le,
                    ParamAffine::constant(hp.rhs),
                    RowKind::LineLimit,
                    format!("rt-line-limit:line={k},side={s},t={t}"),
                    true,
                    (hp.rhs - low).max(0.0),
                );
            }
        }

        // Node limits implied by the root limits and the largest possible
        // drop along the path are redundant and left out.
        let w0 = root.v_min * root.v_min * scale;
        let w0_hi = root.v_max * root.v_max * scale;
        for (i, nd) in case.nodes.iter().enumerate() {
            let wlo = nd.v_min * nd.v_min * scale;
            let whi = nd.v_max * nd.v_max * scale;
            let drop: f64 = topo.path_lines[i]
                .iter()
                .map(|&k| case.lines[k].r * max_abs(pbox[k]) + case.lines[k].x * max_abs(qbox[k]))
                .sum();
            if i == 0 || w0 - drop < wlo {
                push_row(&mut rows, vec![(lp.w[i][t], 1.0)], Sense::Ge, ParamAffine::constant(wlo), RowKind::VoltageLo,
                    format!("rt-voltage-lo:node={i},t={t}"), true, whi - wlo);
            }
            if i == 0 || w0_hi + drop > whi {
                push_row(&mut rows, vec![(lp.w[i][t], 1.0)], Sense::Le, ParamAffine::constant(whi), RowKind::VoltageHi,
                    format!("rt-voltage-hi:node={i},t={t}"), true, whi - wlo);
            }
            relax += (wlo - (w0 - drop)).max(0.0) + ((w0 + drop) - whi).max(0.0);
        }
        if case.root_bounded {
            relax += rt_abs + root.p_min.abs().max(root.p_max.abs());
            let q_abs: f64 = (0..n)
                .map(|i| case.nodes[i].kappa.abs() * lmax_abs(i, t) + case.nodes[i].q_min.abs().max(case.nodes[i].q_max.abs()))
                .sum();
            relax += q_abs + root.q_min.abs().max(root.q_max.abs());
        }
        lp.relax_bound[t] = relax + 1.0;
        lp.rows.extend(rows);
    }
    Ok(lp)
}

/// Handles of one copy of the recourse LP inside a model.
#[derive(Clone, Debug)]
pub struct EmbeddedRecourse {
    pub y: Vec<Option<VarRef>>,
    pub rows: Vec<Option<ConstraintRef>>,
    /// Feasibility-check slacks (empty unless embedded with relaxation).
    pub slacks: Vec<VarRef>,
    pub periods: BTreeSet<usize>,
}

impl RecourseLp {
    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn rows_in(&self, periods: &BTreeSet<usize>) -> impl Iterator<Item = (usize, &RRow)> {
        let periods = periods.clone();
        self.rows.iter().enumerate().filter(move |(_, r)| periods.contains(&r.t))
    }

    pub fn all_periods(&self) -> BTreeSet<usize> {
        (0..self.periods).collect()
    }

    /// Adds one copy of the LP for the selected periods. Row right-hand sides
    /// are resolved through `resolve`. With `relax`, every relaxable row gets
    /// a non-negative slack (two for equalities) collected in `slacks`.
    pub fn embed(
        &self,
        model: &mut Model,
        periods: &BTreeSet<usize>,
        mut resolve: impl FnMut(Param) -> LinExpr,
        relax: bool,
        tag_prefix: &str,
    ) -> Result<EmbeddedRecourse, NetworkError> {
        let mut y = vec![None; self.vars.len()];
        for (j, v) in self.vars.iter().enumerate() {
            if periods.contains(&v.t) {
                y[j] = Some(model.add_variable(crate::model::VarKind::Continuous, Bounds::new(v.lo, v.hi))?);
            }
        }
        let mut rows = vec![None; self.rows.len()];
        let mut slacks = Vec::new();
        for (i, r) in self.rows_in(periods) {
            let mut e = LinExpr::new();
            for &(j, a) in &r.terms {
                e.add_term(y[j].expect("row references a column of its period"), a);
            }
            e -= &r.rhs.to_expr(&mut resolve);
            if relax && r.relaxable {
                let s = model.add_continuous(Bounds::NONNEG);
                match r.sense {
                    Sense::Ge => {
                        e.add_term(s, 1.0);
                    }
                    Sense::Le => {
                        e.add_term(s, -1.0);
                    }
                    Sense::Eq => {
                        let s2 = model.add_continuous(Bounds::NONNEG);
                        e.add_term(s, 1.0).add_term(s2, -1.0);
                        slacks.push(s2);
                    }
                }
                slacks.push(s);
            }
            rows[i] = Some(model.add_constraint(r.sense, e, 0.0, format!("{tag_prefix}{}", r.tag))?);
        }
        Ok(EmbeddedRecourse {
            y,
            rows,
            slacks,
            periods: periods.clone(),
        })
    }
}

impl EmbeddedRecourse {
    /// Recourse cost with prices resolved to numbers.
    pub fn cost(&self, lp: &RecourseLp, price: impl Fn(usize) -> f64) -> LinExpr {
        let mut e = LinExpr::new();
        for (j, v) in lp.vars.iter().enumerate() {
            if let Some(y) = self.y[j] {
                let c = v.cost.eval(|p| match p {
                    Param::Price(t) => price(t),
                    _ => panic!("recourse costs depend on prices only"),
                });
                if c != 0.0 {
                    e.add_term(y, c);
                }
            }
        }
        for &t in &self.periods {
            e.add_constant(lp.cost_constant[t]);
        }
        e
    }

    /// Cost terms that do not involve prices, plus `(column, t, coefficient)`
    /// for every price-dependent term.
    pub fn split_cost(&self, lp: &RecourseLp) -> (LinExpr, Vec<(VarRef, usize, f64)>) {
        let mut e = LinExpr::new();
        let mut priced = Vec::new();
        for (j, v) in lp.vars.iter().enumerate() {
            if let Some(y) = self.y[j] {
                if v.cost.constant != 0.0 {
                    e.add_term(y, v.cost.constant);
                }
                for &(p, a) in &v.cost.terms {
                    match p {
                        Param::Price(t) => priced.push((y, t, a)),
                        _ => panic!("recourse costs depend on prices only"),
                    }
                }
            }
        }
        for &t in &self.periods {
            e.add_constant(lp.cost_constant[t]);
        }
        (e, priced)
    }

    pub fn slack_total(&self) -> LinExpr {
        let mut e = LinExpr::new();
        for &s in &self.slacks {
            e.add_term(s, 1.0);
        }
        e
    }

    pub fn extract(&self, lp: &RecourseLp, r: &SolveResult) -> SecondStageSolution {
        lp.solution_from(|j| self.y[j].map(|v| r.value(v)).unwrap_or(f64::NAN))
    }
}

/// Real-time decisions. Fixed generators report their fixed output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecondStageSolution {
    pub demand: Vec<Vec<f64>>,
    pub p_rt: Vec<Vec<f64>>,
    pub q_rt: Vec<Vec<f64>>,
    pub pf_rt: Vec<Vec<f64>>,
    pub qf_rt: Vec<Vec<f64>>,
    /// Squared voltage magnitude, p.u.
    pub v_rt: Vec<Vec<f64>>,
    pub adj_up: Vec<f64>,
    pub adj_dn: Vec<f64>,
}

impl RecourseLp {
    pub fn solution_from(&self, value: impl Fn(usize) -> f64) -> SecondStageSolution {
        let grid = |g: &Vec<Vec<usize>>| -> Vec<Vec<f64>> {
            g.iter().map(|row| row.iter().map(|&j| value(j)).collect()).collect()
        };
        let gen = |g: &Vec<Vec<Option<usize>>>, fixed: &Vec<f64>| -> Vec<Vec<f64>> {
            g.iter()
                .enumerate()
                .map(|(i, row)| {
                    row.iter()
                        .map(|o| o.map(|j| value(j)).unwrap_or(fixed[i]))
                        .collect()
                })
                .collect()
        };
        SecondStageSolution {
            demand: grid(&self.demand),
            p_rt: gen(&self.p_rt, &self.fixed_p),
            q_rt: gen(&self.q_rt, &self.fixed_q),
            pf_rt: grid(&self.pf),
            qf_rt: grid(&self.qf),
            v_rt: self
                .w
                .iter()
                .map(|row| row.iter().map(|&j| value(j) / self.voltage_scale).collect())
                .collect(),
            adj_up: self.up.iter().map(|&j| value(j)).collect(),
            adj_dn: self.dn.iter().map(|&j| value(j)).collect(),
        }
    }

    /// Number of rows of each kind, for structural reports.
    pub fn row_counts(&self) -> Vec<(RowKind, usize)> {
        let kinds = [
            RowKind::Demand,
            RowKind::RootLink,
            RowKind::BalanceP,
            RowKind::BalanceQ,
            RowKind::VoltageDrop,
            RowKind::VoltageLo,
            RowKind::VoltageHi,
            RowKind::LineLimit,
            RowKind::RootBound,
        ];
        kinds
            .iter()
            .map(|&k| (k, self.rows.iter().filter(|r| r.kind == k).count()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ObjSense, SolverOptions};
    use crate::network::test_cases::two_node;

    fn solve_fixed(case: &NetworkCase, xi: f64, c: f64, p0: f64) -> (f64, SecondStageSolution) {
        let lp = build_recourse(case, &DemandBounds::fixed(case), RecourseOptions::default()).unwrap();
        let mut m = Model::new();
        let all = lp.all_periods();
        let emb = lp
            .embed(
                &mut m,
                &all,
                |p| match p {
                    Param::P0Da(_) => LinExpr::constant(p0),
                    Param::Demand { node, t } => {
                        let l = case.load_at(node, t);
                        LinExpr::constant(l * (1.0 + xi * (c / case.prices.c_ref[t] - 1.0)))
                    }
                    Param::Price(_) => unreachable!(),
                },
                false,
                "",
            )
            .unwrap();
        m.set_objective(ObjSense::Minimize, emb.cost(&lp, |_| c)).unwrap();
        let r = m.solve(&SolverOptions::default()).unwrap();
        assert!(r.is_optimal());
        (r.objective, emb.extract(&lp, &r))
    }

    #[test]
    fn demand_follows_elasticity() {
        let case = two_node(100.0, 1);
        let c = 1.2 * case.prices.c_ref[0];
        let (_, y) = solve_fixed(&case, -0.5, c, 100.0);
        assert!((y.demand[1][0] - 90.0).abs() < 1e-9);
        // the day-ahead purchase covers 100, so 10 is sold back
        assert!((y.adj_dn[0] - 10.0).abs() < 1e-9);
        assert!(y.adj_up[0].abs() < 1e-9);
    }

    #[test]
    fn reference_price_leaves_demand_unchanged() {
        let case = two_node(100.0, 1);
        let (_, y) = solve_fixed(&case, -0.8, case.prices.c_ref[0], 100.0);
        assert!((y.demand[1][0] - 100.0).abs() < 1e-9);
        assert!(y.adj_up[0].abs() < 1e-9 && y.adj_dn[0].abs() < 1e-9);
    }

    #[test]
    fn generous_limits_prune_every_halfplane() {
        let case = two_node(10.0, 1);
        let lp = build_recourse(&case, &DemandBounds::fixed(&case), RecourseOptions::default()).unwrap();
        assert_eq!(lp.rows.iter().filter(|r| r.kind == RowKind::LineLimit).count(), 0);
        let mut tight = case.clone();
        tight.lines[0].s_max = 10.0;
        let lp = build_recourse(&tight, &DemandBounds::fixed(&tight), RecourseOptions::default()).unwrap();
        assert!(lp.rows.iter().any(|r| r.kind == RowKind::LineLimit));
    }
}
