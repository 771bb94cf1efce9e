//! Residual check of a complete day-ahead + real-time solution against the
//! original (unpolygonized) network constraints.

use serde::{Deserialize, Serialize};

use super::{FirstStageSolution, NetworkCase, NetworkError, SecondStageSolution};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub constraint: String,
    /// Amount by which the constraint is violated (positive).
    pub residual: f64,
}

struct Checker {
    tol: f64,
    out: Vec<Violation>,
}

impl Checker {
    fn eq(&mut self, name: impl FnOnce() -> String, lhs: f64, rhs: f64) {
        let r = (lhs - rhs).abs();
        if r > self.tol * (1.0 + lhs.abs().max(rhs.abs())) {
            self.out.push(Violation {
                constraint: name(),
                residual: r,
            });
        }
    }

    fn le(&mut self, name: impl FnOnce() -> String, lhs: f64, rhs: f64) {
        let r = lhs - rhs;
        if r > self.tol * (1.0 + lhs.abs().max(rhs.abs())) {
            self.out.push(Violation {
                constraint: name(),
                residual: r,
            });
        }
    }
}

/// Checks both stages. `xi[node][t]` is the realized elasticity. The line
/// limit is checked against the exact disk `p² + q² ≤ S̄²` and voltage in
/// squared p.u.
pub fn validate_solution(
    case: &NetworkCase,
    x: &FirstStageSolution,
    y: &SecondStageSolution,
    xi: &[Vec<f64>],
    tol: f64,
) -> Result<Vec<Violation>, NetworkError> {
    let topo = case.topology()?;
    let n = case.num_nodes();
    let nt = case.periods;
    if xi.len() != n || xi.iter().any(|r| r.len() != nt) {
        return Err(NetworkError::DimensionMismatch("elasticity realization".into()));
    }
    let base = case.base_kva;
    let mut ck = Checker { tol, out: Vec::new() };
    let pr = &case.prices;

    for t in 0..nt {
        let c = x.c_tou[t];
        ck.le(|| format!("tou-lower:t={t}"), pr.tou_min, c);
        ck.le(|| format!("tou-upper:t={t}"), c, pr.tou_max);
        ck.eq(|| format!("root-purchase:t={t}"), x.p0_da[t], x.p_da[0][t]);
        ck.eq(|| format!("root-exchange:t={t}"), y.p_rt[0][t], x.p0_da[t] + y.adj_up[t] - y.adj_dn[t]);
        ck.le(|| format!("adjust-up-sign:t={t}"), 0.0, y.adj_up[t]);
        ck.le(|| format!("adjust-down-sign:t={t}"), 0.0, y.adj_dn[t]);

        for (stage, p, q, pf, qf, v) in [
            ("da", &x.p_da, &x.q_da, &x.pf_da, &x.qf_da, &x.v_da),
            ("rt", &y.p_rt, &y.q_rt, &y.pf_rt, &y.qf_rt, &y.v_rt),
        ] {
            for (j, nd) in case.nodes.iter().enumerate() {
                let load = if stage == "da" {
                    case.load_at(j, t)
                } else {
                    let want = case.load_at(j, t) * (1.0 + xi[j][t] * (c / pr.c_ref[t] - 1.0));
                    ck.eq(|| format!("rt-demand:node={j},t={t}"), y.demand[j][t], want);
                    y.demand[j][t]
                };
                let inflow_p = topo.parent_line[j].map_or(0.0, |k| pf[k][t]);
                let inflow_q = topo.parent_line[j].map_or(0.0, |k| qf[k][t]);
                let out_p: f64 = topo.child_lines[j].iter().map(|&k| pf[k][t]).sum();
                let out_q: f64 = topo.child_lines[j].iter().map(|&k| qf[k][t]).sum();
                ck.eq(|| format!("{stage}-balance-p:node={j},t={t}"), p[j][t] + inflow_p - out_p, load);
                ck.eq(|| format!("{stage}-balance-q:node={j},t={t}"), q[j][t] + inflow_q - out_q, nd.kappa * load);
                if case.gen_bounds_apply(j) {
                    ck.le(|| format!("{stage}-gen-p-lo:node={j},t={t}"), nd.p_min, p[j][t]);
                    ck.le(|| format!("{stage}-gen-p-hi:node={j},t={t}"), p[j][t], nd.p_max);
                    ck.le(|| format!("{stage}-gen-q-lo:node={j},t={t}"), nd.q_min, q[j][t]);
                    ck.le(|| format!("{stage}-gen-q-hi:node={j},t={t}"), q[j][t], nd.q_max);
                }
                ck.le(|| format!("{stage}-voltage-lo:node={j},t={t}"), nd.v_min * nd.v_min, v[j][t]);
                ck.le(|| format!("{stage}-voltage-hi:node={j},t={t}"), v[j][t], nd.v_max * nd.v_max);
            }
            for (k, line) in case.lines.iter().enumerate() {
                // squared voltage drop in p.u. with flows in kW over base
                let drop = 2.0 * (line.r * pf[k][t] + line.x * qf[k][t]) / base;
                ck.eq(|| format!("{stage}-voltage-drop:line={k},t={t}"), v[line.to][t], v[line.from][t] - drop);
                let s2 = pf[k][t] * pf[k][t] + qf[k][t] * qf[k][t];
                let r = s2.sqrt() - line.s_max;
                if r > tol * (1.0 + line.s_max) {
                    ck.out.push(Violation {
                        constraint: format!("{stage}-apparent-power:line={k},t={t}"),
                        residual: r,
                    });
                }
            }
        }
    }
    Ok(ck.out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Model, ObjSense, SolverOptions};
    use crate::network::test_cases::two_node;
    use crate::network::{build_first_stage, build_recourse, DemandBounds, Param, RecourseOptions};
    use crate::model::LinExpr;

    #[test]
    fn day_ahead_dispatch_is_admissible_in_real_time_without_adjustment() {
        let case = two_node(50.0, 2);
        let mut m = Model::new();
        let fs = build_first_stage(&mut m, &case, 16).unwrap();
        let lp = build_recourse(&case, &DemandBounds::fixed(&case), RecourseOptions::default()).unwrap();
        let emb = lp
            .embed(
                &mut m,
                &lp.all_periods(),
                |p| match p {
                    Param::P0Da(t) => LinExpr::from(fs.p0[t]),
                    Param::Demand { node, t } => LinExpr::constant(case.load_at(node, t)),
                    Param::Price(_) => unreachable!(),
                },
                false,
                "",
            )
            .unwrap();
        let mut adj = LinExpr::new();
        for t in 0..2 {
            adj.add_term(emb.y[lp.up[t]].unwrap(), 1.0).add_term(emb.y[lp.dn[t]].unwrap(), 1.0);
        }
        m.set_objective(ObjSense::Minimize, fs.cost(&case) + adj).unwrap();
        let r = m.solve(&SolverOptions::default()).unwrap();
        assert!(r.is_optimal());
        let x = fs.extract(&case, &r);
        let y = emb.extract(&lp, &r);
        assert!(y.adj_up.iter().chain(&y.adj_dn).all(|d| d.abs() < 1e-9));
        let xi = vec![vec![0.0; 2]; 2];
        let v = validate_solution(&case, &x, &y, &xi, 1e-7).unwrap();
        assert!(v.is_empty(), "{v:?}");
    }

    #[test]
    fn wrong_demand_is_reported() {
        let case = two_node(50.0, 1);
        let x = FirstStageSolution {
            p_da: vec![vec![50.0], vec![0.0]],
            q_da: vec![vec![10.0], vec![0.0]],
            pf_da: vec![vec![50.0]],
            qf_da: vec![vec![10.0]],
            v_da: vec![vec![1.0], vec![1.0 - 2.0 * (0.01 * 50.0 + 0.01 * 10.0) / 1000.0]],
            c_tou: vec![0.1],
            p0_da: vec![50.0],
        };
        let mut y = SecondStageSolution {
            demand: vec![vec![0.0], vec![50.0]],
            p_rt: x.p_da.clone(),
            q_rt: x.q_da.clone(),
            pf_rt: x.pf_da.clone(),
            qf_rt: x.qf_da.clone(),
            v_rt: x.v_da.clone(),
            adj_up: vec![0.0],
            adj_dn: vec![0.0],
        };
        let xi = vec![vec![0.0]; 2];
        assert!(validate_solution(&case, &x, &y, &xi, 1e-7).unwrap().is_empty());
        y.demand[1][0] = 49.0;
        let v = validate_solution(&case, &x, &y, &xi, 1e-7).unwrap();
        assert!(v.iter().any(|v| v.constraint.starts_with("rt-demand")));
    }
}
