use serde::{Deserialize, Serialize};

use super::{polygon_halfplanes, NetworkCase, NetworkError};
use crate::model::{Bounds, LinExpr, Model, SolveResult, Sense, VarRef};

/// Handles to the day-ahead decision variables inside one model.
#[derive(Clone, Debug)]
pub struct FirstStageVars {
    /// Generation per `[node][t]`; a constant for fixed generators, the grid
    /// injection for the root.
    pub p: Vec<Vec<LinExpr>>,
    pub q: Vec<Vec<LinExpr>>,
    /// Line flows per `[line][t]`.
    pub pf: Vec<Vec<VarRef>>,
    pub qf: Vec<Vec<VarRef>>,
    /// Scaled squared voltage per `[node][t]` (see [`NetworkCase::voltage_scale`]).
    pub w: Vec<Vec<VarRef>>,
    pub c: Vec<VarRef>,
    pub p0: Vec<VarRef>,
}

impl FirstStageVars {
    /// Day-ahead energy cost `Σ_t ρ_t p0_t`.
    pub fn cost(&self, case: &NetworkCase) -> LinExpr {
        let mut e = LinExpr::new();
        for (t, &v) in self.p0.iter().enumerate() {
            e.add_term(v, case.prices.rho_da[t]);
        }
        e
    }

    pub fn extract(&self, case: &NetworkCase, r: &SolveResult) -> FirstStageSolution {
        let scale = case.voltage_scale();
        let grid = |g: &Vec<Vec<LinExpr>>| -> Vec<Vec<f64>> {
            g.iter().map(|row| row.iter().map(|e| r.eval(e)).collect()).collect()
        };
        let vals = |g: &Vec<Vec<VarRef>>| -> Vec<Vec<f64>> {
            g.iter().map(|row| row.iter().map(|&v| r.value(v)).collect()).collect()
        };
        FirstStageSolution {
            p_da: grid(&self.p),
            q_da: grid(&self.q),
            pf_da: vals(&self.pf),
            qf_da: vals(&self.qf),
            v_da: self
                .w
                .iter()
                .map(|row| row.iter().map(|&v| r.value(v) / scale).collect())
                .collect(),
            c_tou: self.c.iter().map(|&v| r.value(v)).collect(),
            p0_da: self.p0.iter().map(|&v| r.value(v)).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FirstStageSolution {
    pub p_da: Vec<Vec<f64>>,
    pub q_da: Vec<Vec<f64>>,
    pub pf_da: Vec<Vec<f64>>,
    pub qf_da: Vec<Vec<f64>>,
    /// Squared voltage magnitude, p.u.
    pub v_da: Vec<Vec<f64>>,
    pub c_tou: Vec<f64>,
    pub p0_da: Vec<f64>,
}

impl FirstStageSolution {
    pub fn cost(&self, case: &NetworkCase) -> f64 {
        self.p0_da
            .iter()
            .zip(&case.prices.rho_da)
            .map(|(p, r)| p * r)
            .sum()
    }
}

/// Interval `[lo, hi]` of `Σ_j (a_j − g_j)` with `a_j` fixed and `g_j` in its
/// bounds.
fn net_range(items: impl Iterator<Item = (f64, f64, f64)>) -> (f64, f64) {
    items.fold((0.0, 0.0), |(lo, hi), (a, glo, ghi)| (lo + a - ghi, hi + a - glo))
}

/// Registers the day-ahead constraints: nodal active/reactive balance,
/// voltage drop, generation limits, polygonized line limits, voltage limits
/// and TOU price bounds.
pub fn build_first_stage(
    model: &mut Model,
    case: &NetworkCase,
    polygon_sides: usize,
) -> Result<FirstStageVars, NetworkError> {
    let topo = case.topology()?;
    let n = case.num_nodes();
    let nt = case.periods;
    let scale = case.voltage_scale();
    let prices = &case.prices;

    let c: Vec<VarRef> = (0..nt)
        .map(|_| model.add_continuous(Bounds::new(prices.tou_min, prices.tou_max)))
        .collect();
    let root = &case.nodes[0];
    let p0: Vec<VarRef> = (0..nt)
        .map(|_| {
            model.add_continuous(if case.root_bounded {
                Bounds::new(root.p_min, root.p_max)
            } else {
                Bounds::FREE
            })
        })
        .collect();

    let mut p = vec![Vec::with_capacity(nt); n];
    let mut q = vec![Vec::with_capacity(nt); n];
    for (i, node) in case.nodes.iter().enumerate() {
        for t in 0..nt {
            if i == 0 {
                p[0].push(LinExpr::from(p0[t]));
                let qb = if case.root_bounded {
                    Bounds::new(root.q_min, root.q_max)
                } else {
                    Bounds::FREE
                };
                q[0].push(LinExpr::from(model.add_continuous(qb)));
                continue;
            }
            p[i].push(if node.has_active_gen() {
                model
                    .add_continuous(Bounds::new(node.p_min, node.p_max))
                    .into()
            } else {
                LinExpr::constant(node.p_min)
            });
            q[i].push(if node.has_reactive_gen() {
                model
                    .add_continuous(Bounds::new(node.q_min, node.q_max))
                    .into()
            } else {
                LinExpr::constant(node.q_min)
            });
        }
    }
    let pf: Vec<Vec<VarRef>> = (0..case.num_lines())
        .map(|_| (0..nt).map(|_| model.add_continuous(Bounds::FREE)).collect())
        .collect();
    let qf: Vec<Vec<VarRef>> = (0..case.num_lines())
        .map(|_| (0..nt).map(|_| model.add_continuous(Bounds::FREE)).collect())
        .collect();
    let w: Vec<Vec<VarRef>> = case
        .nodes
        .iter()
        .map(|node| {
            (0..nt)
                .map(|_| {
                    model.add_continuous(Bounds::new(
                        node.v_min * node.v_min * scale,
                        node.v_max * node.v_max * scale,
                    ))
                })
                .collect()
        })
        .collect();

    for t in 0..nt {
        for (j, node) in case.nodes.iter().enumerate() {
            let load = node.load[t];
            let mut ep = p[j][t].clone();
            let mut eq = q[j][t].clone();
            if let Some(k) = topo.parent_line[j] {
                ep.add_term(pf[k][t], 1.0);
                eq.add_term(qf[k][t], 1.0);
            }
            for &k in &topo.child_lines[j] {
                ep.add_term(pf[k][t], -1.0);
                eq.add_term(qf[k][t], -1.0);
            }
            model.add_constraint(Sense::Eq, ep, load, format!("da-balance-p:node={j},t={t}"))?;
            model.add_constraint(
                Sense::Eq,
                eq,
                node.kappa * load,
                format!("da-balance-q:node={j},t={t}"),
            )?;
        }
        for (k, line) in case.lines.iter().enumerate() {
            let e = LinExpr::from(w[line.to][t]) - w[line.from][t]
                + pf[k][t] * line.r
                + qf[k][t] * line.x;
            model.add_constraint(Sense::Eq, e, 0.0, format!("da-voltage-drop:line={k},t={t}"))?;

            let sub = &topo.subtree[k];
            let prange = net_range(sub.iter().map(|&j| {
                let nd = &case.nodes[j];
                (nd.load[t], nd.p_min, nd.p_max)
            }));
            let qrange = net_range(sub.iter().map(|&j| {
                let nd = &case.nodes[j];
                (nd.kappa * nd.load[t], nd.q_min, nd.q_max)
            }));
            for (s, hp) in polygon_halfplanes(polygon_sides, line.s_max)?
                .into_iter()
                .enumerate()
            {
                let reach = (hp.cos * prange.0).max(hp.cos * prange.1)
                    + (hp.sin * qrange.0).max(hp.sin * qrange.1);
                if reach <= hp.rhs {
                    continue;
                }
                model.add_constraint(
                    Sense::Le,
                    pf[k][t] * hp.cos + qf[k][t] * hp.sin,
                    hp.rhs,
                    format!("da-line-limit:line={k},side={s},t={t}"),
                )?;
            }
        }
    }
    Ok(FirstStageVars {
        p,
        q,
        pf,
        qf,
        w,
        c,
        p0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ObjSense, SolveStatus, SolverOptions};
    use crate::network::test_cases::two_node;

    #[test]
    fn single_line_carries_the_load() {
        let case = two_node(10.0, 1);
        let mut m = Model::new();
        let x = build_first_stage(&mut m, &case, 16).unwrap();
        m.set_objective(ObjSense::Minimize, x.cost(&case)).unwrap();
        let r = m.solve(&SolverOptions::default()).unwrap();
        assert!(r.is_optimal());
        let sol = x.extract(&case, &r);
        assert!((sol.pf_da[0][0] - 10.0).abs() < 1e-9);
        assert!((sol.p0_da[0] - 10.0).abs() < 1e-9);
    }

    #[test]
    fn zero_load_gives_zero_flows() {
        let case = two_node(0.0, 2);
        let mut m = Model::new();
        let x = build_first_stage(&mut m, &case, 16).unwrap();
        m.set_objective(ObjSense::Minimize, x.cost(&case)).unwrap();
        let r = m.solve(&SolverOptions::default()).unwrap();
        let sol = x.extract(&case, &r);
        for t in 0..2 {
            assert!(sol.pf_da[0][t].abs() < 1e-9);
            assert!(sol.p0_da[t].abs() < 1e-9);
        }
    }

    #[test]
    fn flat_voltage_with_flow_is_infeasible() {
        let mut case = two_node(10.0, 1);
        for n in &mut case.nodes {
            n.v_min = 1.0;
            n.v_max = 1.0;
        }
        let mut m = Model::new();
        let x = build_first_stage(&mut m, &case, 16).unwrap();
        m.set_objective(ObjSense::Minimize, x.cost(&case)).unwrap();
        let r = m.solve(&SolverOptions::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Infeasible);
    }
}
