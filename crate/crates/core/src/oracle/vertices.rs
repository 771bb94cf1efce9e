//! Candidate vertices of the budgeted vertex-coordinate polytope.

use crate::uncertainty::BudgetParams;

/// Every point of `{0, ½, 1}^E` (over the listed `(node, t)` entries) whose
/// extreme coordinates fit both budgets and whose ½ coordinates each sit in
/// a tight period or node budget. A ½ coordinate in two slack budgets can be
/// moved both ways, so such points are never vertices; the remaining set
/// contains every vertex, and all its points are feasible.
///
/// Budgets must be integers. Points come out in lexicographic order with
/// 0 < ½ < 1.
pub fn budget_vertices(entries: &[(usize, usize)], budgets: BudgetParams) -> Vec<Vec<f64>> {
    let n_nodes = entries.iter().map(|e| e.0 + 1).max().unwrap_or(0);
    let n_periods = entries.iter().map(|e| e.1 + 1).max().unwrap_or(0);
    let mut per_period = vec![0usize; n_periods];
    let mut per_node = vec![0usize; n_nodes];
    let gs = budgets.gamma_s.floor() as usize;
    let gt = budgets.gamma_t.floor() as usize;
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(entries.len());
    fn rec(
        pos: usize,
        entries: &[(usize, usize)],
        gs: usize,
        gt: usize,
        per_period: &mut Vec<usize>,
        per_node: &mut Vec<usize>,
        cur: &mut Vec<f64>,
        out: &mut Vec<Vec<f64>>,
    ) {
        if pos == entries.len() {
            let ok = entries.iter().zip(cur.iter()).all(|(&(i, t), &v)| {
                v != 0.5 || per_period[t] == gs || per_node[i] == gt
            });
            if ok {
                out.push(cur.clone());
            }
            return;
        }
        let (i, t) = entries[pos];
        for v in [0.0, 0.5, 1.0] {
            let extreme = v != 0.5;
            if extreme {
                if per_period[t] + 1 > gs || per_node[i] + 1 > gt {
                    continue;
                }
                per_period[t] += 1;
                per_node[i] += 1;
            }
            cur.push(v);
            rec(pos + 1, entries, gs, gt, per_period, per_node, cur, out);
            cur.pop();
            if extreme {
                per_period[t] -= 1;
                per_node[i] -= 1;
            }
        }
    }
    rec(0, entries, gs, gt, &mut per_period, &mut per_node, &mut cur, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slack_budgets_give_the_binary_cube() {
        let e = [(0, 0), (1, 0), (0, 1)];
        let vs = budget_vertices(&e, BudgetParams { gamma_t: 2.0, gamma_s: 2.0 });
        assert_eq!(vs.len(), 8);
        assert!(vs.iter().flatten().all(|&v| v == 0.0 || v == 1.0));
    }

    #[test]
    fn zero_budget_leaves_the_midpoint() {
        let e = [(0, 0), (1, 0)];
        let vs = budget_vertices(&e, BudgetParams { gamma_t: 1.0, gamma_s: 0.0 });
        assert_eq!(vs, vec![vec![0.5, 0.5]]);
    }

    #[test]
    fn unit_spatial_budget_over_two_nodes() {
        let e = [(0, 0), (1, 0)];
        let vs = budget_vertices(&e, BudgetParams { gamma_t: 1.0, gamma_s: 1.0 });
        assert_eq!(
            vs,
            vec![vec![0.0, 0.5], vec![0.5, 0.0], vec![0.5, 1.0], vec![1.0, 0.5]]
        );
    }
}
