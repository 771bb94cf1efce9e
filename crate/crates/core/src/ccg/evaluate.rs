//! Direct evaluation of the recourse LP for one fixed scenario.

use crate::model::{LinExpr, Model, ObjSense, SolveStatus, SolverOptions};
use crate::network::{
    build_recourse, DemandBounds, FirstStageSolution, NetworkCase, NetworkError, Param, RecourseOptions,
    SecondStageSolution,
};
use crate::uncertainty::realized_demand;

use super::CcgError;

#[derive(Clone, Debug)]
pub struct RecourseEvaluation {
    /// Recourse cost, or total slack when evaluated relaxed.
    pub value: f64,
    pub recourse: SecondStageSolution,
}

/// Realized demand per `[node][t]` for prices `c` and elasticities `xi`.
pub fn realized_loads(case: &NetworkCase, c: &[f64], xi: &[Vec<f64>]) -> Vec<Vec<f64>> {
    (0..case.num_nodes())
        .map(|i| {
            (0..case.periods)
                .map(|t| realized_demand(case.load_at(i, t), xi[i][t], c[t], case.prices.c_ref[t]))
                .collect()
        })
        .collect()
}

/// Solves the recourse LP at `(x, ξ)`. Returns `None` when it is infeasible.
/// With `relax`, relaxable rows get penalized slacks and the value is their
/// minimum total.
pub fn evaluate_recourse(
    case: &NetworkCase,
    x: &FirstStageSolution,
    xi: &[Vec<f64>],
    polygon_sides: usize,
    relax: bool,
    solver: &SolverOptions,
) -> Result<Option<RecourseEvaluation>, CcgError> {
    let loads = realized_loads(case, &x.c_tou, xi);
    let bounds = DemandBounds {
        lo: loads.clone(),
        hi: loads.clone(),
    };
    let lp = build_recourse(case, &bounds, RecourseOptions { polygon_sides }).map_err(NetworkError::from)?;
    let mut model = Model::new();
    let emb = lp.embed(
        &mut model,
        &lp.all_periods(),
        |p| match p {
            Param::P0Da(t) => LinExpr::constant(x.p0_da[t]),
            Param::Demand { node, t } => LinExpr::constant(loads[node][t]),
            Param::Price(_) => unreachable!(),
        },
        relax,
        "",
    )?;
    let obj = if relax {
        emb.slack_total()
    } else {
        emb.cost(&lp, |t| x.c_tou[t])
    };
    model.set_objective(ObjSense::Minimize, obj)?;
    let r = model.solve(solver)?;
    match r.status {
        SolveStatus::Optimal => Ok(Some(RecourseEvaluation {
            value: r.objective,
            recourse: emb.extract(&lp, &r),
        })),
        SolveStatus::Infeasible => Ok(None),
        s => Err(CcgError::Solver(format!("recourse evaluation returned {s:?}"))),
    }
}
