//! Structural view of the two-stage problem: first-stage rows, the
//! scenario-coupled second-stage rows and the split of the objective.

use serde::{Deserialize, Serialize};

use super::CcgError;
use crate::model::Model;
use crate::network::{build_first_stage, build_recourse, NetworkCase, Param, ParamAffine, RecourseLp, RecourseOptions};
use crate::uncertainty::ElasticityTable;

#[derive(Clone, Debug)]
pub struct CompactForm {
    pub first_stage_rows: usize,
    pub first_stage_cols: usize,
    pub recourse: RecourseLp,
    /// Recourse rows whose right-hand side depends on the scenario.
    pub coupled_rows: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompactCounts {
    pub first_stage_rows: usize,
    pub first_stage_cols: usize,
    pub second_stage_rows: usize,
    pub second_stage_cols: usize,
    pub coupled_rows: usize,
}

impl CompactForm {
    /// Cost coefficient of the realized demand `l_it` in the recourse
    /// objective.
    pub fn demand_cost(&self, node: usize, t: usize) -> &ParamAffine {
        &self.recourse.vars[self.recourse.demand[node][t]].cost
    }

    pub fn counts(&self) -> CompactCounts {
        CompactCounts {
            first_stage_rows: self.first_stage_rows,
            first_stage_cols: self.first_stage_cols,
            second_stage_rows: self.recourse.rows.len(),
            second_stage_cols: self.recourse.vars.len(),
            coupled_rows: self.coupled_rows.len(),
        }
    }
}

pub fn assemble_compact(case: &NetworkCase, table: &ElasticityTable, polygon_sides: usize) -> Result<CompactForm, CcgError> {
    table.check_case(case)?;
    let mut scratch = Model::new();
    build_first_stage(&mut scratch, case, polygon_sides)?;
    let recourse = build_recourse(case, &table.demand_bounds(case, None), RecourseOptions { polygon_sides })?;
    let coupled_rows = recourse
        .rows
        .iter()
        .enumerate()
        .filter(|(_, r)| r.rhs.terms.iter().any(|(p, _)| matches!(p, Param::Demand { .. })))
        .map(|(i, _)| i)
        .collect();
    Ok(CompactForm {
        first_stage_rows: scratch.num_constraints(),
        first_stage_cols: scratch.num_vars(),
        recourse,
        coupled_rows,
    })
}
