use std::ffi::CString;
use std::os::raw::c_void;

use highs_sys::*;

use super::backend::{LinearProblem, RawSolution, RawStatus, SolverBackend};
use super::{ModelError, SolverOptions};

/// In-process HiGHS through its C API.
#[derive(Clone, Copy, Debug, Default)]
pub struct HighsBackend;

struct Handle(*mut c_void);

impl Drop for Handle {
    fn drop(&mut self) {
        unsafe { Highs_destroy(self.0) }
    }
}

impl Handle {
    fn new() -> Self {
        Handle(unsafe { Highs_create() })
    }

    fn set_bool(&self, name: &str, v: bool) -> Result<(), ModelError> {
        let c = CString::new(name).unwrap();
        check(unsafe { Highs_setBoolOptionValue(self.0, c.as_ptr(), v as HighsInt) }, name)
    }

    fn set_int(&self, name: &str, v: i32) -> Result<(), ModelError> {
        let c = CString::new(name).unwrap();
        check(unsafe { Highs_setIntOptionValue(self.0, c.as_ptr(), v as HighsInt) }, name)
    }

    fn set_double(&self, name: &str, v: f64) -> Result<(), ModelError> {
        let c = CString::new(name).unwrap();
        check(unsafe { Highs_setDoubleOptionValue(self.0, c.as_ptr(), v) }, name)
    }

    fn set_string(&self, name: &str, v: &str) -> Result<(), ModelError> {
        let c = CString::new(name).unwrap();
        let s = CString::new(v).unwrap();
        check(unsafe { Highs_setStringOptionValue(self.0, c.as_ptr(), s.as_ptr()) }, name)
    }

    fn info_double(&self, name: &str) -> Option<f64> {
        let c = CString::new(name).unwrap();
        let mut v = 0.0;
        let st = unsafe { Highs_getDoubleInfoValue(self.0, c.as_ptr(), &mut v) };
        (st == STATUS_OK).then_some(v)
    }
}

fn check(status: HighsInt, what: &str) -> Result<(), ModelError> {
    if status == STATUS_ERROR {
        Err(ModelError::Backend(format!("HiGHS rejected `{what}`")))
    } else {
        Ok(())
    }
}

impl HighsBackend {
    fn run(
        &self,
        lp: &LinearProblem,
        options: &SolverOptions,
        presolve: bool,
    ) -> Result<RawSolution, ModelError> {
        let h = Handle::new();
        h.set_bool("output_flag", false)?;
        h.set_int("random_seed", 0)?;
        h.set_int("threads", 1)?;
        h.set_double("mip_rel_gap", options.mip_gap)?;
        h.set_double("mip_feasibility_tolerance", options.mip_feas_tol)?;
        h.set_double("primal_feasibility_tolerance", options.feas_tol.max(1e-10))?;
        if let Some(t) = options.time_limit {
            h.set_double("time_limit", t)?;
        }
        if !presolve {
            h.set_string("presolve", "off")?;
        }

        let n = lp.num_cols();
        let m = lp.num_rows();
        let a_start: Vec<HighsInt> = lp.row_start.iter().map(|&s| s as HighsInt).collect();
        let a_index: Vec<HighsInt> = lp.row_index.iter().map(|&s| s as HighsInt).collect();
        let sense = if lp.maximize {
            OBJECTIVE_SENSE_MAXIMIZE
        } else {
            OBJECTIVE_SENSE_MINIMIZE
        };
        let mip = lp.has_integers();
        let st = unsafe {
            if mip {
                let integrality: Vec<HighsInt> = lp
                    .integer
                    .iter()
                    .map(|&b| if b { VAR_TYPE_INTEGER } else { VAR_TYPE_CONTINUOUS })
                    .collect();
                Highs_passMip(
                    h.0,
                    n as HighsInt,
                    m as HighsInt,
                    a_index.len() as HighsInt,
                    MATRIX_FORMAT_ROW_WISE,
                    sense,
                    lp.offset,
                    lp.cost.as_ptr(),
                    lp.col_lo.as_ptr(),
                    lp.col_hi.as_ptr(),
                    lp.row_lo.as_ptr(),
                    lp.row_hi.as_ptr(),
                    a_start.as_ptr(),
                    a_index.as_ptr(),
                    lp.row_value.as_ptr(),
                    integrality.as_ptr(),
                )
            } else {
                Highs_passLp(
                    h.0,
                    n as HighsInt,
                    m as HighsInt,
                    a_index.len() as HighsInt,
                    MATRIX_FORMAT_ROW_WISE,
                    sense,
                    lp.offset,
                    lp.cost.as_ptr(),
                    lp.col_lo.as_ptr(),
                    lp.col_hi.as_ptr(),
                    lp.row_lo.as_ptr(),
                    lp.row_hi.as_ptr(),
                    a_start.as_ptr(),
                    a_index.as_ptr(),
                    lp.row_value.as_ptr(),
                )
            }
        };
        check(st, "model")?;
        let st = unsafe { Highs_run(h.0) };
        if st == STATUS_ERROR {
            return Ok(RawSolution::without_solution(RawStatus::Error));
        }
        let status = match unsafe { Highs_getModelStatus(h.0) } {
            MODEL_STATUS_OPTIMAL | MODEL_STATUS_MODEL_EMPTY => RawStatus::Optimal,
            MODEL_STATUS_INFEASIBLE => RawStatus::Infeasible,
            MODEL_STATUS_UNBOUNDED => RawStatus::Unbounded,
            MODEL_STATUS_UNBOUNDED_OR_INFEASIBLE => {
                if presolve {
                    return self.run(lp, options, false);
                }
                RawStatus::Infeasible
            }
            MODEL_STATUS_REACHED_TIME_LIMIT
            | MODEL_STATUS_REACHED_ITERATION_LIMIT
            | MODEL_STATUS_REACHED_SOLUTION_LIMIT
            | MODEL_STATUS_REACHED_INTERRUPT
            | MODEL_STATUS_REACHED_MEMORY_LIMIT
            | MODEL_STATUS_OBJECTIVE_BOUND
            | MODEL_STATUS_OBJECTIVE_TARGET => RawStatus::Limit,
            _ => RawStatus::Error,
        };
        if status != RawStatus::Optimal {
            return Ok(RawSolution::without_solution(status));
        }
        let mut col_value = vec![0.0; n];
        let mut col_dual = vec![0.0; n];
        let mut row_value = vec![0.0; m];
        let mut row_dual = vec![0.0; m];
        unsafe {
            Highs_getSolution(
                h.0,
                col_value.as_mut_ptr(),
                col_dual.as_mut_ptr(),
                row_value.as_mut_ptr(),
                row_dual.as_mut_ptr(),
            );
        }
        let objective = unsafe { Highs_getObjectiveValue(h.0) };
        let mip_gap = if mip {
            h.info_double("mip_gap").unwrap_or(0.0)
        } else {
            0.0
        };
        Ok(RawSolution {
            status,
            objective,
            col_value,
            row_dual: (!mip).then_some(row_dual),
            mip_gap,
        })
    }
}

impl SolverBackend for HighsBackend {
    fn name(&self) -> &str {
        "highs"
    }

    fn solve(&self, lp: &LinearProblem, options: &SolverOptions) -> Result<RawSolution, ModelError> {
        self.run(lp, options, true)
    }
}
