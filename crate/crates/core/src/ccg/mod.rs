//! Column-and-constraint generation for the two-stage robust problem:
//! master, feasibility check, cost subproblem and the iteration loop, in the
//! decision-dependent ("improved") form and the classical form that stores
//! scenarios as fixed elasticities.

mod adversary;
mod audit;
mod compact;
mod evaluate;
mod kkt;
mod master;

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ModelError, SolverOptions};
use crate::network::{FirstStageSolution, NetworkCase, NetworkError, SecondStageSolution};
use crate::parallel::Parallelism;
use crate::uncertainty::{BudgetParams, ElasticityTable, Scenario, UncertaintyError};

pub use adversary::{
    interval_choices, period_groups, solve_feasibility_check, solve_subproblem, uncertain_mask, AdversaryOptions,
    AdversaryOutcome,
};
pub use audit::{audit_claims, ClaimsReport};
pub use compact::{assemble_compact, CompactCounts, CompactForm};
pub use evaluate::{evaluate_recourse, realized_loads, RecourseEvaluation};
pub use kkt::{add_kkt, KktMode, KktSystem};
pub use master::{scenario_coefficients, solve_master, MasterOptions, MasterOutcome, StoredScenario};

#[derive(Debug, Error)]
pub enum CcgError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Uncertainty(#[from] UncertaintyError),
    #[error("master problem is infeasible (TOU bounds not covered by the ratio intervals, or no feasible dispatch)")]
    MasterInfeasible,
    #[error("recourse infeasible: {0}")]
    InnerInfeasible(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    /// Scenarios stored as vertices and remapped to the active interval.
    Improved,
    /// Scenarios stored as fixed elasticities.
    Traditional,
}

#[derive(Clone, Debug)]
pub struct CcgConfig {
    /// Absolute bound gap, $.
    pub tol: f64,
    /// Optional relative gap `|UB − LB| / max(1, |UB|)`; either test ends the run.
    pub relative_tol: Option<f64>,
    pub max_iters: usize,
    pub algorithm: Algorithm,
    /// `None` means slack budgets (`Γ_T = T`, `Γ_S = I`).
    pub budgets: Option<BudgetParams>,
    pub solver: SolverOptions,
    pub polygon_sides: usize,
    pub eta_floor: f64,
    pub v_binary: bool,
    /// Feasibility-check slack treated as zero.
    pub fc_tol: f64,
    pub parallelism: Parallelism,
    /// Fix the TOU prices instead of optimizing them.
    pub fixed_prices: Option<Vec<f64>>,
}

impl Default for CcgConfig {
    fn default() -> Self {
        CcgConfig {
            tol: 1.0,
            relative_tol: None,
            max_iters: 20,
            algorithm: Algorithm::Improved,
            budgets: None,
            solver: SolverOptions::default(),
            polygon_sides: crate::network::DEFAULT_POLYGON_SIDES,
            eta_floor: -1e6,
            v_binary: false,
            fc_tol: 1e-6,
            parallelism: Parallelism::default(),
            fixed_prices: None,
        }
    }
}

impl CcgConfig {
    pub fn budgets_for(&self, case: &NetworkCase) -> BudgetParams {
        self.budgets.unwrap_or_else(|| {
            let nodes = uncertain_mask(case).iter().filter(|r| r.iter().any(|&b| b)).count();
            BudgetParams::slack(nodes, case.periods)
        })
    }

    pub fn adversary_options(&self, case: &NetworkCase) -> AdversaryOptions {
        AdversaryOptions {
            budgets: self.budgets_for(case),
            v_binary: self.v_binary,
            polygon_sides: self.polygon_sides,
            solver: self.solver.clone(),
            parallelism: self.parallelism,
            m_escalations: 3,
            second_mip_feas_tol: Some(1e-7),
        }
    }

    pub fn master_options(&self) -> MasterOptions {
        MasterOptions {
            polygon_sides: self.polygon_sides,
            eta_floor: self.eta_floor,
            solver: self.solver.clone(),
            fixed_prices: self.fixed_prices.clone(),
        }
    }

    fn validate(&self, case: &NetworkCase) -> Result<Vec<String>, CcgError> {
        let mut warnings = Vec::new();
        if self.max_iters == 0 {
            return Err(CcgError::Config("max_iters must be at least 1".into()));
        }
        if !(self.tol >= 0.0) {
            return Err(CcgError::Config("tolerance must be non-negative".into()));
        }
        self.solver.validate()?;
        if let Some(p) = &self.fixed_prices {
            if p.len() != case.periods {
                return Err(CcgError::Config(format!("{} fixed prices for {} periods", p.len(), case.periods)));
            }
        }
        let b = self.budgets_for(case);
        b.validate(case.num_nodes(), case.periods)?;
        // the solver's relative gap must sit well below the termination test
        let scale: f64 = (0..case.periods)
            .map(|t| case.total_load(t) * case.prices.tou_max.max(case.prices.rho_up[t]))
            .sum::<f64>()
            .max(1.0);
        if self.tol < 10.0 * self.solver.mip_gap * scale {
            warnings.push(format!(
                "tolerance {} is below 10 x mip_gap x objective scale ({:.3e}); bounds may not close",
                self.tol,
                10.0 * self.solver.mip_gap * scale
            ));
        }
        Ok(warnings)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Converged,
    IterationLimit,
    /// A stored scenario came back while the gap was still open.
    Stalled,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub phase: String,
    pub lb: f64,
    pub ub: f64,
    pub gap: f64,
    pub wall_s: f64,
    pub status: String,
    /// Phase objective: master bound, feasibility slack or worst-case cost.
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VertexRecord {
    pub iter: usize,
    /// `"feasibility"` or `"subproblem"`.
    pub source: String,
    pub v: Vec<Vec<f64>>,
    pub z: Vec<usize>,
    pub xi: Vec<Vec<f64>>,
    /// Prices of the master solution the scenario was found against.
    pub prices: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CcgReport {
    pub status: RunStatus,
    pub algorithm: Algorithm,
    pub iterations: usize,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub lb_history: Vec<f64>,
    pub ub_history: Vec<f64>,
    /// Best first stage found (the one achieving the upper bound).
    pub incumbent: Option<FirstStageSolution>,
    pub incumbent_scenario: Option<Scenario>,
    pub incumbent_recourse: Option<SecondStageSolution>,
    pub vertices: Vec<VertexRecord>,
    pub log: Vec<IterationRecord>,
    pub lb_exceeded_ub: bool,
    /// Largest `|w − z·c|` and `|ω − z·c²|` seen in any master solution.
    pub envelope_error: f64,
    pub square_error: f64,
    pub budgets: BudgetParams,
    pub warnings: Vec<String>,
    pub wall_time: f64,
}

impl CcgReport {
    pub fn gap(&self) -> f64 {
        (self.upper_bound - self.lower_bound).abs()
    }

    pub fn iterations_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["iter", "phase", "LB", "UB", "gap", "wall_s", "status"]).unwrap();
        for r in &self.log {
            w.write_record([
                r.iter.to_string(),
                r.phase.clone(),
                r.lb.to_string(),
                r.ub.to_string(),
                r.gap.to_string(),
                format!("{:.3}", r.wall_s),
                r.status.clone(),
            ])
            .unwrap();
        }
        String::from_utf8(w.into_inner().unwrap()).unwrap()
    }
}

fn same_point(a: &[Vec<f64>], b: &[Vec<f64>], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| x.iter().zip(y).all(|(p, q)| (p - q).abs() <= tol))
}

/// Runs the iteration until the bounds meet, the iteration limit, or a stall.
pub fn run(config: &CcgConfig, case: &NetworkCase, table: &ElasticityTable) -> Result<CcgReport, CcgError> {
    case.validate()?;
    table.check_case(case)?;
    let mut warnings = config.validate(case)?;
    if table.has_positive() {
        warnings.push(
            "elasticity table has positive bounds; the squared-price linearization is then a relaxation".into(),
        );
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    let start = Instant::now();
    let adv = config.adversary_options(case);
    let mopts = config.master_options();
    let mut stored: Vec<StoredScenario> = Vec::new();
    let mut vertices: Vec<VertexRecord> = Vec::new();
    let mut log_rows: Vec<IterationRecord> = Vec::new();
    let mut lb = f64::NEG_INFINITY;
    let mut ub = f64::INFINITY;
    let mut lb_history = Vec::new();
    let mut ub_history = Vec::new();
    let mut incumbent: Option<(FirstStageSolution, Scenario, SecondStageSolution)> = None;
    let mut lb_exceeded_ub = false;
    let mut envelope_error: f64 = 0.0;
    let mut square_error: f64 = 0.0;
    let mut status = RunStatus::IterationLimit;
    let mut iterations = 0;

    let converged = |lb: f64, ub: f64| {
        let gap = ub - lb;
        gap.abs() <= config.tol || config.relative_tol.is_some_and(|r| gap.abs() <= r * ub.abs().max(1.0))
    };

    for n in 1..=config.max_iters {
        iterations = n;
        let m = solve_master(case, table, &stored, &mopts)?;
        lb = m.lower_bound;
        envelope_error = envelope_error.max(m.envelope_error);
        square_error = square_error.max(m.square_error);
        let gap = |lb: f64, ub: f64| if ub.is_finite() { ub - lb } else { f64::INFINITY };
        log_rows.push(IterationRecord {
            iter: n,
            phase: "master".into(),
            lb,
            ub,
            gap: gap(lb, ub),
            wall_s: start.elapsed().as_secs_f64(),
            status: "optimal".into(),
            value: m.lower_bound,
        });

        let fc = solve_feasibility_check(case, table, &m.x, Some(&m.z), &adv)?;
        let (outcome, source) = if fc.value > config.fc_tol {
            log_rows.push(IterationRecord {
                iter: n,
                phase: "fc".into(),
                lb,
                ub,
                gap: gap(lb, ub),
                wall_s: start.elapsed().as_secs_f64(),
                status: "infeasible-scenario".into(),
                value: fc.value,
            });
            (fc, "feasibility")
        } else {
            log_rows.push(IterationRecord {
                iter: n,
                phase: "fc".into(),
                lb,
                ub,
                gap: gap(lb, ub),
                wall_s: start.elapsed().as_secs_f64(),
                status: "feasible".into(),
                value: fc.value,
            });
            let sp = solve_subproblem(case, table, &m.x, Some(&m.z), &adv)?;
            if !sp.clean {
                warnings.push(format!("iteration {n}: subproblem solve had audit findings"));
            }
            if (sp.milp_value - sp.value).abs() > 1e-4 * (1.0 + sp.value.abs()) {
                let msg = format!(
                    "iteration {n}: subproblem objective {} differs from its scenario's recourse cost {}",
                    sp.milp_value, sp.value
                );
                log::warn!("{msg}");
                warnings.push(msg);
            }
            let candidate = m.x.cost(case) + sp.value;
            if candidate < ub {
                ub = candidate;
                incumbent = Some((
                    m.x.clone(),
                    Scenario {
                        xi: sp.xi.clone(),
                        v: sp.v.clone(),
                        z: sp.z.clone(),
                    },
                    sp.recourse.clone(),
                ));
            }
            log_rows.push(IterationRecord {
                iter: n,
                phase: "sp".into(),
                lb,
                ub,
                gap: gap(lb, ub),
                wall_s: start.elapsed().as_secs_f64(),
                status: "optimal".into(),
                value: sp.value,
            });
            (sp, "subproblem")
        };
        lb_history.push(lb);
        ub_history.push(ub);
        if lb > ub + config.tol.max(1e-9) {
            lb_exceeded_ub = true;
        }
        if converged(lb, ub) {
            status = RunStatus::Converged;
            break;
        }
        let new = match config.algorithm {
            Algorithm::Improved => StoredScenario::Vertex(outcome.v.clone()),
            Algorithm::Traditional => StoredScenario::Fixed(outcome.xi.clone()),
        };
        let repeated = stored.iter().any(|s| match (s, &new) {
            (StoredScenario::Vertex(a), StoredScenario::Vertex(b)) => same_point(a, b, 1e-6),
            (StoredScenario::Fixed(a), StoredScenario::Fixed(b)) => same_point(a, b, 1e-9),
            _ => false,
        });
        vertices.push(VertexRecord {
            iter: n,
            source: source.into(),
            v: outcome.v,
            z: outcome.z,
            xi: outcome.xi,
            prices: m.x.c_tou.clone(),
        });
        if repeated {
            status = RunStatus::Stalled;
            break;
        }
        stored.push(new);
    }

    let (inc_x, inc_s, inc_y) = match incumbent {
        Some((x, s, y)) => (Some(x), Some(s), Some(y)),
        None => (None, None, None),
    };
    Ok(CcgReport {
        status,
        algorithm: config.algorithm,
        iterations,
        lower_bound: lb,
        upper_bound: ub,
        lb_history,
        ub_history,
        incumbent: inc_x,
        incumbent_scenario: inc_s,
        incumbent_recourse: inc_y,
        vertices,
        log: log_rows,
        lb_exceeded_ub,
        envelope_error,
        square_error,
        budgets: config.budgets_for(case),
        warnings,
        wall_time: start.elapsed().as_secs_f64(),
    })
}
