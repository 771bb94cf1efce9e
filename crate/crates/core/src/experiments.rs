//! Experiment drivers built on [`ccg::run`]: budget sweeps, fixed-price
//! comparisons and improved-versus-traditional runs. Independent runs go
//! through [`par_map`] with private models.

use serde::{Deserialize, Serialize};

use crate::ccg::{self, Algorithm, CcgConfig, CcgError, CcgReport, RunStatus};
use crate::network::NetworkCase;
use crate::parallel::{par_map, Parallelism};
use crate::uncertainty::{BudgetParams, ElasticityTable, UncertaintyError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetSweepRow {
    pub gamma_t: f64,
    pub gamma_s: f64,
    pub objective: f64,
    pub lower_bound: f64,
    pub iterations: usize,
    pub wall_s: f64,
    pub status: RunStatus,
}

/// One full run per budget pair, in input order.
pub fn sweep_budgets(
    config: &CcgConfig,
    case: &NetworkCase,
    table: &ElasticityTable,
    budgets: &[BudgetParams],
    parallelism: Parallelism,
) -> Result<Vec<BudgetSweepRow>, CcgError> {
    let runs = par_map(parallelism, budgets, |b| {
        let cfg = CcgConfig {
            budgets: Some(*b),
            ..config.clone()
        };
        ccg::run(&cfg, case, table).map(|r| BudgetSweepRow {
            gamma_t: b.gamma_t,
            gamma_s: b.gamma_s,
            objective: r.upper_bound,
            lower_bound: r.lower_bound,
            iterations: r.iterations,
            wall_s: r.wall_time,
            status: r.status,
        })
    });
    runs.into_iter().collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FixedTouStatus {
    Converged,
    IterationLimit,
    Stalled,
    /// The price ratio falls outside every elasticity interval.
    OutOfCoverage,
    /// The fixed price violates the case's TOU bounds.
    OutsideTouBounds,
    /// No first-stage decision admits a recourse for every scenario.
    Infeasible,
}

impl From<RunStatus> for FixedTouStatus {
    fn from(s: RunStatus) -> Self {
        match s {
            RunStatus::Converged => FixedTouStatus::Converged,
            RunStatus::IterationLimit => FixedTouStatus::IterationLimit,
            RunStatus::Stalled => FixedTouStatus::Stalled,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedTouRow {
    /// `None` for the optimized-price row.
    pub multiplier: Option<f64>,
    pub prices: Vec<f64>,
    pub objective: Option<f64>,
    pub iterations: usize,
    pub wall_s: f64,
    pub status: FixedTouStatus,
}

impl FixedTouRow {
    pub fn label(&self) -> String {
        match self.multiplier {
            Some(m) => format!("{m}x reference"),
            None => "optimized".into(),
        }
    }
}

fn fixed_row(
    config: &CcgConfig,
    case: &NetworkCase,
    table: &ElasticityTable,
    multiplier: Option<f64>,
) -> Result<FixedTouRow, CcgError> {
    let prices: Option<Vec<f64>> = multiplier.map(|m| case.prices.c_ref.iter().map(|c| c * m).collect());
    let row = |status, objective, iterations, wall_s, prices: Vec<f64>| FixedTouRow {
        multiplier,
        prices,
        objective,
        iterations,
        wall_s,
        status,
    };
    if let Some(p) = &prices {
        let tol = 1e-12;
        if p.iter().any(|&c| c < case.prices.tou_min - tol || c > case.prices.tou_max + tol) {
            return Ok(row(FixedTouStatus::OutsideTouBounds, None, 0, 0.0, p.clone()));
        }
        for (t, &c) in p.iter().enumerate() {
            let ratio = c / case.prices.c_ref[t];
            if table.admissible_intervals(t, ratio).is_empty() {
                return Ok(row(FixedTouStatus::OutOfCoverage, None, 0, 0.0, p.clone()));
            }
        }
    }
    let cfg = CcgConfig {
        fixed_prices: prices.clone(),
        ..config.clone()
    };
    match ccg::run(&cfg, case, table) {
        Ok(r) => {
            let p = r.incumbent.as_ref().map(|x| x.c_tou.clone()).or(prices).unwrap_or_default();
            Ok(row(r.status.into(), Some(r.upper_bound), r.iterations, r.wall_time, p))
        }
        Err(CcgError::MasterInfeasible) | Err(CcgError::InnerInfeasible(_)) => {
            Ok(row(FixedTouStatus::Infeasible, None, 0, 0.0, prices.unwrap_or_default()))
        }
        Err(CcgError::Uncertainty(UncertaintyError::OutOfCoverage { .. })) => {
            Ok(row(FixedTouStatus::OutOfCoverage, None, 0, 0.0, prices.unwrap_or_default()))
        }
        Err(e) => Err(e),
    }
}

/// One run with optimized prices followed by one per multiplier of the
/// reference price, with the price removed from the decisions.
pub fn fixed_tou(
    config: &CcgConfig,
    case: &NetworkCase,
    table: &ElasticityTable,
    multipliers: &[f64],
    parallelism: Parallelism,
) -> Result<Vec<FixedTouRow>, CcgError> {
    let jobs: Vec<Option<f64>> = std::iter::once(None).chain(multipliers.iter().map(|&m| Some(m))).collect();
    par_map(parallelism, &jobs, |&m| fixed_row(config, case, table, m))
        .into_iter()
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub improved_status: RunStatus,
    pub traditional_status: RunStatus,
    pub improved_gap: f64,
    pub traditional_gap: f64,
    pub traditional_lb_exceeded_ub: bool,
    /// Improved converged while traditional stalled, hit the limit, or
    /// crossed its bounds.
    pub traditional_failed: bool,
}

#[derive(Clone, Debug)]
pub struct Comparison {
    pub improved: CcgReport,
    pub traditional: CcgReport,
    pub verdict: Verdict,
}

pub fn compare_algorithms(config: &CcgConfig, case: &NetworkCase, table: &ElasticityTable) -> Result<Comparison, CcgError> {
    let mut runs = par_map(config.parallelism, &[Algorithm::Improved, Algorithm::Traditional], |&a| {
        ccg::run(&CcgConfig { algorithm: a, ..config.clone() }, case, table)
    })
    .into_iter();
    let improved = runs.next().expect("two runs")?;
    let traditional = runs.next().expect("two runs")?;
    let verdict = Verdict {
        improved_status: improved.status,
        traditional_status: traditional.status,
        improved_gap: improved.gap(),
        traditional_gap: traditional.gap(),
        traditional_lb_exceeded_ub: traditional.lb_exceeded_ub,
        traditional_failed: improved.status == RunStatus::Converged
            && (traditional.status != RunStatus::Converged || traditional.lb_exceeded_ub),
    };
    Ok(Comparison {
        improved,
        traditional,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::instances;

    #[test]
    fn duplicate_budget_pairs_give_identical_rows() {
        let (case, table) = instances::micro1();
        let b = BudgetParams { gamma_t: 1.0, gamma_s: 1.0 };
        let rows = sweep_budgets(&CcgConfig::default(), &case, &table, &[b, b], Parallelism::Parallel).unwrap();
        assert_eq!(rows[0].objective, rows[1].objective);
        assert_eq!(rows[0].iterations, rows[1].iterations);
    }

    #[test]
    fn shrinking_budgets_never_raise_the_objective() {
        let (case, table) = instances::micro2();
        let budgets = [
            BudgetParams::slack(2, 2),
            BudgetParams { gamma_t: 1.0, gamma_s: 1.0 },
            BudgetParams { gamma_t: 0.0, gamma_s: 0.0 },
        ];
        let rows = sweep_budgets(&CcgConfig::default(), &case, &table, &budgets, Parallelism::default()).unwrap();
        for w in rows.windows(2) {
            assert!(w[1].objective <= w[0].objective + 1.0, "{rows:?}");
        }
    }

    #[test]
    fn multiplier_beyond_coverage_is_flagged() {
        let (mut case, table) = instances::micro1();
        case.prices.tou_max = 1.0;
        let rows = fixed_tou(&CcgConfig::default(), &case, &table, &[1.0, 5.0], Parallelism::Sequential).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[2].status, FixedTouStatus::OutOfCoverage);
        assert_eq!(rows[1].status, FixedTouStatus::Converged);
    }

    #[test]
    fn optimized_prices_beat_every_fixed_price() {
        let (case, table) = instances::micro1();
        let rows = fixed_tou(&CcgConfig::default(), &case, &table, &[0.5, 1.0, 2.0, 3.0], Parallelism::default()).unwrap();
        let best = rows[0].objective.unwrap();
        for r in &rows[1..] {
            if let Some(o) = r.objective {
                assert!(best <= o + 1.0, "{} beats optimized", r.label());
            }
        }
    }

    #[test]
    fn reference_price_ignores_the_elasticity_table() {
        let (case, _) = instances::micro2();
        let zero = ElasticityTable::uniform(3, 2, &[(0.0, 1.0), (1.0, 4.0)], 0.0, 0.0).unwrap();
        let other = ElasticityTable::uniform(3, 2, &[(0.0, 1.0), (1.0, 4.0)], -0.9, -0.1).unwrap();
        let a = fixed_tou(&CcgConfig::default(), &case, &zero, &[1.0], Parallelism::Sequential).unwrap();
        let b = fixed_tou(&CcgConfig::default(), &case, &other, &[1.0], Parallelism::Sequential).unwrap();
        assert!((a[1].objective.unwrap() - b[1].objective.unwrap()).abs() < 1e-6);
    }

    #[test]
    fn comparison_flags_the_traditional_failure() {
        let (case, table) = instances::ddu_showcase();
        let cfg = CcgConfig { max_iters: 10, ..Default::default() };
        let c = compare_algorithms(&cfg, &case, &table).unwrap();
        assert_eq!(c.verdict.improved_status, RunStatus::Converged);
        assert!(c.verdict.traditional_failed);
    }
}
