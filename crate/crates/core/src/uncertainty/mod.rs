//! Decision-dependent elasticity uncertainty: interval tables, the
//! mixed-integer set reformulation, vertex coordinates and budgets.

mod io;
mod reformulation;
mod synthetic;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::{DemandBounds, NetworkCase};

pub use reformulation::{
    add_adversary_scenario, add_budget_constraints, add_interval_selector, add_set_reformulation,
    AdversaryScenario, BudgetHandles, IntervalChoice, PriceInput, SetHandles, SetMode,
};
pub use synthetic::{interval_boundaries, synthetic_table, SensitivityClass, SyntheticOptions};

/// Tolerance for treating a ratio as sitting on an interval endpoint.
pub const RATIO_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum UncertaintyError {
    #[error("elasticity table is empty")]
    EmptyTable,
    #[error("price ratio {ratio} in period {t} is outside every interval")]
    OutOfCoverage { t: usize, ratio: f64 },
    #[error("invalid elasticity table: {0}")]
    InvalidTable(String),
    #[error("elasticity {value} of node {node}, period {t} is outside [{lo}, {hi}]")]
    OutOfBounds {
        node: usize,
        t: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("{path}: line {line}, column {column}: {msg}")]
    Parse {
        path: String,
        line: u64,
        column: usize,
        msg: String,
    },
    #[error("{path}: missing column `{column}`")]
    MissingColumn { path: String, column: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
}

/// Ratio intervals `[r⁻, r⁺]` per `[t][k]` and elasticity bounds
/// `[ξ⁻, ξ⁺]` per `[node][t][k]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElasticityTable {
    pub intervals: Vec<Vec<(f64, f64)>>,
    pub xi_lo: Vec<Vec<Vec<f64>>>,
    pub xi_hi: Vec<Vec<Vec<f64>>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetParams {
    /// Per-node budget over periods.
    pub gamma_t: f64,
    /// Per-period budget over nodes.
    pub gamma_s: f64,
}

impl BudgetParams {
    pub fn slack(nodes: usize, periods: usize) -> Self {
        BudgetParams {
            gamma_t: periods as f64,
            gamma_s: nodes as f64,
        }
    }

    pub fn validate(&self, nodes: usize, periods: usize) -> Result<(), UncertaintyError> {
        if !(0.0..=periods as f64).contains(&self.gamma_t) || !(0.0..=nodes as f64).contains(&self.gamma_s) {
            return Err(UncertaintyError::InvalidTable(format!(
                "budgets ({}, {}) outside [0, {periods}] x [0, {nodes}]",
                self.gamma_t, self.gamma_s
            )));
        }
        Ok(())
    }

    /// The period budget cannot bind, so periods decouple.
    pub fn periods_separable(&self, periods: usize) -> bool {
        self.gamma_t >= periods as f64
    }
}

/// Elasticity realization with its vertex coordinates and the active interval
/// of each period.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    /// `[node][t]`
    pub xi: Vec<Vec<f64>>,
    /// `[node][t]`, in `[0, 1]`
    pub v: Vec<Vec<f64>>,
    /// Active interval per period.
    pub z: Vec<usize>,
}

impl ElasticityTable {
    pub fn new(
        intervals: Vec<Vec<(f64, f64)>>,
        xi_lo: Vec<Vec<Vec<f64>>>,
        xi_hi: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self, UncertaintyError> {
        let t = ElasticityTable {
            intervals,
            xi_lo,
            xi_hi,
        };
        t.validate()?;
        Ok(t)
    }

    /// Same bounds for every node, period and interval.
    pub fn uniform(nodes: usize, periods: usize, intervals: &[(f64, f64)], lo: f64, hi: f64) -> Result<Self, UncertaintyError> {
        let k = intervals.len();
        Self::new(
            vec![intervals.to_vec(); periods],
            vec![vec![vec![lo; k]; periods]; nodes],
            vec![vec![vec![hi; k]; periods]; nodes],
        )
    }

    pub fn num_nodes(&self) -> usize {
        self.xi_lo.len()
    }

    pub fn num_periods(&self) -> usize {
        self.intervals.len()
    }

    pub fn num_intervals(&self) -> usize {
        self.intervals.first().map_or(0, |r| r.len())
    }

    pub fn bounds(&self, node: usize, t: usize, k: usize) -> (f64, f64) {
        (self.xi_lo[node][t][k], self.xi_hi[node][t][k])
    }

    pub fn validate(&self) -> Result<(), UncertaintyError> {
        let bad = |m: String| Err(UncertaintyError::InvalidTable(m));
        let nt = self.num_periods();
        let nk = self.num_intervals();
        if nt == 0 || nk == 0 || self.num_nodes() == 0 {
            return Err(UncertaintyError::EmptyTable);
        }
        for (t, row) in self.intervals.iter().enumerate() {
            if row.len() != nk {
                return bad(format!("period {t} has {} intervals, expected {nk}", row.len()));
            }
            for (k, &(lo, hi)) in row.iter().enumerate() {
                if !(lo.is_finite() && hi.is_finite()) || lo > hi || lo < 0.0 {
                    return bad(format!("interval {k} of period {t} is [{lo}, {hi}]"));
                }
                if k > 0 && (row[k - 1].1 - lo).abs() > RATIO_TOL {
                    return bad(format!(
                        "intervals {} and {k} of period {t} are not contiguous ({} vs {lo})",
                        k - 1,
                        row[k - 1].1
                    ));
                }
            }
        }
        for (name, m) in [("xi_lo", &self.xi_lo), ("xi_hi", &self.xi_hi)] {
            if m.len() != self.num_nodes() || m.iter().any(|r| r.len() != nt || r.iter().any(|c| c.len() != nk)) {
                return bad(format!("{name} does not have shape nodes x {nt} x {nk}"));
            }
        }
        for i in 0..self.num_nodes() {
            for t in 0..nt {
                for k in 0..nk {
                    let (lo, hi) = self.bounds(i, t, k);
                    if !(lo.is_finite() && hi.is_finite()) || lo > hi {
                        return bad(format!("elasticity bounds of node {i}, period {t}, interval {k} are [{lo}, {hi}]"));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn check_case(&self, case: &NetworkCase) -> Result<(), UncertaintyError> {
        if self.num_nodes() != case.num_nodes() || self.num_periods() != case.periods {
            return Err(UncertaintyError::DimensionMismatch(format!(
                "table is {} nodes x {} periods, case is {} x {}",
                self.num_nodes(),
                self.num_periods(),
                case.num_nodes(),
                case.periods
            )));
        }
        Ok(())
    }

    /// Interval containing `ratio` in period `t`; a shared endpoint resolves
    /// to the lower interval.
    pub fn interval_lookup(&self, t: usize, ratio: f64) -> Result<usize, UncertaintyError> {
        self.admissible_intervals(t, ratio)
            .first()
            .copied()
            .ok_or(UncertaintyError::OutOfCoverage { t, ratio })
    }

    /// Every interval containing `ratio` (two on a shared endpoint).
    pub fn admissible_intervals(&self, t: usize, ratio: f64) -> Vec<usize> {
        self.intervals[t]
            .iter()
            .enumerate()
            .filter(|(_, &(lo, hi))| ratio >= lo - RATIO_TOL && ratio <= hi + RATIO_TOL)
            .map(|(k, _)| k)
            .collect()
    }

    /// `ξ = (1 − v)ξ⁻ + vξ⁺` under the active interval of each period.
    pub fn vertex_to_scenario(&self, z: &[usize], v: &[Vec<f64>]) -> Vec<Vec<f64>> {
        v.iter()
            .enumerate()
            .map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .map(|(t, &vi)| {
                        let (lo, hi) = self.bounds(i, t, z[t]);
                        (1.0 - vi) * lo + vi * hi
                    })
                    .collect()
            })
            .collect()
    }

    /// Inverse of [`vertex_to_scenario`](Self::vertex_to_scenario); a
    /// degenerate interval maps to 0.
    pub fn scenario_to_vertex(&self, z: &[usize], xi: &[Vec<f64>], tol: f64) -> Result<Vec<Vec<f64>>, UncertaintyError> {
        xi.iter()
            .enumerate()
            .map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .map(|(t, &x)| {
                        let (lo, hi) = self.bounds(i, t, z[t]);
                        if x < lo - tol || x > hi + tol {
                            return Err(UncertaintyError::OutOfBounds {
                                node: i,
                                t,
                                value: x,
                                lo,
                                hi,
                            });
                        }
                        if hi - lo <= f64::EPSILON * (1.0 + lo.abs()) {
                            return Ok(0.0);
                        }
                        Ok(((x - lo) / (hi - lo)).clamp(0.0, 1.0))
                    })
                    .collect()
            })
            .collect()
    }

    pub fn scenario(&self, z: Vec<usize>, v: Vec<Vec<f64>>) -> Scenario {
        Scenario {
            xi: self.vertex_to_scenario(&z, &v),
            v,
            z,
        }
    }

    /// Range of the realized demand over every price in the TOU bounds (or
    /// the given fixed prices) and every admissible elasticity.
    pub fn demand_bounds(&self, case: &NetworkCase, fixed_prices: Option<&[f64]>) -> DemandBounds {
        let n = case.num_nodes();
        let nt = case.periods;
        let mut lo = vec![vec![0.0; nt]; n];
        let mut hi = vec![vec![0.0; nt]; n];
        for t in 0..nt {
            let cref = case.prices.c_ref[t];
            let (rmin, rmax) = match fixed_prices {
                Some(c) => (c[t] / cref, c[t] / cref),
                None => (case.prices.tou_min / cref, case.prices.tou_max / cref),
            };
            for i in 0..n {
                let load = case.load_at(i, t);
                let mut a = f64::INFINITY;
                let mut b = f64::NEG_INFINITY;
                for (k, &(r_lo, r_hi)) in self.intervals[t].iter().enumerate() {
                    let r0 = r_lo.max(rmin);
                    let r1 = r_hi.min(rmax);
                    if r0 > r1 + RATIO_TOL {
                        continue;
                    }
                    let (x0, x1) = self.bounds(i, t, k);
                    for r in [r0, r1] {
                        for x in [x0, x1] {
                            let l = load * (1.0 + x * (r - 1.0));
                            a = a.min(l);
                            b = b.max(l);
                        }
                    }
                }
                if a > b {
                    // price range uncovered: the master is infeasible anyway
                    a = load;
                    b = load;
                }
                lo[i][t] = a;
                hi[i][t] = b;
            }
        }
        DemandBounds { lo, hi }
    }

    /// Largest `|ξ|` in the table.
    pub fn max_abs_elasticity(&self) -> f64 {
        self.xi_lo
            .iter()
            .chain(&self.xi_hi)
            .flatten()
            .flatten()
            .fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    /// True when some elasticity bound is positive.
    pub fn has_positive(&self) -> bool {
        self.xi_hi.iter().flatten().flatten().any(|&x| x > 0.0)
    }
}

/// `l = L(1 + ξ(c/C_ref − 1))`
pub fn realized_demand(load: f64, xi: f64, price: f64, c_ref: f64) -> f64 {
    load * (1.0 + xi * (price / c_ref - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn five() -> ElasticityTable {
        let iv = [(0.0, 0.25), (0.25, 0.5), (0.5, 1.0), (1.0, 4.0), (4.0, 16.0)];
        ElasticityTable::uniform(1, 1, &iv, -0.97, -0.11).unwrap()
    }

    #[test]
    fn lookup_inside_second_interval() {
        assert_eq!(five().interval_lookup(0, 0.3).unwrap(), 1);
    }

    #[test]
    fn shared_endpoint_goes_to_lower_interval() {
        let t = five();
        assert_eq!(t.interval_lookup(0, 0.25).unwrap(), 0);
        assert_eq!(t.admissible_intervals(0, 0.25), vec![0, 1]);
    }

    #[test]
    fn ratio_beyond_last_interval_is_uncovered() {
        assert!(matches!(
            five().interval_lookup(0, 20.0),
            Err(UncertaintyError::OutOfCoverage { .. })
        ));
    }

    #[test]
    fn vertex_mapping_examples() {
        let t = five();
        let z = [1];
        let xi = |v: f64| t.vertex_to_scenario(&z, &[vec![v]])[0][0];
        assert_eq!(xi(1.0), -0.11);
        assert_eq!(xi(0.0), -0.97);
        assert!((xi(0.5) + 0.54).abs() < 1e-12);
        let v = |x: f64| t.scenario_to_vertex(&z, &[vec![x]], 1e-9).unwrap()[0][0];
        assert_eq!(v(-0.11), 1.0);
        assert!((v(-0.54) - 0.5).abs() < 1e-12);
        assert!(t.scenario_to_vertex(&z, &[vec![-1.5]], 1e-9).is_err());
    }

    #[test]
    fn degenerate_interval_maps_to_zero() {
        let t = ElasticityTable::uniform(1, 1, &[(0.0, 2.0)], -0.5, -0.5).unwrap();
        assert_eq!(t.scenario_to_vertex(&[0], &[vec![-0.5]], 1e-9).unwrap()[0][0], 0.0);
    }

    #[test]
    fn gaps_and_inverted_bounds_are_rejected() {
        assert!(ElasticityTable::uniform(1, 1, &[(0.0, 1.0), (1.5, 2.0)], -0.5, 0.0).is_err());
        assert!(ElasticityTable::uniform(1, 1, &[(0.0, 1.0)], 0.0, -0.5).is_err());
        assert!(matches!(
            ElasticityTable::new(vec![], vec![], vec![]),
            Err(UncertaintyError::EmptyTable)
        ));
    }

    #[test]
    fn demand_example() {
        assert!((realized_demand(100.0, -0.5, 0.12, 0.1) - 90.0).abs() < 1e-12);
        assert_eq!(realized_demand(100.0, 0.0, 0.5, 0.1), 100.0);
    }
}
