//! Post-run checks of the convergence argument: bounds sandwich the optimum,
//! returned vertices never repeat, and the iteration count respects the
//! vertex-count bound.

use serde::{Deserialize, Serialize};

use super::CcgReport;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClaimsReport {
    /// `LB_N ≤ O* ≤ UB_N` at every iteration; `None` without a reference value.
    pub sandwich: Option<bool>,
    pub sandwich_violations: Vec<(usize, f64, f64)>,
    pub distinct_vertices: bool,
    pub iteration_bound: f64,
    pub within_iteration_bound: bool,
}

impl ClaimsReport {
    pub fn all_hold(&self) -> bool {
        self.sandwich.unwrap_or(true) && self.distinct_vertices && self.within_iteration_bound
    }
}

/// `uncertain_entries` is the number of `(node, t)` pairs carrying a vertex
/// coordinate; `tol` absorbs solver tolerances in the sandwich test.
pub fn audit_claims(report: &CcgReport, optimum: Option<f64>, uncertain_entries: usize, tol: f64) -> ClaimsReport {
    let mut violations = Vec::new();
    if let Some(o) = optimum {
        for (n, (&lb, &ub)) in report.lb_history.iter().zip(&report.ub_history).enumerate() {
            if lb > o + tol || ub < o - tol {
                violations.push((n + 1, lb, ub));
            }
        }
    }
    let vs = &report.vertices;
    let mut distinct = true;
    for a in 0..vs.len() {
        for b in a + 1..vs.len() {
            let same = vs[a]
                .v
                .iter()
                .zip(&vs[b].v)
                .all(|(x, y)| x.iter().zip(y).all(|(p, q)| (p - q).abs() <= 1e-6));
            if same {
                distinct = false;
            }
        }
    }
    let bound = 2f64.powi(uncertain_entries.min(1000) as i32) + 1.0;
    ClaimsReport {
        sandwich: optimum.map(|_| violations.is_empty()),
        sandwich_violations: violations,
        distinct_vertices: distinct,
        iteration_bound: bound,
        within_iteration_bound: (report.iterations as f64) <= bound,
    }
}
