//! Brute-force reference solvers for small instances, independent of the
//! KKT machinery: worst cases by vertex enumeration with one LP per vertex,
//! and the full min-max optimum by a price grid with an extensive-form LP per
//! grid point.

pub mod instances;
mod vertices;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ccg::{evaluate_recourse, uncertain_mask, CcgError};
use crate::model::{LinExpr, Model, ObjSense, Sense, SolveStatus, SolverOptions};
use crate::network::{
    build_first_stage, build_recourse, FirstStageSolution, NetworkCase, Param, RecourseOptions,
};
use crate::parallel::{par_map, Parallelism};
use crate::uncertainty::{realized_demand, BudgetParams, ElasticityTable, RATIO_TOL};

pub use vertices::budget_vertices;

pub const MAX_ENTRIES: usize = 16;
pub const FULL_MAX_PERIODS: usize = 3;
pub const FULL_MAX_ENTRIES: usize = 8;
pub const FULL_MAX_GRID: usize = 50;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("instance too large for enumeration: {0}")]
    TooLarge(String),
    #[error("oracle needs integer budgets, got ({0}, {1})")]
    FractionalBudget(f64, f64),
    #[error(transparent)]
    Ccg(#[from] CcgError),
}

impl From<crate::model::ModelError> for OracleError {
    fn from(e: crate::model::ModelError) -> Self {
        OracleError::Ccg(e.into())
    }
}

impl From<crate::network::NetworkError> for OracleError {
    fn from(e: crate::network::NetworkError) -> Self {
        OracleError::Ccg(e.into())
    }
}

#[derive(Clone, Debug)]
pub struct OracleOptions {
    pub polygon_sides: usize,
    pub solver: SolverOptions,
    pub parallelism: Parallelism,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            polygon_sides: crate::network::DEFAULT_POLYGON_SIDES,
            solver: SolverOptions::default(),
            parallelism: Parallelism::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VertexValue {
    pub v: Vec<Vec<f64>>,
    pub z: Vec<usize>,
    /// `None` when the recourse LP is infeasible.
    pub value: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    /// Worst-case value (`+∞` if some vertex has no recourse), or the grid
    /// optimum for [`oracle_full`].
    pub value: f64,
    pub argmax_v: Vec<Vec<f64>>,
    pub argmax_z: Vec<usize>,
    /// Price vector of the grid optimum ([`oracle_full`] only).
    pub arg_c: Option<Vec<f64>>,
    pub vertex_values: Vec<VertexValue>,
    pub enumerated: usize,
    pub infeasible: bool,
    /// Upper bound on `estimate − true optimum` ([`oracle_full`] only).
    pub grid_error: f64,
}

fn entries_of(case: &NetworkCase) -> Vec<(usize, usize)> {
    let mask = uncertain_mask(case);
    let mut e = Vec::new();
    for (i, row) in mask.iter().enumerate() {
        for (t, &b) in row.iter().enumerate() {
            if b {
                e.push((i, t));
            }
        }
    }
    e
}

fn check_budgets(b: &BudgetParams) -> Result<(), OracleError> {
    if b.gamma_s.fract() != 0.0 || b.gamma_t.fract() != 0.0 {
        return Err(OracleError::FractionalBudget(b.gamma_t, b.gamma_s));
    }
    Ok(())
}

/// Interval selections to consider: the given one, or every combination of
/// intervals containing the price ratio.
fn selections(case: &NetworkCase, table: &ElasticityTable, c: &[f64], z: Option<&[usize]>) -> Result<Vec<Vec<usize>>, OracleError> {
    if let Some(z) = z {
        return Ok(vec![z.to_vec()]);
    }
    let mut out: Vec<Vec<usize>> = vec![Vec::new()];
    for t in 0..case.periods {
        let ratio = c[t] / case.prices.c_ref[t];
        let ks = table.admissible_intervals(t, ratio);
        if ks.is_empty() {
            return Err(OracleError::Ccg(crate::uncertainty::UncertaintyError::OutOfCoverage { t, ratio }.into()));
        }
        out = out
            .into_iter()
            .flat_map(|p| {
                ks.iter().map(move |&k| {
                    let mut q = p.clone();
                    q.push(k);
                    q
                })
            })
            .collect();
    }
    Ok(out)
}

fn to_grid(case: &NetworkCase, entries: &[(usize, usize)], point: &[f64]) -> Vec<Vec<f64>> {
    let mut v = vec![vec![0.0; case.periods]; case.num_nodes()];
    for (&(i, t), &x) in entries.iter().zip(point) {
        v[i][t] = x;
    }
    v
}

/// True when `a` beats `b` as a maximizer: larger value, or equal within
/// tolerance and lexicographically smaller coordinates.
fn better(a: f64, av: &[f64], b: f64, bv: &[f64]) -> bool {
    let tol = 1e-9 * (1.0 + a.abs().max(b.abs()));
    if a > b + tol {
        return true;
    }
    if a < b - tol {
        return false;
    }
    av.iter().zip(bv).find(|(x, y)| x != y).is_some_and(|(x, y)| x < y)
}

fn enumerate(
    case: &NetworkCase,
    table: &ElasticityTable,
    x: &FirstStageSolution,
    z: Option<&[usize]>,
    budgets: BudgetParams,
    relax: bool,
    opts: &OracleOptions,
) -> Result<OracleResult, OracleError> {
    let entries = entries_of(case);
    if entries.len() > MAX_ENTRIES {
        return Err(OracleError::TooLarge(format!("{} uncertain entries > {MAX_ENTRIES}", entries.len())));
    }
    check_budgets(&budgets)?;
    let points = budget_vertices(&entries, budgets);
    let sels = selections(case, table, &x.c_tou, z)?;
    let jobs: Vec<(Vec<f64>, Vec<usize>)> = sels
        .iter()
        .flat_map(|s| points.iter().map(move |p| (p.clone(), s.clone())))
        .collect();
    let values = par_map(opts.parallelism, &jobs, |(p, s)| {
        let v = to_grid(case, &entries, p);
        let xi = table.vertex_to_scenario(s, &v);
        evaluate_recourse(case, x, &xi, opts.polygon_sides, relax, &opts.solver).map(|r| r.map(|e| e.value))
    });
    let mut best: Option<(f64, usize)> = None;
    let mut vertex_values = Vec::with_capacity(jobs.len());
    let mut infeasible = false;
    for (j, r) in values.into_iter().enumerate() {
        let val = r?;
        infeasible |= val.is_none();
        let score = val.unwrap_or(f64::INFINITY);
        let (p, s) = &jobs[j];
        let key: Vec<f64> = s.iter().map(|&k| k as f64).chain(p.iter().copied()).collect();
        match best {
            None => best = Some((score, j)),
            Some((b, bj)) => {
                let (bp, bs) = &jobs[bj];
                let bkey: Vec<f64> = bs.iter().map(|&k| k as f64).chain(bp.iter().copied()).collect();
                let beats = if score.is_infinite() || b.is_infinite() {
                    score > b || (score == b && key < bkey)
                } else {
                    better(score, &key, b, &bkey)
                };
                if beats {
                    best = Some((score, j));
                }
            }
        }
        vertex_values.push(VertexValue {
            v: to_grid(case, &entries, p),
            z: s.clone(),
            value: val,
        });
    }
    let (value, bj) = best.expect("at least one vertex");
    Ok(OracleResult {
        value,
        argmax_v: to_grid(case, &entries, &jobs[bj].0),
        argmax_z: jobs[bj].1.clone(),
        arg_c: None,
        enumerated: jobs.len(),
        vertex_values,
        infeasible,
        grid_error: 0.0,
    })
}

/// Exact worst-case recourse cost at `x` by enumerating the vertices of the
/// budgeted set and solving the recourse LP at each. Without `z`, a price on
/// a shared interval endpoint enumerates both intervals.
pub fn oracle_worst_case(
    case: &NetworkCase,
    table: &ElasticityTable,
    x: &FirstStageSolution,
    z: Option<&[usize]>,
    budgets: BudgetParams,
    opts: &OracleOptions,
) -> Result<OracleResult, OracleError> {
    enumerate(case, table, x, z, budgets, false, opts)
}

/// Largest minimal constraint slack over the vertices: the reference for the
/// feasibility check.
pub fn oracle_feasibility(
    case: &NetworkCase,
    table: &ElasticityTable,
    x: &FirstStageSolution,
    z: Option<&[usize]>,
    budgets: BudgetParams,
    opts: &OracleOptions,
) -> Result<OracleResult, OracleError> {
    enumerate(case, table, x, z, budgets, true, opts)
}

/// Cheapest day-ahead dispatch for fixed prices (no recourse term).
pub fn first_stage_for_prices(
    case: &NetworkCase,
    prices: &[f64],
    opts: &OracleOptions,
) -> Result<Option<FirstStageSolution>, OracleError> {
    let mut m = Model::new();
    let fs = build_first_stage(&mut m, case, opts.polygon_sides)?;
    for (t, &c) in prices.iter().enumerate() {
        m.add_constraint(Sense::Eq, LinExpr::from(fs.c[t]), c, format!("price:t={t}"))?;
    }
    m.set_objective(ObjSense::Minimize, fs.cost(case))?;
    let r = m.solve(&opts.solver)?;
    Ok(if r.is_optimal() { Some(fs.extract(case, &r)) } else { None })
}

/// Robust optimum for fixed prices and interval selection: first stage plus a
/// recourse copy for every vertex, `min Cᵀx + η` with `η` above every copy's
/// cost. `None` when infeasible.
pub fn fixed_price_optimum(
    case: &NetworkCase,
    table: &ElasticityTable,
    prices: &[f64],
    z: &[usize],
    points: &[Vec<Vec<f64>>],
    opts: &OracleOptions,
) -> Result<Option<(f64, FirstStageSolution)>, OracleError> {
    let mut m = Model::new();
    let fs = build_first_stage(&mut m, case, opts.polygon_sides)?;
    for (t, &c) in prices.iter().enumerate() {
        m.add_constraint(Sense::Eq, LinExpr::from(fs.c[t]), c, format!("price:t={t}"))?;
    }
    let eta = m.add_continuous(crate::model::Bounds::FREE);
    let bounds = table.demand_bounds(case, Some(prices));
    let lp = build_recourse(case, &bounds, RecourseOptions { polygon_sides: opts.polygon_sides })?;
    let all = lp.all_periods();
    for (j, v) in points.iter().enumerate() {
        let xi = table.vertex_to_scenario(z, v);
        let emb = lp.embed(
            &mut m,
            &all,
            |p| match p {
                Param::P0Da(t) => LinExpr::from(fs.p0[t]),
                Param::Demand { node, t } => LinExpr::constant(realized_demand(
                    case.load_at(node, t),
                    xi[node][t],
                    prices[t],
                    case.prices.c_ref[t],
                )),
                Param::Price(_) => unreachable!(),
            },
            false,
            &format!("v{j}:"),
        )?;
        let cost = emb.cost(&lp, |t| prices[t]);
        m.add_constraint(Sense::Ge, LinExpr::from(eta) - cost, 0.0, format!("v{j}:epigraph"))?;
    }
    m.set_objective(ObjSense::Minimize, fs.cost(case) + eta)?;
    let r = m.solve(&opts.solver)?;
    match r.status {
        SolveStatus::Optimal => Ok(Some((r.objective, fs.extract(case, &r)))),
        SolveStatus::Infeasible => Ok(None),
        s => Err(OracleError::Ccg(CcgError::Solver(format!("extensive form returned {s:?}")))),
    }
}

/// Price range of interval `k` in period `t` within the TOU bounds.
fn piece(case: &NetworkCase, table: &ElasticityTable, t: usize, k: usize) -> Option<(f64, f64)> {
    let cref = case.prices.c_ref[t];
    let (r0, r1) = table.intervals[t][k];
    let lo = (r0 * cref).max(case.prices.tou_min);
    let hi = (r1 * cref).min(case.prices.tou_max);
    (lo <= hi + RATIO_TOL * cref).then_some((lo, hi.max(lo)))
}

/// Global min-max optimum over a price grid: for every combination of
/// intervals, `points_per_piece` equally spaced prices per period across the
/// interval's part of the TOU range (endpoints included), each evaluated
/// exactly by [`fixed_price_optimum`]. The estimate is the best grid value;
/// `grid_error` bounds how far the true optimum can lie below it, using
/// convexity of the value in the price within one interval selection (which
/// holds when every elasticity bound is non-positive; otherwise the bound is
/// reported as infinite).
pub fn oracle_full(
    case: &NetworkCase,
    table: &ElasticityTable,
    points_per_piece: usize,
    budgets: BudgetParams,
    opts: &OracleOptions,
) -> Result<OracleResult, OracleError> {
    let entries = entries_of(case);
    if case.periods > FULL_MAX_PERIODS || entries.len() > FULL_MAX_ENTRIES {
        return Err(OracleError::TooLarge(format!(
            "{} periods / {} uncertain entries (limits {FULL_MAX_PERIODS} / {FULL_MAX_ENTRIES})",
            case.periods,
            entries.len()
        )));
    }
    check_budgets(&budgets)?;
    let nk = table.num_intervals();
    let per_period = points_per_piece * nk;
    if per_period > FULL_MAX_GRID {
        return Err(OracleError::TooLarge(format!("{per_period} grid points per period > {FULL_MAX_GRID}")));
    }
    let points: Vec<Vec<Vec<f64>>> = budget_vertices(&entries, budgets)
        .iter()
        .map(|p| to_grid(case, &entries, p))
        .collect();

    // interval combinations with a non-empty price piece in every period
    let mut combos: Vec<Vec<usize>> = vec![Vec::new()];
    for t in 0..case.periods {
        let ks: Vec<usize> = (0..nk).filter(|&k| piece(case, table, t, k).is_some()).collect();
        combos = combos
            .into_iter()
            .flat_map(|c| {
                ks.iter().map(move |&k| {
                    let mut d = c.clone();
                    d.push(k);
                    d
                })
            })
            .collect();
    }
    if combos.is_empty() || combos.iter().any(|c| c.len() != case.periods) {
        return Err(OracleError::Ccg(CcgError::MasterInfeasible));
    }

    let convex = !table.has_positive();
    let mut best: Option<(f64, Vec<f64>, Vec<usize>)> = None;
    let mut lower = f64::INFINITY;
    let mut enumerated = 0;
    for z in &combos {
        let axes: Vec<Vec<f64>> = (0..case.periods)
            .map(|t| {
                let (lo, hi) = piece(case, table, t, z[t]).unwrap();
                if hi - lo <= 0.0 || points_per_piece < 2 {
                    vec![lo]
                } else {
                    (0..points_per_piece)
                        .map(|j| lo + (hi - lo) * j as f64 / (points_per_piece - 1) as f64)
                        .collect()
                }
            })
            .collect();
        let shape: Vec<usize> = axes.iter().map(|a| a.len()).collect();
        let total: usize = shape.iter().product();
        let grid: Vec<Vec<usize>> = (0..total).map(|mut idx| {
            shape.iter().map(|&n| { let d = idx % n; idx /= n; d }).collect()
        }).collect();
        let vals = par_map(opts.parallelism, &grid, |g| {
            let c: Vec<f64> = g.iter().enumerate().map(|(t, &j)| axes[t][j]).collect();
            fixed_price_optimum(case, table, &c, z, &points, opts).map(|r| r.map(|(v, _)| v))
        });
        let mut f = Vec::with_capacity(total);
        for v in vals {
            f.push(v?.unwrap_or(f64::INFINITY));
        }
        enumerated += total * points.len();
        for (g, &val) in grid.iter().zip(&f) {
            let c: Vec<f64> = g.iter().enumerate().map(|(t, &j)| axes[t][j]).collect();
            let replace = match &best {
                None => true,
                Some((b, bc, _)) => val < b - 1e-9 * (1.0 + b.abs()) || (val <= b + 1e-9 * (1.0 + b.abs()) && c < *bc && val.is_finite()),
            };
            if replace && val.is_finite() {
                best = Some((val, c, z.clone()));
            }
        }
        let piece_lower = if convex { grid_lower_bound(&shape, &axes, &f) } else { f64::NEG_INFINITY };
        lower = lower.min(piece_lower);
    }
    let (value, c, z) = best.ok_or(OracleError::Ccg(CcgError::MasterInfeasible))?;
    Ok(OracleResult {
        value,
        argmax_v: Vec::new(),
        argmax_z: z,
        arg_c: Some(c),
        vertex_values: Vec::new(),
        enumerated,
        infeasible: false,
        grid_error: (value - lower).max(0.0),
    })
}

/// Lower bound on a convex function over the box spanned by a tensor grid,
/// from the sampled values alone. In each cell, a corner whose outward
/// neighbour exists along every axis yields a supporting-plane bound: the
/// subgradient component along an axis lies between the backward and forward
/// secant slopes. Cells without such a corner (fewer than 3 points on some
/// axis, or infinite samples) give `-∞`.
fn grid_lower_bound(shape: &[usize], axes: &[Vec<f64>], f: &[f64]) -> f64 {
    let dims = shape.len();
    let index = |g: &[usize]| -> usize {
        let mut idx = 0;
        let mut mul = 1;
        for d in 0..dims {
            idx += g[d] * mul;
            mul *= shape[d];
        }
        idx
    };
    let finite_min = f.iter().copied().fold(f64::INFINITY, f64::min);
    if shape.iter().all(|&n| n == 1) {
        return finite_min;
    }
    // cells are indexed by their lower corner; axes with one point are flat
    let cell_shape: Vec<usize> = shape.iter().map(|&n| (n.max(2)) - 1).collect();
    let cells: usize = cell_shape.iter().product();
    let mut lower = f64::INFINITY;
    for mut ci in 0..cells {
        let base: Vec<usize> = cell_shape.iter().map(|&n| { let d = ci % n; ci /= n; d }).collect();
        let mut cell_best = f64::NEG_INFINITY;
        for corner in 0..(1usize << dims) {
            let mut g = base.clone();
            let mut ok = true;
            let mut bound = 0.0;
            let mut neighbours = Vec::new();
            for d in 0..dims {
                if shape[d] == 1 {
                    continue;
                }
                let upper = corner >> d & 1 == 1;
                if upper {
                    g[d] += 1;
                }
                // outward neighbour: below the lower corner, above the upper
                let nb = if upper { g[d] + 1 } else { g[d].wrapping_sub(1) };
                if nb >= shape[d] {
                    ok = false;
                    break;
                }
                neighbours.push((d, nb, upper));
            }
            if !ok {
                continue;
            }
            let f0 = f[index(&g)];
            if !f0.is_finite() {
                continue;
            }
            for &(d, nb, upper) in &neighbours {
                let mut h = g.clone();
                h[d] = nb;
                let fn_ = f[index(&h)];
                if !fn_.is_finite() {
                    ok = false;
                    break;
                }
                let step = axes[d][nb] - axes[d][g[d]];
                let slope = (fn_ - f0) / step;
                // moving across the cell: from lower corner upward (+h), from
                // upper corner downward (−h)
                let width = axes[d][base[d] + 1] - axes[d][base[d]];
                let delta = if upper { -width } else { width };
                // worst case over the segment, attained at an end
                bound += (slope * delta).min(0.0);
            }
            if ok {
                cell_best = cell_best.max(f0 + bound);
            }
        }
        lower = lower.min(cell_best);
    }
    lower
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lower_bound_of_a_sampled_parabola() {
        let xs: Vec<f64> = (0..5).map(|i| i as f64 * 0.5).collect();
        let f: Vec<f64> = xs.iter().map(|x| (x - 0.8) * (x - 0.8)).collect();
        let lb = grid_lower_bound(&[5], &[xs.clone()], &f);
        assert!(lb <= 0.0 + 1e-12);
        let sampled_min = f.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(sampled_min - lb < 0.5);
    }

    #[test]
    fn lower_bound_in_two_dimensions() {
        let xs: Vec<f64> = (0..4).map(|i| i as f64).collect();
        let mut f = Vec::new();
        for j in 0..4 {
            for i in 0..4 {
                let (x, y) = (xs[i], xs[j]);
                f.push((x - 1.3).powi(2) + 2.0 * (y - 2.2).powi(2) + 0.5 * (x - 1.3) * (y - 2.2));
            }
        }
        let lb = grid_lower_bound(&[4, 4], &[xs.clone(), xs.clone()], &f);
        assert!(lb <= 0.0);
        assert!(lb > -10.0);
    }

    #[test]
    fn two_points_give_no_bound() {
        assert_eq!(grid_lower_bound(&[2], &[vec![0.0, 1.0]], &[1.0, 2.0]), f64::NEG_INFINITY);
    }
}
