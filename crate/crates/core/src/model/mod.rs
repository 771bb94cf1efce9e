//! Linear / mixed-integer model builder with pluggable solver backends.
//!
//! Every other module assembles its optimization problems through [`Model`].
//! Complementarity conditions are linearized with a Big-M disjunction and
//! convex constraints of the form `x² ≤ expr` are handled either natively
//! (outer-approximation cuts refined until feasible) or by a fixed set of
//! tangent planes. Every optimal solve is re-checked against the registered
//! constraints by an evaluation pass that does not trust the backend.

mod backend;
mod expr;
mod highs;
pub mod mps;

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use backend::{BackendChoice, LinearProblem, RawSolution, RawStatus, SolverBackend};
pub use expr::{Bounds, LinExpr, VarKind, VarRef, ZERO_COEFF};
pub use highs::HighsBackend;

static NEXT_MODEL_ID: AtomicU64 = AtomicU64::new(1);

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid bounds [{lo}, {hi}]")]
    InvalidBounds { lo: f64, hi: f64 },
    #[error("variable {index} does not belong to this model")]
    ForeignVariable { index: usize },
    #[error("constraint tag must not be empty")]
    EmptyTag,
    #[error("non-finite coefficient in constraint `{tag}`")]
    NonFinite { tag: String },
    #[error("invalid solver options: {0}")]
    InvalidOptions(String),
    #[error("variable in quadratic constraint `{tag}` has an unbounded domain")]
    UnboundedQuadraticDomain { tag: String },
    #[error("solver backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("solver backend failure: {0}")]
    Backend(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse solution file: {0}")]
    SolutionParse(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ObjSense {
    Minimize,
    Maximize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConstraintRef {
    model: u64,
    index: u32,
}

impl ConstraintRef {
    pub fn index(self) -> usize {
        self.index as usize
    }
}

#[derive(Clone, Debug)]
pub struct VarInfo {
    pub kind: VarKind,
    pub bounds: Bounds,
}

#[derive(Clone, Debug)]
pub struct Constraint {
    pub sense: Sense,
    pub expr: LinExpr,
    pub rhs: f64,
    pub tag: String,
}

/// `var² ≤ rhs`, a convex quadratic row.
#[derive(Clone, Debug)]
pub struct SquareLeq {
    pub var: VarRef,
    pub rhs: LinExpr,
    pub tag: String,
}

/// A linearized complementarity pair `0 ≤ dual ⊥ slack ≥ 0`.
#[derive(Clone, Debug)]
pub struct Complementarity {
    pub dual: VarRef,
    pub slack: LinExpr,
    pub binary: VarRef,
    pub dual_m: f64,
    pub slack_m: f64,
    /// `dual_m` is a proven bound on the dual rather than a guess.
    pub dual_bound_proven: bool,
    /// `slack_m` is a proven bound on the slack rather than the model's M.
    pub slack_bound_proven: bool,
    pub tag: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum QuadraticMode {
    NativeConvexQc,
    Piecewise { breakpoints: usize },
}

#[derive(Clone, Debug)]
pub struct SolverOptions {
    pub mip_gap: f64,
    pub time_limit: Option<f64>,
    pub big_m: f64,
    pub feas_tol: f64,
    /// Integrality tolerance. Binaries gate Big-M products, so the usual
    /// 1e-6 lets `M·b` leak into the objective.
    pub mip_feas_tol: f64,
    pub quadratic_mode: QuadraticMode,
    pub backend: BackendChoice,
    /// Fix integers after a MILP solve and re-solve the LP to clean up
    /// integrality residue.
    pub polish: bool,
    pub max_cut_rounds: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            mip_gap: 1e-6,
            time_limit: None,
            big_m: 1e4,
            feas_tol: 1e-7,
            mip_feas_tol: 1e-9,
            quadratic_mode: QuadraticMode::NativeConvexQc,
            backend: BackendChoice::Highs,
            polish: true,
            max_cut_rounds: 200,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.big_m > 0.0) {
            return Err(ModelError::InvalidOptions("big_M must be positive".into()));
        }
        if !(self.mip_gap >= 0.0) {
            return Err(ModelError::InvalidOptions("mip_gap must be >= 0".into()));
        }
        if !(self.mip_feas_tol > 0.0) {
            return Err(ModelError::InvalidOptions("mip_feas_tol must be positive".into()));
        }
        if !(self.feas_tol > 0.0) {
            return Err(ModelError::InvalidOptions("feas_tol must be positive".into()));
        }
        if let QuadraticMode::Piecewise { breakpoints } = self.quadratic_mode {
            if breakpoints < 2 {
                return Err(ModelError::InvalidOptions(
                    "piecewise mode needs at least 2 breakpoints".into(),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    Limit,
}

/// Problems found by the post-solve audit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Diagnostic {
    ConstraintViolation { tag: String, residual: f64 },
    BoundViolation { index: usize, residual: f64 },
    QuadraticViolation { tag: String, excess: f64 },
    BigMViolation { tag: String, dual: f64, slack: f64 },
    ComplementarityViolation { tag: String, product: f64 },
}

impl Diagnostic {
    pub fn is_big_m(&self) -> bool {
        matches!(self, Diagnostic::BigMViolation { .. })
    }
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub objective: f64,
    primal: Vec<f64>,
    dual: Option<Vec<f64>>,
    pub gap: f64,
    pub wall_time: f64,
    pub diagnostics: Vec<Diagnostic>,
    pub cut_rounds: usize,
}

impl SolveResult {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    pub fn value(&self, var: VarRef) -> f64 {
        self.primal[var.index()]
    }

    pub fn eval(&self, expr: &LinExpr) -> f64 {
        expr.eval(&self.primal)
    }

    pub fn primal(&self) -> &[f64] {
        &self.primal
    }

    /// Sensitivity of the optimal objective to the constraint's right-hand
    /// side. Only available for pure LP solves.
    pub fn dual(&self, c: ConstraintRef) -> Option<f64> {
        self.dual.as_ref().map(|d| d[c.index()])
    }

    pub fn has_duals(&self) -> bool {
        self.dual.is_some()
    }

    pub fn big_m_clean(&self) -> bool {
        !self.diagnostics.iter().any(Diagnostic::is_big_m)
    }

    /// True when the audit found no violated constraint of any kind.
    pub fn audit_clean(&self) -> bool {
        self.diagnostics.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct Model {
    id: u64,
    big_m: f64,
    vars: Vec<VarInfo>,
    cons: Vec<Constraint>,
    squares: Vec<SquareLeq>,
    pairs: Vec<Complementarity>,
    objective: LinExpr,
    obj_sense: ObjSense,
}

impl Default for Model {
    fn default() -> Self {
        Model::new()
    }
}

impl Model {
    pub fn new() -> Self {
        Model {
            id: NEXT_MODEL_ID.fetch_add(1, Ordering::Relaxed),
            big_m: SolverOptions::default().big_m,
            vars: Vec::new(),
            cons: Vec::new(),
            squares: Vec::new(),
            pairs: Vec::new(),
            objective: LinExpr::new(),
            obj_sense: ObjSense::Minimize,
        }
    }

    pub fn with_big_m(big_m: f64) -> Self {
        let mut m = Model::new();
        m.big_m = big_m;
        m
    }

    pub fn big_m(&self) -> f64 {
        self.big_m
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.cons.len()
    }

    pub fn num_binaries(&self) -> usize {
        self.vars
            .iter()
            .filter(|v| v.kind == VarKind::Binary)
            .count()
    }

    pub fn vars(&self) -> &[VarInfo] {
        &self.vars
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.cons
    }

    pub fn constraint(&self, c: ConstraintRef) -> &Constraint {
        &self.cons[c.index()]
    }

    pub fn square_constraints(&self) -> &[SquareLeq] {
        &self.squares
    }

    pub fn complementarities(&self) -> &[Complementarity] {
        &self.pairs
    }

    pub fn objective(&self) -> (&LinExpr, ObjSense) {
        (&self.objective, self.obj_sense)
    }

    pub fn var_bounds(&self, v: VarRef) -> Bounds {
        self.vars[v.index()].bounds
    }

    pub fn add_variable(&mut self, kind: VarKind, bounds: Bounds) -> Result<VarRef, ModelError> {
        let Bounds { lo, hi } = bounds;
        if lo.is_nan() || hi.is_nan() || lo > hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY
        {
            return Err(ModelError::InvalidBounds { lo, hi });
        }
        if kind == VarKind::Binary && (lo < 0.0 || hi > 1.0) {
            return Err(ModelError::InvalidBounds { lo, hi });
        }
        let index = self.vars.len() as u32;
        self.vars.push(VarInfo { kind, bounds });
        Ok(VarRef {
            model: self.id,
            index,
        })
    }

    pub fn add_binary(&mut self) -> VarRef {
        self.add_variable(VarKind::Binary, Bounds::UNIT)
            .expect("unit bounds are valid")
    }

    /// Continuous variable; panics on invalid bounds, for internal builders
    /// whose bounds come from validated data.
    pub fn add_continuous(&mut self, bounds: Bounds) -> VarRef {
        self.add_variable(VarKind::Continuous, bounds)
            .unwrap_or_else(|e| panic!("internal model builder: {e}"))
    }

    fn check_expr(&self, expr: &LinExpr, tag: &str) -> Result<(), ModelError> {
        for (v, c) in expr.terms() {
            if v.model != self.id || v.index() >= self.vars.len() {
                return Err(ModelError::ForeignVariable { index: v.index() });
            }
            if !c.is_finite() {
                return Err(ModelError::NonFinite { tag: tag.into() });
            }
        }
        if !expr.constant_part().is_finite() {
            return Err(ModelError::NonFinite { tag: tag.into() });
        }
        Ok(())
    }

    /// Registers `expr (sense) rhs`. The expression's constant part is moved
    /// to the right-hand side.
    pub fn add_constraint(
        &mut self,
        sense: Sense,
        expr: LinExpr,
        rhs: f64,
        tag: impl Into<String>,
    ) -> Result<ConstraintRef, ModelError> {
        let tag = tag.into();
        if tag.is_empty() {
            return Err(ModelError::EmptyTag);
        }
        self.check_expr(&expr, &tag)?;
        if !rhs.is_finite() {
            return Err(ModelError::NonFinite { tag });
        }
        let mut expr = expr.canonical();
        let rhs = rhs - expr.constant;
        expr.constant = 0.0;
        let index = self.cons.len() as u32;
        self.cons.push(Constraint {
            sense,
            expr,
            rhs,
            tag,
        });
        Ok(ConstraintRef {
            model: self.id,
            index,
        })
    }

    /// Big-M complementarity `0 ≤ dual ⊥ slack ≥ 0` with the model's M on
    /// both sides.
    pub fn add_complementarity(
        &mut self,
        dual: VarRef,
        slack: LinExpr,
        tag: impl Into<String>,
    ) -> Result<VarRef, ModelError> {
        let m = self.big_m;
        self.push_complementarity(dual, slack, (m, false), m, false, tag.into())
    }

    /// Like [`add_complementarity`](Self::add_complementarity) with separate
    /// constants for the dual and slack sides. `slack_m` must be a proven
    /// bound on the slack; `dual_m` is one when `dual_proven` is set, and
    /// otherwise a guess that the post-solve audit watches.
    pub fn add_complementarity_bounded(
        &mut self,
        dual: VarRef,
        slack: LinExpr,
        dual_m: f64,
        dual_proven: bool,
        slack_m: f64,
        tag: impl Into<String>,
    ) -> Result<VarRef, ModelError> {
        self.push_complementarity(dual, slack, (dual_m, dual_proven), slack_m, true, tag.into())
    }

    fn push_complementarity(
        &mut self,
        dual: VarRef,
        slack: LinExpr,
        (dual_m, dual_bound_proven): (f64, bool),
        slack_m: f64,
        slack_bound_proven: bool,
        tag: String,
    ) -> Result<VarRef, ModelError> {
        if tag.is_empty() {
            return Err(ModelError::EmptyTag);
        }
        if !(dual_m > 0.0 && slack_m > 0.0) {
            return Err(ModelError::InvalidOptions("big_M must be positive".into()));
        }
        self.check_expr(&LinExpr::from(dual), &tag)?;
        self.check_expr(&slack, &tag)?;
        let b = self.add_binary();
        self.add_constraint(
            Sense::Le,
            LinExpr::from(dual) - b * dual_m,
            0.0,
            format!("{tag}:dual<=Mb"),
        )?;
        self.add_constraint(
            Sense::Le,
            slack.clone() + b * slack_m,
            slack_m,
            format!("{tag}:slack<=M(1-b)"),
        )?;
        self.add_constraint(Sense::Ge, dual.into(), 0.0, format!("{tag}:dual>=0"))?;
        self.add_constraint(Sense::Ge, slack.clone(), 0.0, format!("{tag}:slack>=0"))?;
        self.pairs.push(Complementarity {
            dual,
            slack,
            binary: b,
            dual_m,
            slack_m,
            dual_bound_proven,
            slack_bound_proven,
            tag,
        });
        Ok(b)
    }

    /// `c² ≤ omega + M(1 − relax)`; without a relax binary simply `c² ≤ omega`.
    ///
    /// M is the model's big-M, tightened to `max(c_lo², c_hi²)` when `c` is
    /// bounded since that already makes the row slack at `relax = 0`.
    pub fn add_convex_square_leq(
        &mut self,
        c: VarRef,
        omega: VarRef,
        relax: Option<VarRef>,
        tag: impl Into<String>,
    ) -> Result<(), ModelError> {
        let tag = tag.into();
        if tag.is_empty() {
            return Err(ModelError::EmptyTag);
        }
        let mut rhs = LinExpr::from(omega);
        self.check_expr(&rhs, &tag)?;
        self.check_expr(&LinExpr::from(c), &tag)?;
        if let Some(z) = relax {
            self.check_expr(&LinExpr::from(z), &tag)?;
            let b = self.var_bounds(c);
            let m = if b.is_finite() {
                self.big_m.min(b.lo.powi(2).max(b.hi.powi(2)))
            } else {
                self.big_m
            };
            rhs.add_constant(m).add_term(z, -m);
        }
        self.squares.push(SquareLeq { var: c, rhs, tag });
        Ok(())
    }

    pub fn set_objective(&mut self, sense: ObjSense, expr: LinExpr) -> Result<(), ModelError> {
        self.check_expr(&expr, "objective")?;
        self.objective = expr.canonical();
        self.obj_sense = sense;
        Ok(())
    }

    fn has_integers(&self) -> bool {
        self.vars.iter().any(|v| v.kind == VarKind::Binary)
    }

    /// Linear rows for the registered constraints plus tangent cuts
    /// `2a·x − a² ≤ rhs` for the quadratic rows.
    fn linearize(&self, cuts: &[(usize, f64)], fixed_integers: Option<&[f64]>) -> LinearProblem {
        let mut lp = LinearProblem::default();
        lp.maximize = self.obj_sense == ObjSense::Maximize;
        lp.offset = self.objective.constant;
        lp.cost = vec![0.0; self.vars.len()];
        for (v, c) in self.objective.terms() {
            lp.cost[v.index()] += c;
        }
        for (j, info) in self.vars.iter().enumerate() {
            let (mut lo, mut hi) = (info.bounds.lo, info.bounds.hi);
            let integer = info.kind == VarKind::Binary;
            if integer {
                if let Some(fixed) = fixed_integers {
                    let r = fixed[j].round().clamp(lo, hi);
                    lo = r;
                    hi = r;
                }
            }
            lp.col_lo.push(lo);
            lp.col_hi.push(hi);
            lp.integer.push(integer && fixed_integers.is_none());
        }
        for c in &self.cons {
            let (lo, hi) = match c.sense {
                Sense::Le => (f64::NEG_INFINITY, c.rhs),
                Sense::Ge => (c.rhs, f64::INFINITY),
                Sense::Eq => (c.rhs, c.rhs),
            };
            lp.push_row(
                c.expr.terms().iter().map(|(v, a)| (v.index(), *a)),
                lo,
                hi,
            );
        }
        for &(q, a) in cuts {
            let sq = &self.squares[q];
            // 2a·x − rhs_terms ≤ a² + rhs_const
            let mut e = LinExpr::term(sq.var, 2.0 * a);
            e.add_scaled(&sq.rhs, -1.0);
            let e = e.canonical();
            lp.push_row(
                e.terms().iter().map(|(v, c)| (v.index(), *c)),
                f64::NEG_INFINITY,
                a * a + sq.rhs.constant,
            );
        }
        lp
    }

    fn initial_cuts(&self, mode: QuadraticMode) -> Result<Vec<(usize, f64)>, ModelError> {
        let mut cuts = Vec::new();
        for (q, sq) in self.squares.iter().enumerate() {
            let b = self.var_bounds(sq.var);
            match mode {
                QuadraticMode::Piecewise { breakpoints } => {
                    if !b.is_finite() {
                        return Err(ModelError::UnboundedQuadraticDomain {
                            tag: sq.tag.clone(),
                        });
                    }
                    for k in 0..breakpoints {
                        let a = b.lo + (b.hi - b.lo) * k as f64 / (breakpoints - 1) as f64;
                        cuts.push((q, a));
                    }
                }
                QuadraticMode::NativeConvexQc => {
                    if b.is_finite() {
                        cuts.push((q, b.lo));
                        cuts.push((q, 0.5 * (b.lo + b.hi)));
                        cuts.push((q, b.hi));
                    } else {
                        cuts.push((q, 0.0));
                    }
                }
            }
        }
        Ok(cuts)
    }

    pub fn solve(&self, options: &SolverOptions) -> Result<SolveResult, ModelError> {
        options.validate()?;
        let backend = options.backend.instantiate()?;
        self.solve_with(backend.as_ref(), options)
    }

    pub fn solve_with(
        &self,
        backend: &dyn SolverBackend,
        options: &SolverOptions,
    ) -> Result<SolveResult, ModelError> {
        options.validate()?;
        let start = Instant::now();
        let mut cuts = self.initial_cuts(options.quadratic_mode)?;
        let mip = self.has_integers();
        let mut rounds = 0usize;
        let (raw, primal) = loop {
            rounds += 1;
            let lp = self.linearize(&cuts, None);
            let raw = backend.solve(&lp, options)?;
            if raw.status != RawStatus::Optimal {
                let status = match raw.status {
                    RawStatus::Infeasible => SolveStatus::Infeasible,
                    RawStatus::Unbounded => SolveStatus::Unbounded,
                    _ => SolveStatus::Limit,
                };
                return Ok(SolveResult {
                    status,
                    objective: f64::NAN,
                    primal: Vec::new(),
                    dual: None,
                    gap: f64::NAN,
                    wall_time: start.elapsed().as_secs_f64(),
                    diagnostics: Vec::new(),
                    cut_rounds: rounds,
                });
            }
            let mut primal = raw.col_value.clone();
            if mip && options.polish {
                let fixed = self.linearize(&cuts, Some(&primal));
                if let Ok(p) = backend.solve(&fixed, options) {
                    if p.status == RawStatus::Optimal {
                        primal = p.col_value;
                    }
                }
            }
            if options.quadratic_mode != QuadraticMode::NativeConvexQc
                || rounds >= options.max_cut_rounds
            {
                break (raw, primal);
            }
            let mut added = false;
            for (q, sq) in self.squares.iter().enumerate() {
                let x = primal[sq.var.index()];
                let excess = x * x - sq.rhs.eval(&primal);
                if excess > options.feas_tol * (1.0 + x * x) {
                    cuts.push((q, x));
                    added = true;
                }
            }
            if !added {
                break (raw, primal);
            }
        };

        let objective = self.objective.eval(&primal);
        let dual = if !mip && self.squares.is_empty() {
            raw.row_dual.clone().map(|mut d| {
                d.truncate(self.cons.len());
                d
            })
        } else {
            None
        };
        let mut result = SolveResult {
            status: SolveStatus::Optimal,
            objective,
            primal,
            dual,
            gap: raw.mip_gap,
            wall_time: 0.0,
            diagnostics: Vec::new(),
            cut_rounds: rounds,
        };
        result.diagnostics = self.audit(&result.primal, options);
        for d in &result.diagnostics {
            log::warn!("post-solve audit: {d:?}");
        }
        result.wall_time = start.elapsed().as_secs_f64();
        Ok(result)
    }

    /// Independent feasibility pass over a primal point: constraint residuals,
    /// bounds, quadratic rows, complementarity products and the Big-M margin.
    pub fn audit(&self, primal: &[f64], options: &SolverOptions) -> Vec<Diagnostic> {
        let tol = options.feas_tol;
        let mut out = Vec::new();
        for c in &self.cons {
            let lhs = c.expr.eval(primal);
            let scale = 1.0 + c.rhs.abs().max(c.expr.magnitude(primal));
            let residual = match c.sense {
                Sense::Le => lhs - c.rhs,
                Sense::Ge => c.rhs - lhs,
                Sense::Eq => (lhs - c.rhs).abs(),
            };
            if residual > 10.0 * tol * scale {
                out.push(Diagnostic::ConstraintViolation {
                    tag: c.tag.clone(),
                    residual,
                });
            }
        }
        for (j, info) in self.vars.iter().enumerate() {
            let x = primal[j];
            let residual = (info.bounds.lo - x).max(x - info.bounds.hi);
            if residual > 10.0 * tol * (1.0 + x.abs()) {
                out.push(Diagnostic::BoundViolation { index: j, residual });
            }
        }
        for sq in &self.squares {
            let x = primal[sq.var.index()];
            let excess = x * x - sq.rhs.eval(primal);
            if excess > 10.0 * tol * (1.0 + x * x) {
                out.push(Diagnostic::QuadraticViolation {
                    tag: sq.tag.clone(),
                    excess,
                });
            }
        }
        for p in &self.pairs {
            let dual = primal[p.dual.index()];
            let slack = p.slack.eval(primal);
            // a proven bound may be attained; only a guessed M is suspect
            let dual_capped = !p.dual_bound_proven && dual.abs() >= 0.99 * p.dual_m;
            let slack_capped = !p.slack_bound_proven && slack.abs() >= 0.99 * p.slack_m;
            if dual_capped || slack_capped {
                out.push(Diagnostic::BigMViolation {
                    tag: p.tag.clone(),
                    dual,
                    slack,
                });
            }
            let product = (dual * slack).abs();
            if product > tol * p.dual_m.max(p.slack_m) {
                out.push(Diagnostic::ComplementarityViolation {
                    tag: p.tag.clone(),
                    product,
                });
            }
        }
        out
    }
}

#[cfg(test)]
mod tests;
