use super::*;

fn opts() -> SolverOptions {
    SolverOptions::default()
}

#[test]
fn rejects_inverted_bounds() {
    let mut m = Model::new();
    assert!(matches!(
        m.add_variable(VarKind::Continuous, Bounds::new(3.0, 1.0)),
        Err(ModelError::InvalidBounds { .. })
    ));
    let b = m.add_binary();
    assert_eq!(m.var_bounds(b), Bounds::UNIT);
}

#[test]
fn foreign_variable_is_rejected() {
    let mut a = Model::new();
    let mut b = Model::new();
    let x = a.add_continuous(Bounds::NONNEG);
    let _ = b.add_continuous(Bounds::NONNEG);
    assert!(matches!(
        b.add_constraint(Sense::Le, x.into(), 1.0, "x"),
        Err(ModelError::ForeignVariable { .. })
    ));
}

#[test]
fn empty_tag_is_rejected() {
    let mut m = Model::new();
    let x = m.add_continuous(Bounds::NONNEG);
    assert!(matches!(
        m.add_constraint(Sense::Le, x.into(), 1.0, ""),
        Err(ModelError::EmptyTag)
    ));
}

#[test]
fn min_x_above_three() {
    let mut m = Model::new();
    let x = m.add_continuous(Bounds::FREE);
    let c = m.add_constraint(Sense::Ge, x.into(), 3.0, "lb").unwrap();
    m.set_objective(ObjSense::Minimize, x.into()).unwrap();
    let r = m.solve(&opts()).unwrap();
    assert!(r.is_optimal());
    assert!((r.objective - 3.0).abs() < 1e-9);
    // raising the rhs by one raises the objective by one
    assert!((r.dual(c).unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn dual_sign_for_maximization() {
    let mut m = Model::new();
    let x = m.add_continuous(Bounds::NONNEG);
    let c = m.add_constraint(Sense::Le, x * 2.0, 4.0, "demo").unwrap();
    m.set_objective(ObjSense::Maximize, x.into()).unwrap();
    let r = m.solve(&opts()).unwrap();
    assert!((r.value(x) - 2.0).abs() < 1e-9);
    assert!((r.dual(c).unwrap() - 0.5).abs() < 1e-9);
}

#[test]
fn equality_ties_variables() {
    let mut m = Model::new();
    let x = m.add_continuous(Bounds::new(0.0, 10.0));
    let y = m.add_continuous(Bounds::new(0.0, 7.0));
    m.add_constraint(Sense::Eq, x - y, 0.0, "tie").unwrap();
    m.set_objective(ObjSense::Maximize, x.into()).unwrap();
    let r = m.solve(&opts()).unwrap();
    assert!((r.value(x) - 7.0).abs() < 1e-9);
    assert!((r.value(x) - r.value(y)).abs() < 1e-9);
}

#[test]
fn infeasible_pair() {
    let mut m = Model::new();
    let x = m.add_continuous(Bounds::FREE);
    m.add_constraint(Sense::Le, x.into(), 0.0, "a").unwrap();
    m.add_constraint(Sense::Ge, x.into(), 1.0, "b").unwrap();
    m.set_objective(ObjSense::Minimize, x.into()).unwrap();
    assert_eq!(m.solve(&opts()).unwrap().status, SolveStatus::Infeasible);
}

#[test]
fn unbounded_lp() {
    let mut m = Model::new();
    let x = m.add_continuous(Bounds::FREE);
    m.set_objective(ObjSense::Minimize, x.into()).unwrap();
    assert_eq!(m.solve(&opts()).unwrap().status, SolveStatus::Unbounded);
}

#[test]
fn binary_rounds_up() {
    let mut m = Model::new();
    let x = m.add_binary();
    m.add_constraint(Sense::Ge, x.into(), 0.5, "half").unwrap();
    m.set_objective(ObjSense::Minimize, x.into()).unwrap();
    let r = m.solve(&opts()).unwrap();
    assert!((r.objective - 1.0).abs() < 1e-9);
    assert!(!r.has_duals());
}

fn complementarity_model(slack_value: f64) -> (Model, VarRef, VarRef) {
    // maximize dual subject to dual ≤ 5 and 0 ≤ dual ⊥ (s) ≥ 0 with s fixed
    let mut m = Model::new();
    let d = m.add_continuous(Bounds::new(0.0, 5.0));
    let s = m.add_continuous(Bounds::fixed(slack_value));
    m.add_complementarity(d, s.into(), "pair").unwrap();
    m.set_objective(ObjSense::Maximize, d.into()).unwrap();
    (m, d, s)
}

#[test]
fn positive_slack_forces_zero_dual() {
    let (m, d, _) = complementarity_model(3.0);
    let r = m.solve(&opts()).unwrap();
    assert!(r.value(d).abs() < 1e-9);
    assert!(r.audit_clean());
}

#[test]
fn positive_dual_forces_zero_slack() {
    let mut m = Model::new();
    let d = m.add_continuous(Bounds::fixed(2.0));
    let s = m.add_continuous(Bounds::new(0.0, 9.0));
    m.add_complementarity(d, s.into(), "pair").unwrap();
    m.set_objective(ObjSense::Maximize, s.into()).unwrap();
    let r = m.solve(&opts()).unwrap();
    assert!(r.value(s).abs() < 1e-9);
}

#[test]
fn complementarity_adds_exactly_four_rows() {
    let (m, _, _) = complementarity_model(1.0);
    assert_eq!(m.num_constraints(), 4);
    assert_eq!(m.num_binaries(), 1);
}

#[test]
fn big_m_violation_is_flagged() {
    let mut m = Model::with_big_m(100.0);
    let d = m.add_continuous(Bounds::NONNEG);
    let s = m.add_continuous(Bounds::fixed(0.0));
    m.add_constraint(Sense::Ge, d.into(), 99.5, "needs large dual").unwrap();
    m.add_complementarity(d, s.into(), "pair").unwrap();
    m.set_objective(ObjSense::Minimize, d.into()).unwrap();
    let r = m.solve(&opts()).unwrap();
    assert!(r.is_optimal());
    assert!(!r.big_m_clean());
}

fn omega_model(z: f64, c: f64, mode: QuadraticMode) -> f64 {
    let mut m = Model::new();
    let cv = m.add_continuous(Bounds::new(0.0, 4.0));
    let om = m.add_continuous(Bounds::NONNEG);
    let zv = m.add_variable(VarKind::Binary, Bounds::fixed(z)).unwrap();
    m.add_constraint(Sense::Eq, cv.into(), c, "price").unwrap();
    m.add_convex_square_leq(cv, om, Some(zv), "omega").unwrap();
    m.set_objective(ObjSense::Minimize, om.into()).unwrap();
    let o = SolverOptions {
        quadratic_mode: mode,
        ..opts()
    };
    let r = m.solve(&o).unwrap();
    assert!(r.is_optimal());
    r.value(om)
}

#[test]
fn omega_tracks_square_when_selected() {
    let w = omega_model(1.0, 2.0, QuadraticMode::NativeConvexQc);
    assert!((w - 4.0).abs() < 1e-6, "{w}");
}

#[test]
fn omega_released_when_not_selected() {
    let w = omega_model(0.0, 2.0, QuadraticMode::NativeConvexQc);
    assert!(w.abs() < 1e-9);
}

#[test]
fn piecewise_underestimates_within_half_width_squared() {
    let w = omega_model(1.0, 2.0, QuadraticMode::Piecewise { breakpoints: 3 });
    assert!(w <= 4.0 + 1e-9 && w >= 4.0 - 1.0 - 1e-9, "{w}");
    // between breakpoints the gap is largest at the segment midpoint
    let w = omega_model(1.0, 1.0, QuadraticMode::Piecewise { breakpoints: 3 });
    assert!(w >= 1.0 - 1.0 - 1e-9 && w <= 1.0 + 1e-9, "{w}");
}

#[test]
fn piecewise_requires_bounded_domain() {
    let mut m = Model::new();
    let c = m.add_continuous(Bounds::NONNEG);
    let om = m.add_continuous(Bounds::NONNEG);
    m.add_convex_square_leq(c, om, None, "q").unwrap();
    m.set_objective(ObjSense::Minimize, om.into()).unwrap();
    let o = SolverOptions {
        quadratic_mode: QuadraticMode::Piecewise { breakpoints: 3 },
        ..opts()
    };
    assert!(matches!(
        m.solve(&o),
        Err(ModelError::UnboundedQuadraticDomain { .. })
    ));
}

#[test]
fn options_validation() {
    let mut o = opts();
    o.quadratic_mode = QuadraticMode::Piecewise { breakpoints: 1 };
    assert!(o.validate().is_err());
    let o = SolverOptions {
        big_m: 0.0,
        ..opts()
    };
    assert!(o.validate().is_err());
}

#[test]
fn mps_round_trip_through_solution_parser() {
    let mut lp = LinearProblem {
        maximize: false,
        offset: 0.0,
        cost: vec![1.0, 2.0],
        col_lo: vec![0.0, 0.0],
        col_hi: vec![f64::INFINITY, 1.0],
        integer: vec![false, true],
        ..Default::default()
    };
    lp.push_row([(0, 1.0), (1, 1.0)], 1.5, f64::INFINITY);
    lp.push_row([(0, 1.0)], f64::NEG_INFINITY, 1.0);
    let text = mps::write_mps(&lp);
    assert!(text.contains("'INTORG'"));
    assert!(text.contains(" G R0"));
    assert!(text.contains(" L R1"));

    let sol = "Model status\nOptimal\n\n# Primal solution values\nFeasible\nObjective 3\n# Columns 2\nC0 1\nC1 1\n# Rows 2\nR0 2\nR1 1\n\n# Dual solution values\nNone\n";
    let raw = mps::parse_solution(sol, 2, 2).unwrap();
    assert_eq!(raw.status, RawStatus::Optimal);
    assert_eq!(raw.col_value, vec![1.0, 1.0]);
    assert_eq!(raw.objective, 3.0);

    let cbc = "Optimal - objective value 3.00000000\n      0 C0  1  1\n      1 C1  1  2\n";
    let raw = mps::parse_solution(cbc, 2, 2).unwrap();
    assert_eq!(raw.col_value, vec![1.0, 1.0]);

    let inf = mps::parse_solution("Model status\nInfeasible\n", 2, 2).unwrap();
    assert_eq!(inf.status, RawStatus::Infeasible);
}
