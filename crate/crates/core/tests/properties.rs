use proptest::prelude::*;

use ddu_vpp::ccg::{evaluate_recourse, solve_subproblem, AdversaryOptions};
use ddu_vpp::network::polygon_halfplanes;
use ddu_vpp::oracle::{budget_vertices, first_stage_for_prices, instances, OracleOptions};
use ddu_vpp::uncertainty::{interval_boundaries, realized_demand, BudgetParams, ElasticityTable};

fn inside(sides: usize, s_max: f64, p: f64, q: f64) -> bool {
    polygon_halfplanes(sides, s_max)
        .unwrap()
        .iter()
        .all(|h| h.cos * p + h.sin * q <= h.rhs + 1e-9 * s_max)
}

proptest! {
    #[test]
    fn polygon_points_lie_in_the_disk(sides in 3usize..80, s in 1.0f64..1e4, p in -1.2f64..1.2, q in -1.2f64..1.2) {
        let (p, q) = (p * s, q * s);
        if inside(sides, s, p, q) {
            prop_assert!(p * p + q * q <= s * s * (1.0 + 1e-9));
        }
    }

    #[test]
    fn inscribed_disk_lies_in_the_polygon(sides in 3usize..80, s in 1.0f64..1e4, r in 0.0f64..1.0, a in 0.0f64..std::f64::consts::TAU) {
        let radius = r * (std::f64::consts::PI / sides as f64).cos() * s;
        prop_assert!(inside(sides, s, radius * a.cos(), radius * a.sin()));
    }

    #[test]
    fn demand_map_fixed_points(load in 0.0f64..500.0, xi in -1.0f64..0.0, c_ref in 0.01f64..1.0) {
        prop_assert_eq!(realized_demand(load, 0.0, 0.37, c_ref), load);
        prop_assert!((realized_demand(load, xi, c_ref, c_ref) - load).abs() <= 1e-12 * load.max(1.0));
    }

    #[test]
    fn budget_vertices_respect_their_budgets(nodes in 1usize..4, periods in 1usize..3, gt in 0u32..3, gs in 0u32..4) {
        let entries: Vec<(usize, usize)> = (0..nodes).flat_map(|i| (0..periods).map(move |t| (i, t))).collect();
        let b = BudgetParams { gamma_t: gt as f64, gamma_s: gs as f64 };
        let points = budget_vertices(&entries, b);
        prop_assert!(!points.is_empty());
        for p in &points {
            for t in 0..periods {
                let used: f64 = entries.iter().zip(p).filter(|((_, tt), _)| *tt == t).map(|(_, v)| (2.0 * v - 1.0).abs()).sum();
                prop_assert!(used <= b.gamma_s + 1e-12);
            }
            for i in 0..nodes {
                let used: f64 = entries.iter().zip(p).filter(|((ii, _), _)| *ii == i).map(|(_, v)| (2.0 * v - 1.0).abs()).sum();
                prop_assert!(used <= b.gamma_t + 1e-12);
            }
        }
    }

    #[test]
    fn vertex_coordinates_round_trip(v0 in 0.0f64..1.0, v1 in 0.0f64..1.0, k in 0usize..5) {
        let cuts = interval_boundaries(5).unwrap();
        let intervals: Vec<(f64, f64)> = cuts.windows(2).map(|w| (w[0], w[1])).collect();
        let table = ElasticityTable::uniform(2, 1, &intervals, -0.8, -0.1).unwrap();
        let v = vec![vec![v0], vec![v1]];
        let xi = table.vertex_to_scenario(&[k], &v);
        let back = table.scenario_to_vertex(&[k], &xi, 1e-9).unwrap();
        prop_assert!((back[0][0] - v0).abs() < 1e-9 && (back[1][0] - v1).abs() < 1e-9);
    }

    #[test]
    fn lookup_returns_a_containing_interval(ratio in 0.0f64..16.0) {
        let cuts = interval_boundaries(5).unwrap();
        let intervals: Vec<(f64, f64)> = cuts.windows(2).map(|w| (w[0], w[1])).collect();
        let table = ElasticityTable::uniform(1, 1, &intervals, -0.5, -0.1).unwrap();
        let k = table.interval_lookup(0, ratio).unwrap();
        prop_assert!(intervals[k].0 <= ratio && ratio <= intervals[k].1);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// No sampled member of the set costs more than the adversary's value.
    #[test]
    fn subproblem_dominates_sampled_scenarios(seed in 0u64..1000, c in 0.05f64..0.3, w in proptest::collection::vec(0.0f64..1.0, 8)) {
        let (case, table) = instances::random_micro(seed);
        let opts = OracleOptions::default();
        let x = first_stage_for_prices(&case, &vec![c; case.periods], &opts).unwrap().unwrap();
        let budgets = BudgetParams { gamma_t: 1.0, gamma_s: 1.0 };
        let sp = solve_subproblem(&case, &table, &x, None, &AdversaryOptions::new(budgets)).unwrap();
        // a point of the budgeted set: scale deviations from the midpoint so
        // that every row and column budget holds
        let n = case.num_nodes();
        let mut v = vec![vec![0.5; case.periods]; n];
        let per = 1.0 / (n.max(case.periods) as f64);
        let mut idx = 0;
        for row in v.iter_mut().skip(1) {
            for e in row.iter_mut() {
                *e = 0.5 + (w[idx % w.len()] - 0.5) * per;
                idx += 1;
            }
        }
        let z: Vec<usize> = (0..case.periods).map(|t| table.interval_lookup(t, c / case.prices.c_ref[t]).unwrap()).collect();
        let xi = table.vertex_to_scenario(&z, &v);
        let val = evaluate_recourse(&case, &x, &xi, 16, false, &opts.solver).unwrap().unwrap().value;
        prop_assert!(val <= sp.value + 1e-6 * (1.0 + sp.value.abs()), "{val} > {}", sp.value);
    }
}
