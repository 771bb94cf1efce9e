use ddu_vpp::ccg::{self, solve_subproblem, AdversaryOptions, CcgConfig};
use ddu_vpp::oracle::{first_stage_for_prices, instances, oracle_full, oracle_worst_case, OracleOptions};
use ddu_vpp::uncertainty::BudgetParams;

#[test]
fn micro1_ccg_matches_grid_optimum() {
    let (case, table) = instances::micro1();
    let report = ccg::run(&CcgConfig::default(), &case, &table).unwrap();
    let full = oracle_full(&case, &table, 9, BudgetParams::slack(1, 1), &OracleOptions::default()).unwrap();
    eprintln!("ccg ub {} lb {} status {:?} iters {} c {:?}", report.upper_bound, report.lower_bound, report.status, report.iterations, report.incumbent.as_ref().map(|x| x.c_tou.clone()));
    eprintln!("oracle {} err {} c {:?}", full.value, full.grid_error, full.arg_c);
    assert!(report.upper_bound >= full.value - full.grid_error - 1.0);
    assert!(report.upper_bound <= full.value + 1.0);
}

#[test]
fn subproblem_matches_enumeration_on_random_instances() {
    for seed in 0..6 {
        let (case, table) = instances::random_micro(seed);
        let opts = OracleOptions::default();
        let c: Vec<f64> = (0..case.periods).map(|t| 0.06 + 0.07 * t as f64 + 0.01 * seed as f64).collect();
        let x = first_stage_for_prices(&case, &c, &opts).unwrap().unwrap();
        let nodes = case.num_nodes() - 1;
        for budgets in [BudgetParams::slack(nodes, case.periods), BudgetParams { gamma_t: 1.0, gamma_s: 1.0 }] {
            let brute = oracle_worst_case(&case, &table, &x, None, budgets, &opts).unwrap();
            let sp = solve_subproblem(&case, &table, &x, None, &AdversaryOptions::new(budgets)).unwrap();
            eprintln!("seed {seed} {:?}: brute {} sp {}", budgets, brute.value, sp.value);
            assert!((brute.value - sp.value).abs() <= 1e-6 * (1.0 + brute.value.abs()), "seed {seed}");
        }
    }
}
