use std::path::Path;

use criterion::{criterion_group, criterion_main, Criterion};

use ddu_vpp::ccg::{solve_subproblem, AdversaryOptions};
use ddu_vpp::network::NetworkCase;
use ddu_vpp::oracle::{first_stage_for_prices, instances, oracle_worst_case, OracleOptions};
use ddu_vpp::parallel::Parallelism;
use ddu_vpp::uncertainty::{BudgetParams, ElasticityTable};

fn bundled() -> (NetworkCase, ElasticityTable) {
    let d = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data");
    (
        NetworkCase::load(&d.join("ieee33-t24.json")).unwrap(),
        ElasticityTable::load_csv(&d.join("ieee33-t24_elasticity.csv")).unwrap(),
    )
}

// per-period subproblems on the 33-bus day
fn subproblem(c: &mut Criterion) {
    let (case, table) = bundled();
    let x = first_stage_for_prices(&case, &case.prices.c_ref, &OracleOptions::default())
        .unwrap()
        .unwrap();
    let budgets = BudgetParams::slack(32, case.periods);
    let mut g = c.benchmark_group("subproblem_ieee33");
    g.sample_size(10);
    for (name, mode) in [("sequential", Parallelism::Sequential), ("parallel", Parallelism::Parallel)] {
        let mut opts = AdversaryOptions::new(budgets);
        opts.parallelism = mode;
        g.bench_function(name, |b| b.iter(|| solve_subproblem(&case, &table, &x, None, &opts).unwrap()));
    }
    g.finish();
}

// vertex enumeration on a micro instance
fn enumeration(c: &mut Criterion) {
    let (case, table) = instances::micro2();
    let x = first_stage_for_prices(&case, &[0.08, 0.15], &OracleOptions::default())
        .unwrap()
        .unwrap();
    let budgets = BudgetParams::slack(2, 2);
    let mut g = c.benchmark_group("oracle_micro2");
    g.sample_size(10);
    for (name, mode) in [("sequential", Parallelism::Sequential), ("parallel", Parallelism::Parallel)] {
        let opts = OracleOptions {
            parallelism: mode,
            ..OracleOptions::default()
        };
        g.bench_function(name, |b| b.iter(|| oracle_worst_case(&case, &table, &x, None, budgets, &opts).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, subproblem, enumeration);
criterion_main!(benches);
