//! Small instances that the brute-force oracles can solve exactly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::network::{LineData, NetworkCase, NodeData, PriceParams};
use crate::uncertainty::ElasticityTable;

fn node(id: usize, load: Vec<f64>) -> NodeData {
    NodeData {
        id,
        kappa: 0.2,
        load,
        p_min: 0.0,
        p_max: 0.0,
        q_min: 0.0,
        q_max: 0.0,
        v_min: 0.9,
        v_max: 1.1,
        gen_cost: 0.0,
    }
}

fn prices(periods: usize, c_ref: f64, tou: (f64, f64)) -> PriceParams {
    PriceParams {
        rho_da: vec![0.05; periods],
        rho_up: vec![0.08; periods],
        rho_dn: vec![0.02; periods],
        c_ref: vec![c_ref; periods],
        tou_min: tou.0,
        tou_max: tou.1,
    }
}

/// Feeder of `loads.len()` load nodes in a chain below the root.
pub fn chain_case(name: &str, loads: &[Vec<f64>], c_ref: f64, tou: (f64, f64)) -> NetworkCase {
    let periods = loads[0].len();
    let mut nodes = vec![node(0, vec![0.0; periods])];
    let mut lines = Vec::new();
    for (j, l) in loads.iter().enumerate() {
        nodes.push(node(j + 1, l.clone()));
        lines.push(LineData {
            from: j,
            to: j + 1,
            r: 0.01,
            x: 0.01,
            s_max: 1000.0,
        });
    }
    NetworkCase {
        name: name.into(),
        nodes,
        lines,
        prices: prices(periods, c_ref, tou),
        periods,
        base_kva: 1000.0,
        root_bounded: false,
    }
}

/// One load node of 100 kW, one period, two elasticity intervals split at
/// the reference price.
pub fn micro1() -> (NetworkCase, ElasticityTable) {
    let case = chain_case("micro-1", &[vec![100.0]], 0.1, (0.05, 0.3));
    let table = ElasticityTable::new(
        vec![vec![(0.0, 1.0), (1.0, 4.0)]],
        vec![vec![vec![-0.6, -0.3]]; 2],
        vec![vec![vec![-0.2, -0.1]]; 2],
    );
    (case, table.expect("micro-1 table is valid"))
}

/// Two load nodes, two periods, two intervals.
pub fn micro2() -> (NetworkCase, ElasticityTable) {
    let case = chain_case("micro-2", &[vec![80.0, 120.0], vec![60.0, 40.0]], 0.1, (0.05, 0.3));
    let intervals = [(0.0, 1.0), (1.0, 4.0)];
    let mut table = ElasticityTable::uniform(3, 2, &intervals, -0.5, -0.1).expect("valid");
    table.xi_lo[2] = vec![vec![-0.3, -0.6]; 2];
    table.xi_hi[2] = vec![vec![-0.05, -0.2]; 2];
    (case, table)
}

/// Random instance with at most eight uncertain entries and at most three
/// intervals, all elasticities non-positive.
pub fn random_micro(seed: u64) -> (NetworkCase, ElasticityTable) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let load_nodes = rng.gen_range(1..=2);
    let periods = rng.gen_range(1..=(4 / load_nodes).min(2));
    let loads: Vec<Vec<f64>> = (0..load_nodes)
        .map(|_| (0..periods).map(|_| rng.gen_range(20.0..150.0f64).round()).collect())
        .collect();
    let k = rng.gen_range(1..=3);
    let cuts: Vec<f64> = match k {
        1 => vec![0.0, 4.0],
        2 => vec![0.0, 1.0, 4.0],
        _ => vec![0.0, 0.8, 1.5, 4.0],
    };
    let intervals: Vec<(f64, f64)> = cuts.windows(2).map(|w| (w[0], w[1])).collect();
    let mut case = chain_case(&format!("random-{seed}"), &loads, 0.1, (0.05, 0.3));
    for t in 0..periods {
        case.prices.rho_da[t] = rng.gen_range(0.03..0.08f64);
        case.prices.rho_up[t] = case.prices.rho_da[t] + rng.gen_range(0.01..0.05f64);
        case.prices.rho_dn[t] = case.prices.rho_da[t] * rng.gen_range(0.2..0.8f64);
    }
    let n = load_nodes + 1;
    let mut xi_lo = vec![vec![vec![-0.1; k]; periods]; n];
    let mut xi_hi = vec![vec![vec![-0.05; k]; periods]; n];
    for i in 1..n {
        for t in 0..periods {
            for kk in 0..k {
                let a = rng.gen_range(-0.8..-0.05f64);
                let b = rng.gen_range(a..0.0f64);
                xi_lo[i][t][kk] = a;
                xi_hi[i][t][kk] = b;
            }
        }
    }
    let table = ElasticityTable::new(vec![intervals; periods], xi_lo, xi_hi).expect("valid random table");
    (case, table)
}

/// Instance on which storing fixed elasticities goes wrong: the worst case
/// below the reference price (ξ = −0.6) lies outside the range above it, so a
/// scenario recorded at a low price keeps penalizing high prices in the
/// master and its bound overshoots the true optimum.
pub fn ddu_showcase() -> (NetworkCase, ElasticityTable) {
    let (mut case, table) = micro1();
    case.name = "ddu-showcase".into();
    (case, table)
}
