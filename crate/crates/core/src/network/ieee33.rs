//! The 33-bus radial feeder with three dispatchable generators.
//!
//! Impedances and peak loads are the widely used feeder data (12.66 kV,
//! 3715 kW / 2300 kVAr total peak demand), converted to per unit on a
//! 1000 kVA base. Generator data, line ratings, the daily load shape and the
//! price series are synthetic.

use super::{LineData, NetworkCase, NodeData, PriceParams};

const BASE_KV: f64 = 12.66;
const BASE_KVA: f64 = 1000.0;

/// (from, to, R Ω, X Ω) with 1-based bus numbers.
const LINES: [(usize, usize, f64, f64); 32] = [
    (1, 2, 0.0922, 0.0470),
    (2, 3, 0.4930, 0.2511),
    (3, 4, 0.3660, 0.1864),
    (4, 5, 0.3811, 0.1941),
    (5, 6, 0.8190, 0.7070),
    (6, 7, 0.1872, 0.6188),
    (7, 8, 0.7114, 0.2351),
    (8, 9, 1.0300, 0.7400),
    (9, 10, 1.0440, 0.7400),
    (10, 11, 0.1966, 0.0650),
    (11, 12, 0.3744, 0.1238),
    (12, 13, 1.4680, 1.1550),
    (13, 14, 0.5416, 0.7129),
    (14, 15, 0.5910, 0.5260),
    (15, 16, 0.7463, 0.5450),
    (16, 17, 1.2890, 1.7210),
    (17, 18, 0.7320, 0.5740),
    (2, 19, 0.1640, 0.1565),
    (19, 20, 1.5042, 1.3554),
    (20, 21, 0.4095, 0.4784),
    (21, 22, 0.7089, 0.9373),
    (3, 23, 0.4512, 0.3083),
    (23, 24, 0.8980, 0.7091),
    (24, 25, 0.8960, 0.7011),
    (6, 26, 0.2030, 0.1034),
    (26, 27, 0.2842, 0.1447),
    (27, 28, 1.0590, 0.9337),
    (28, 29, 0.8042, 0.7006),
    (29, 30, 0.5075, 0.2585),
    (30, 31, 0.9744, 0.9630),
    (31, 32, 0.3105, 0.3619),
    (32, 33, 0.3410, 0.5302),
];

/// Peak (kW, kVAr) at buses 2..=33.
const LOADS: [(f64, f64); 32] = [
    (100.0, 60.0),
    (90.0, 40.0),
    (120.0, 80.0),
    (60.0, 30.0),
    (60.0, 20.0),
    (200.0, 100.0),
    (200.0, 100.0),
    (60.0, 20.0),
    (60.0, 20.0),
    (45.0, 30.0),
    (60.0, 35.0),
    (60.0, 35.0),
    (120.0, 80.0),
    (60.0, 10.0),
    (60.0, 20.0),
    (60.0, 20.0),
    (90.0, 40.0),
    (90.0, 40.0),
    (90.0, 40.0),
    (90.0, 40.0),
    (90.0, 40.0),
    (90.0, 50.0),
    (420.0, 200.0),
    (420.0, 200.0),
    (60.0, 25.0),
    (60.0, 25.0),
    (60.0, 20.0),
    (120.0, 70.0),
    (200.0, 600.0),
    (150.0, 70.0),
    (210.0, 100.0),
    (60.0, 40.0),
];

/// Share of peak load per hour.
pub const DAILY_LOAD_SHAPE: [f64; 24] = [
    0.62, 0.58, 0.55, 0.54, 0.55, 0.60, 0.70, 0.80, 0.85, 0.86, 0.87, 0.88, 0.86, 0.84, 0.83, 0.85, 0.90, 0.98,
    1.00, 0.97, 0.92, 0.85, 0.76, 0.68,
];

/// Day-ahead energy price per hour, $/kWh.
pub const DAY_AHEAD_PRICE: [f64; 24] = [
    0.032, 0.030, 0.029, 0.029, 0.030, 0.034, 0.042, 0.052, 0.058, 0.060, 0.061, 0.062, 0.060, 0.058, 0.057,
    0.059, 0.066, 0.078, 0.084, 0.080, 0.071, 0.060, 0.048, 0.038,
];

/// (0-based node, p_max kW, q range kVAr, $/kWh)
const GENERATORS: [(usize, f64, f64, f64); 3] = [(1, 300.0, 200.0, 0.045), (2, 250.0, 150.0, 0.050), (5, 400.0, 250.0, 0.040)];

/// The feeder over the first `periods` hours of the daily profile
/// (`periods ≤ 24`). Node `k` is bus `k + 1`.
pub fn ieee33(periods: usize) -> NetworkCase {
    assert!((1..=24).contains(&periods), "periods must be in 1..=24");
    let z_base = BASE_KV * BASE_KV * 1000.0 / BASE_KVA;
    let mut nodes = Vec::with_capacity(33);
    nodes.push(NodeData {
        id: 0,
        kappa: 0.0,
        load: vec![0.0; periods],
        p_min: 0.0,
        p_max: 0.0,
        q_min: 0.0,
        q_max: 0.0,
        v_min: 1.0,
        v_max: 1.0,
        gen_cost: 0.0,
    });
    for (j, &(p, q)) in LOADS.iter().enumerate() {
        let mut n = NodeData {
            id: j + 1,
            kappa: q / p,
            load: DAILY_LOAD_SHAPE[..periods].iter().map(|s| (p * s * 100.0).round() / 100.0).collect(),
            p_min: 0.0,
            p_max: 0.0,
            q_min: 0.0,
            q_max: 0.0,
            v_min: 0.9,
            v_max: 1.1,
            gen_cost: 0.0,
        };
        if let Some(&(_, pmax, qr, cost)) = GENERATORS.iter().find(|g| g.0 == j + 1) {
            n.p_max = pmax;
            n.q_min = -qr;
            n.q_max = qr;
            n.gen_cost = cost;
        }
        nodes.push(n);
    }
    let lines = LINES
        .iter()
        .enumerate()
        .map(|(l, &(f, t, r, x))| LineData {
            from: f - 1,
            to: t - 1,
            r: r / z_base,
            x: x / z_base,
            s_max: if l < 5 { 6000.0 } else { 2500.0 },
        })
        .collect();
    let rho = &DAY_AHEAD_PRICE[..periods];
    NetworkCase {
        name: format!("ieee33-t{periods}"),
        nodes,
        lines,
        prices: PriceParams {
            rho_da: rho.to_vec(),
            rho_up: rho.iter().map(|r| r * 1.2).collect(),
            rho_dn: rho.iter().map(|r| r * 0.8).collect(),
            c_ref: vec![0.1; periods],
            tou_min: 0.05,
            tou_max: 0.5,
        },
        periods,
        base_kva: BASE_KVA,
        root_bounded: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn peak_totals_and_shape() {
        let case = ieee33(24);
        case.validate().unwrap();
        assert_eq!(case.num_nodes(), 33);
        let p: f64 = LOADS.iter().map(|l| l.0).sum();
        let q: f64 = LOADS.iter().map(|l| l.1).sum();
        assert_eq!((p, q), (3715.0, 2300.0));
        assert!((case.total_load(18) - 3715.0).abs() < 1e-6);
        let gens: Vec<usize> = case.nodes.iter().filter(|n| n.has_active_gen()).map(|n| n.id).collect();
        assert_eq!(gens, vec![1, 2, 5]);
    }

    #[test]
    fn impedance_conversion() {
        let case = ieee33(1);
        assert!((case.lines[0].r - 0.0922 / 160.2756).abs() < 1e-9);
    }
}
