//! Synthetic elasticity tables built from three user archetypes.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ElasticityTable, UncertaintyError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SensitivityClass {
    High,
    Mid,
    Low,
}

impl SensitivityClass {
    pub const ALL: [SensitivityClass; 3] = [Self::High, Self::Mid, Self::Low];

    /// Elasticity bounds on the ratio interval `[0.25, 0.5]`.
    pub fn reference_bounds(self) -> (f64, f64) {
        match self {
            Self::High => (-0.97, -0.11),
            Self::Mid => (-0.55, -0.06),
            Self::Low => (-0.25, -0.02),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::High => "high",
            Self::Mid => "mid",
            Self::Low => "low",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }
}

/// Ratio breakpoints for `k` intervals (1 to 5).
pub fn interval_boundaries(k: usize) -> Result<Vec<f64>, UncertaintyError> {
    Ok(match k {
        1 => vec![0.0, 16.0],
        2 => vec![0.0, 1.0, 16.0],
        3 => vec![0.0, 0.5, 1.0, 16.0],
        4 => vec![0.0, 0.5, 1.0, 4.0, 16.0],
        5 => vec![0.0, 0.25, 0.5, 1.0, 4.0, 16.0],
        _ => {
            return Err(UncertaintyError::InvalidTable(format!(
                "synthetic tables support 1 to 5 intervals, got {k}"
            )))
        }
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticOptions {
    pub seed: u64,
    pub nodes: usize,
    pub periods: usize,
    pub intervals: usize,
    /// Share of nodes per class; normalized.
    pub class_shares: Vec<(SensitivityClass, f64)>,
    /// Rate at which elasticity magnitude falls with `|ratio − 1|`.
    pub decay: f64,
    /// Per-node multiplicative spread, uniform in `[1 − jitter, 1 + jitter]`.
    pub jitter: f64,
}

impl Default for SyntheticOptions {
    fn default() -> Self {
        SyntheticOptions {
            seed: 0,
            nodes: 1,
            periods: 24,
            intervals: 5,
            class_shares: SensitivityClass::ALL.iter().map(|&c| (c, 1.0)).collect(),
            decay: 0.25,
            jitter: 0.0,
        }
    }
}

const REFERENCE_RATIO: f64 = 0.375;

/// Demand stays non-negative for ratios up to `r⁺` when `ξ ≥ −margin/(r⁺ − 1)`.
const NONNEG_MARGIN: f64 = 0.95;

/// Assigns classes to nodes (shuffled under the seed) and fills the table.
pub fn synthetic_table(opts: &SyntheticOptions) -> Result<(ElasticityTable, Vec<SensitivityClass>), UncertaintyError> {
    let edges = interval_boundaries(opts.intervals)?;
    let total: f64 = opts.class_shares.iter().map(|(_, s)| s.max(0.0)).sum();
    if opts.nodes == 0 || opts.periods == 0 || !(total > 0.0) {
        return Err(UncertaintyError::EmptyTable);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let mut classes = Vec::with_capacity(opts.nodes);
    for (c, s) in &opts.class_shares {
        let count = (s.max(0.0) / total * opts.nodes as f64).round() as usize;
        classes.extend(std::iter::repeat(*c).take(count));
    }
    classes.truncate(opts.nodes);
    while classes.len() < opts.nodes {
        classes.push(opts.class_shares[0].0);
    }
    classes.shuffle(&mut rng);

    let intervals: Vec<(f64, f64)> = edges.windows(2).map(|w| (w[0], w[1])).collect();
    let nk = intervals.len();
    let mut lo = vec![vec![vec![0.0; nk]; opts.periods]; opts.nodes];
    let mut hi = lo.clone();
    for (i, class) in classes.iter().enumerate() {
        let j = if opts.jitter > 0.0 {
            rng.gen_range(1.0 - opts.jitter..=1.0 + opts.jitter)
        } else {
            1.0
        };
        let (ref_lo, ref_hi) = class.reference_bounds();
        for (k, &(r0, r1)) in intervals.iter().enumerate() {
            let mid = 0.5 * (r0 + r1);
            let s = (-opts.decay * ((mid - 1.0).abs() - (REFERENCE_RATIO - 1.0).abs())).exp() * j;
            let mut a = ref_lo * s;
            let mut b = ref_hi * s;
            if r1 > 1.0 {
                a = a.max(-NONNEG_MARGIN / (r1 - 1.0));
                b = b.max(a);
            }
            if (r0, r1) == (0.25, 0.5) && j == 1.0 {
                // the archetype values themselves, free of rounding
                a = ref_lo;
                b = ref_hi;
            }
            for t in 0..opts.periods {
                lo[i][t][k] = a;
                hi[i][t][k] = b;
            }
        }
    }
    let table = ElasticityTable::new(vec![intervals; opts.periods], lo, hi)?;
    Ok((table, classes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn five_interval_boundaries() {
        assert_eq!(interval_boundaries(5).unwrap(), vec![0.0, 0.25, 0.5, 1.0, 4.0, 16.0]);
        assert!(interval_boundaries(6).is_err());
    }

    #[test]
    fn high_class_reference_interval() {
        let opts = SyntheticOptions {
            nodes: 3,
            periods: 2,
            class_shares: vec![(SensitivityClass::High, 1.0)],
            ..Default::default()
        };
        let (t, classes) = synthetic_table(&opts).unwrap();
        assert!(classes.iter().all(|&c| c == SensitivityClass::High));
        assert_eq!(t.intervals[0][1], (0.25, 0.5));
        assert_eq!(t.bounds(2, 1, 1), (-0.97, -0.11));
    }

    #[test]
    fn same_seed_same_csv() {
        let opts = SyntheticOptions {
            seed: 7,
            nodes: 9,
            periods: 3,
            jitter: 0.1,
            ..Default::default()
        };
        let a = synthetic_table(&opts).unwrap().0.to_csv();
        let b = synthetic_table(&opts).unwrap().0.to_csv();
        assert_eq!(a, b);
    }

    #[test]
    fn demand_stays_nonnegative() {
        let opts = SyntheticOptions {
            nodes: 6,
            periods: 1,
            jitter: 0.3,
            ..Default::default()
        };
        let (t, _) = synthetic_table(&opts).unwrap();
        for i in 0..6 {
            for k in 0..5 {
                let (a, b) = t.bounds(i, 0, k);
                let r = t.intervals[0][k].1;
                assert!(a <= b && b <= 0.0);
                assert!(1.0 + a * (r - 1.0) >= 0.0);
            }
        }
    }
}
