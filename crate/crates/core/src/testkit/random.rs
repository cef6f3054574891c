//! Seeded synthetic traces for tests, benchmarks and the CLI.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::types::{Instance, Item, SizeVector, TimePoint, MICROS_PER_SEC};

/// Shape of a random trace. Arrivals are uniform whole seconds over the
/// horizon (so ties occur), durations log-uniform, sizes uniform per
/// dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomTrace {
    pub items: usize,
    pub d: usize,
    pub horizon_s: i64,
    pub min_duration_s: f64,
    pub max_duration_s: f64,
    pub max_size: f64,
}

impl Default for RandomTrace {
    fn default() -> Self {
        RandomTrace {
            items: 100,
            d: 2,
            horizon_s: 1_000,
            min_duration_s: 1.0,
            max_duration_s: 1_000.0,
            max_size: 0.6,
        }
    }
}

pub fn random_instance(cfg: &RandomTrace, seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = (cfg.min_duration_s.ln(), cfg.max_duration_s.ln());
    let items = (0..cfg.items)
        .map(|k| {
            let arrival = TimePoint(rng.random_range(0..=cfg.horizon_s) * MICROS_PER_SEC);
            let log_dur = if hi > lo { rng.random_range(lo..hi) } else { lo };
            let dur = ((log_dur.exp() * MICROS_PER_SEC as f64).round() as i64).max(1);
            let sizes: Vec<f64> = (0..cfg.d).map(|_| rng.random_range(0.0..=cfg.max_size)).collect();
            Item::new(k as u64, SizeVector::new(&sizes).expect("sizes in range"), arrival, arrival + dur)
        })
        .collect();
    Instance::new(format!("random-{seed}"), cfg.d, items).expect("random trace is valid")
}
