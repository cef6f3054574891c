//! Synthetic duration predictions with multiplicative error.
//!
//! Each item draws from its own ChaCha8 stream (seed = run seed, stream =
//! item id), so a prediction never depends on iteration order.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::strategy::learning::PredictionTable;
use crate::types::Instance;

pub use crate::strategy::learning::multiplicative_error;

/// Name of the generator, recorded in run manifests.
pub const RNG_NAME: &str = "ChaCha8 (rand_chacha 0.9), seed = run seed, stream = item id";

/// Largest predicted duration emitted, far beyond any trace span.
const MAX_PREDICTION: i64 = i64::MAX / 4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ErrorKind {
    /// `δ = exp(σZ)` with `Z` standard normal.
    LogNormal { sigma: f64 },
    /// `δ ~ U[1, ε]`; a fair coin picks under- or over-estimation.
    Uniform { epsilon: f64 },
}

impl ErrorKind {
    pub fn label(&self) -> &'static str {
        match self {
            ErrorKind::LogNormal { .. } => "lognormal",
            ErrorKind::Uniform { .. } => "uniform",
        }
    }

    pub fn param(&self) -> f64 {
        match *self {
            ErrorKind::LogNormal { sigma } => sigma,
            ErrorKind::Uniform { epsilon } => epsilon,
        }
    }

    fn validate(self) -> Result<Self, String> {
        match self {
            ErrorKind::LogNormal { sigma } if !(sigma >= 0.0 && sigma.is_finite()) => {
                Err(format!("sigma must be a finite value >= 0, got {sigma}"))
            }
            ErrorKind::Uniform { epsilon } if !(epsilon >= 1.0 && epsilon.is_finite()) => {
                Err(format!("epsilon must be a finite value >= 1, got {epsilon}"))
            }
            ok => Ok(ok),
        }
    }
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.label(), self.param())
    }
}

impl FromStr for ErrorKind {
    type Err = String;

    /// `lognormal:<sigma>` or `uniform:<epsilon>`.
    fn from_str(s: &str) -> Result<Self, String> {
        let (kind, value) = s
            .split_once(':')
            .ok_or_else(|| format!("'{s}': expected lognormal:<sigma> or uniform:<epsilon>"))?;
        let value: f64 = value.trim().parse().map_err(|_| format!("'{value}' is not a number"))?;
        match kind.trim() {
            "lognormal" => ErrorKind::LogNormal { sigma: value }.validate(),
            "uniform" => ErrorKind::Uniform { epsilon: value }.validate(),
            other => Err(format!("unknown error model '{other}'")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorModel {
    pub kind: ErrorKind,
    pub seed: u64,
}

impl ErrorModel {
    pub fn new(kind: ErrorKind, seed: u64) -> Self {
        ErrorModel { kind, seed }
    }

    /// The multiplicative factor applied to one item's real duration.
    /// Factors below one underestimate.
    pub fn factor(&self, stream: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        match self.kind {
            ErrorKind::LogNormal { sigma } => {
                if sigma == 0.0 {
                    return 1.0;
                }
                let z: f64 = StandardNormal.sample(&mut rng);
                (sigma * z).exp()
            }
            ErrorKind::Uniform { epsilon } => {
                if epsilon == 1.0 {
                    return 1.0;
                }
                let delta = rng.random_range(1.0..=epsilon);
                if rng.random_bool(0.5) {
                    1.0 / delta
                } else {
                    delta
                }
            }
        }
    }

    /// Predicted duration for an item, clamped to at least 1 µs.
    pub fn predict(&self, stream: u64, real: i64) -> i64 {
        let factor = self.factor(stream);
        if factor == 1.0 {
            return real;
        }
        let p = (factor * real as f64).round();
        if p >= MAX_PREDICTION as f64 {
            MAX_PREDICTION
        } else {
            (p as i64).max(1)
        }
    }
}

pub fn generate_predictions(instance: &Instance, model: &ErrorModel) -> PredictionTable {
    instance
        .items()
        .iter()
        .map(|it| (it.id, model.predict(it.id.0, it.duration())))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testkit::random::{random_instance, RandomTrace};

    #[test]
    fn exact_when_error_free() {
        let inst = random_instance(&RandomTrace::default(), 3);
        for kind in [ErrorKind::LogNormal { sigma: 0.0 }, ErrorKind::Uniform { epsilon: 1.0 }] {
            let table = generate_predictions(&inst, &ErrorModel::new(kind, 42));
            for it in inst.items() {
                assert_eq!(table.duration(it.id), Some(it.duration()));
            }
        }
    }

    #[test]
    fn seeded_and_order_independent() {
        let m = ErrorModel::new(ErrorKind::LogNormal { sigma: 1.5 }, 9);
        assert_eq!(m.factor(17), m.factor(17));
        assert_ne!(m.factor(17), m.factor(18));
        let other = ErrorModel::new(ErrorKind::LogNormal { sigma: 1.5 }, 10);
        assert_ne!(m.factor(17), other.factor(17));
        let inst = random_instance(&RandomTrace::default(), 5);
        assert_eq!(generate_predictions(&inst, &m), generate_predictions(&inst, &m));
    }

    #[test]
    fn lognormal_moments() {
        let m = ErrorModel::new(ErrorKind::LogNormal { sigma: 1.0 }, 2024);
        let n = 1_000_000u64;
        let (mut sum, mut sq) = (0.0, 0.0);
        for k in 0..n {
            let x = m.factor(k).ln();
            sum += x;
            sq += x * x;
        }
        let mean = sum / n as f64;
        let std = (sq / n as f64 - mean * mean).sqrt();
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((std - 1.0).abs() < 0.01, "std {std}");
    }

    #[test]
    fn uniform_is_bounded_and_two_sided() {
        let m = ErrorModel::new(ErrorKind::Uniform { epsilon: 10.0 }, 1);
        let (mut under, mut over) = (0, 0);
        for k in 0..10_000 {
            let f = m.factor(k);
            assert!((0.1..=10.0).contains(&f));
            if f < 1.0 {
                under += 1;
            } else {
                over += 1;
            }
        }
        assert!((4_500..=5_500).contains(&under), "{under} vs {over}");
    }

    #[test]
    fn clamps_tiny_and_huge() {
        let m = ErrorModel::new(ErrorKind::Uniform { epsilon: 1e6 }, 1);
        for k in 0..200 {
            let p = m.predict(k, 1);
            assert!(p >= 1);
        }
        let m = ErrorModel::new(ErrorKind::LogNormal { sigma: 400.0 }, 1);
        for k in 0..200 {
            let p = m.predict(k, 1_000_000);
            assert!((1..=MAX_PREDICTION).contains(&p));
        }
    }

    #[test]
    fn parses_models() {
        assert_eq!("lognormal:0.5".parse::<ErrorKind>().unwrap(), ErrorKind::LogNormal { sigma: 0.5 });
        assert_eq!("uniform:100".parse::<ErrorKind>().unwrap(), ErrorKind::Uniform { epsilon: 100.0 });
        assert!("uniform:0.5".parse::<ErrorKind>().is_err());
        assert!("lognormal:-1".parse::<ErrorKind>().is_err());
        assert!("gamma:1".parse::<ErrorKind>().is_err());
        assert_eq!(ErrorKind::LogNormal { sigma: 0.5 }.to_string(), "lognormal:0.5");
    }

    #[test]
    fn multiplicative_error_examples() {
        assert_eq!(multiplicative_error(10, 10), 1.0);
        assert_eq!(multiplicative_error(5, 20), 4.0);
        assert_eq!(multiplicative_error(20, 5), 4.0);
    }
}
