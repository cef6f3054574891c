//! Strategy names as used on the command line and in experiment configs.
//!
//! ```text
//! first-fit | mru | next-fit | rr-next-fit | best-fit:l1|l2|linf
//! classify-departure:<duration> | nrt:standard|prioritized | greedy
//! classify-duration:<beta> | hybrid | reduced-hybrid | direct-sum:<name>
//! rcp | ppe | rcp-nolarge | ppe-nolarge | la:binary|geometric
//! predicted:<clairvoyant name>
//! ```
//!
//! Durations take a unit suffix (`d`, `h`, `m`, `s`, `ms`, `us`; bare
//! numbers are seconds) or `inf`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::clairvoyant::{ClassifyByDepartureTime, ClassifyByDuration, DirectSum, Greedy, Hybrid, HybridVariant, Nrt, NrtMode};
use super::learning::{LaRanges, LargeItems, LifetimeAlignment, Predicted, Rcp, ThresholdRule};
use super::nonclairvoyant::{BestFit, FirstFit, MostRecentlyUsed, NextFit, RoundRobinNextFit};
use super::{KnowledgeNeed, Strategy};
use crate::types::{Norm, MICROS_PER_SEC};

#[derive(Debug, Error, PartialEq)]
pub enum SpecError {
    #[error("unknown strategy '{0}'")]
    Unknown(String),
    #[error("strategy '{name}': {reason}")]
    BadParameter { name: String, reason: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum StrategySpec {
    FirstFit,
    Mru,
    NextFit,
    RrNextFit,
    BestFit(Norm),
    /// Interval width in microseconds; `None` is unbounded.
    ClassifyDeparture(Option<i64>),
    Nrt(NrtMode),
    Greedy,
    ClassifyDuration(f64),
    Hybrid,
    ReducedHybrid,
    DirectSum(Box<StrategySpec>),
    Rcp,
    Ppe,
    RcpNoLarge,
    PpeNoLarge,
    La(LaRanges),
    Predicted(Box<StrategySpec>),
}

const UNITS: [(&str, i64); 6] = [
    ("d", 86_400 * MICROS_PER_SEC),
    ("h", 3_600 * MICROS_PER_SEC),
    ("m", 60 * MICROS_PER_SEC),
    ("s", MICROS_PER_SEC),
    ("ms", 1_000),
    ("us", 1),
];

/// Parses `0.25d`, `6h`, `90m`, `21600s`, `500ms`, `7us`, `21600` (seconds)
/// or `inf` (returned as `None`).
pub fn parse_duration(text: &str) -> Result<Option<i64>, String> {
    let t = text.trim();
    if t.eq_ignore_ascii_case("inf") {
        return Ok(None);
    }
    let split = t
        .find(|c: char| c.is_ascii_alphabetic())
        .unwrap_or(t.len());
    let (num, unit) = t.split_at(split);
    let scale = if unit.is_empty() {
        MICROS_PER_SEC
    } else {
        UNITS
            .iter()
            .find(|(u, _)| *u == unit)
            .map(|(_, s)| *s)
            .ok_or_else(|| format!("unknown duration unit '{unit}'"))?
    };
    let value: f64 = num
        .parse()
        .map_err(|_| format!("'{text}' is not a duration"))?;
    let us = (value * scale as f64).round();
    if !(us >= 1.0 && us < i64::MAX as f64) {
        return Err(format!("duration '{text}' must be at least 1us"));
    }
    Ok(Some(us as i64))
}

/// Shortest exact rendering with the largest unit that divides `us`.
pub fn format_duration(us: i64) -> String {
    let (unit, scale) = UNITS
        .iter()
        .find(|(_, s)| us % s == 0)
        .copied()
        .unwrap_or(("us", 1));
    format!("{}{unit}", us / scale)
}

pub fn format_beta(beta: f64) -> String {
    if beta.is_infinite() {
        "inf".into()
    } else {
        format!("{beta}")
    }
}

fn bad(name: &str, reason: impl Into<String>) -> SpecError {
    SpecError::BadParameter {
        name: name.into(),
        reason: reason.into(),
    }
}

impl FromStr for StrategySpec {
    type Err = SpecError;

    fn from_str(text: &str) -> Result<Self, SpecError> {
        let text = text.trim();
        let (head, arg) = match text.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (text, None),
        };
        let need_arg = || arg.ok_or_else(|| bad(head, "missing ':' parameter"));
        let no_arg = |spec: StrategySpec| match arg {
            None => Ok(spec),
            Some(_) => Err(bad(head, "takes no parameter")),
        };
        match head {
            "first-fit" => no_arg(StrategySpec::FirstFit),
            "mru" => no_arg(StrategySpec::Mru),
            "next-fit" => no_arg(StrategySpec::NextFit),
            "rr-next-fit" => no_arg(StrategySpec::RrNextFit),
            "greedy" => no_arg(StrategySpec::Greedy),
            "hybrid" => no_arg(StrategySpec::Hybrid),
            "reduced-hybrid" => no_arg(StrategySpec::ReducedHybrid),
            "rcp" => no_arg(StrategySpec::Rcp),
            "ppe" => no_arg(StrategySpec::Ppe),
            "rcp-nolarge" => no_arg(StrategySpec::RcpNoLarge),
            "ppe-nolarge" => no_arg(StrategySpec::PpeNoLarge),
            "best-fit" => need_arg()?
                .parse()
                .map(StrategySpec::BestFit)
                .map_err(|e: String| bad(head, e)),
            "classify-departure" => parse_duration(need_arg()?)
                .map(StrategySpec::ClassifyDeparture)
                .map_err(|e| bad(head, e)),
            "nrt" => match need_arg()? {
                "standard" => Ok(StrategySpec::Nrt(NrtMode::Standard)),
                "prioritized" => Ok(StrategySpec::Nrt(NrtMode::Prioritized)),
                other => Err(bad(head, format!("mode '{other}' (expected standard or prioritized)"))),
            },
            "classify-duration" => {
                let a = need_arg()?;
                let beta = if a.eq_ignore_ascii_case("inf") {
                    f64::INFINITY
                } else {
                    a.parse::<f64>().map_err(|_| bad(head, format!("'{a}' is not a number")))?
                };
                if beta > 1.0 {
                    Ok(StrategySpec::ClassifyDuration(beta))
                } else {
                    Err(bad(head, "beta must exceed 1"))
                }
            }
            "la" => match need_arg()? {
                "binary" => Ok(StrategySpec::La(LaRanges::Binary)),
                "geometric" => Ok(StrategySpec::La(LaRanges::Geometric)),
                other => Err(bad(head, format!("ranges '{other}' (expected binary or geometric)"))),
            },
            "direct-sum" => {
                let inner: StrategySpec = need_arg()?.parse()?;
                Ok(StrategySpec::DirectSum(Box::new(inner)))
            }
            "predicted" => {
                let inner: StrategySpec = need_arg()?.parse()?;
                if inner.knowledge_need() != KnowledgeNeed::Departures {
                    return Err(bad(head, format!("'{inner}' is not a clairvoyant strategy")));
                }
                Ok(StrategySpec::Predicted(Box::new(inner)))
            }
            _ => Err(SpecError::Unknown(text.to_string())),
        }
    }
}

impl fmt::Display for StrategySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StrategySpec::FirstFit => f.write_str("first-fit"),
            StrategySpec::Mru => f.write_str("mru"),
            StrategySpec::NextFit => f.write_str("next-fit"),
            StrategySpec::RrNextFit => f.write_str("rr-next-fit"),
            StrategySpec::BestFit(n) => write!(f, "best-fit:{}", n.name()),
            StrategySpec::ClassifyDeparture(None) => f.write_str("classify-departure:inf"),
            StrategySpec::ClassifyDeparture(Some(r)) => write!(f, "classify-departure:{}", format_duration(*r)),
            StrategySpec::Nrt(NrtMode::Standard) => f.write_str("nrt:standard"),
            StrategySpec::Nrt(NrtMode::Prioritized) => f.write_str("nrt:prioritized"),
            StrategySpec::Greedy => f.write_str("greedy"),
            StrategySpec::ClassifyDuration(b) => write!(f, "classify-duration:{}", format_beta(*b)),
            StrategySpec::Hybrid => f.write_str("hybrid"),
            StrategySpec::ReducedHybrid => f.write_str("reduced-hybrid"),
            StrategySpec::DirectSum(inner) => write!(f, "direct-sum:{inner}"),
            StrategySpec::Rcp => f.write_str("rcp"),
            StrategySpec::Ppe => f.write_str("ppe"),
            StrategySpec::RcpNoLarge => f.write_str("rcp-nolarge"),
            StrategySpec::PpeNoLarge => f.write_str("ppe-nolarge"),
            StrategySpec::La(LaRanges::Binary) => f.write_str("la:binary"),
            StrategySpec::La(LaRanges::Geometric) => f.write_str("la:geometric"),
            StrategySpec::Predicted(inner) => write!(f, "predicted:{inner}"),
        }
    }
}

impl TryFrom<String> for StrategySpec {
    type Error = SpecError;
    fn try_from(s: String) -> Result<Self, SpecError> {
        s.parse()
    }
}

impl From<StrategySpec> for String {
    fn from(s: StrategySpec) -> String {
        s.to_string()
    }
}

impl StrategySpec {
    /// A fresh strategy instance for one run.
    pub fn build(&self) -> Box<dyn Strategy> {
        match self {
            StrategySpec::FirstFit => Box::new(FirstFit),
            StrategySpec::Mru => Box::new(MostRecentlyUsed),
            StrategySpec::NextFit => Box::new(NextFit::default()),
            StrategySpec::RrNextFit => Box::new(RoundRobinNextFit::default()),
            StrategySpec::BestFit(norm) => Box::new(BestFit { norm: *norm }),
            StrategySpec::ClassifyDeparture(rho) => Box::new(ClassifyByDepartureTime::new(*rho)),
            StrategySpec::Nrt(mode) => Box::new(Nrt { mode: *mode }),
            StrategySpec::Greedy => Box::new(Greedy),
            StrategySpec::ClassifyDuration(beta) => Box::new(ClassifyByDuration::new(*beta)),
            StrategySpec::Hybrid => Box::new(Hybrid::new(HybridVariant::Full)),
            StrategySpec::ReducedHybrid => Box::new(Hybrid::new(HybridVariant::Reduced)),
            StrategySpec::DirectSum(inner) => {
                let inner = (**inner).clone();
                Box::new(DirectSum::new(Box::new(move || inner.build())))
            }
            StrategySpec::Rcp => Box::new(Rcp::new(ThresholdRule::Rcp, LargeItems::Dedicated)),
            StrategySpec::Ppe => Box::new(Rcp::new(ThresholdRule::Ppe, LargeItems::Dedicated)),
            StrategySpec::RcpNoLarge => Box::new(Rcp::new(ThresholdRule::Rcp, LargeItems::Shared)),
            StrategySpec::PpeNoLarge => Box::new(Rcp::new(ThresholdRule::Ppe, LargeItems::Shared)),
            StrategySpec::La(ranges) => Box::new(LifetimeAlignment { ranges: *ranges }),
            StrategySpec::Predicted(inner) => Box::new(Predicted::new(inner.build())),
        }
    }

    pub fn knowledge_need(&self) -> KnowledgeNeed {
        match self {
            StrategySpec::FirstFit
            | StrategySpec::Mru
            | StrategySpec::NextFit
            | StrategySpec::RrNextFit
            | StrategySpec::BestFit(_) => KnowledgeNeed::Oblivious,
            StrategySpec::ClassifyDeparture(_)
            | StrategySpec::Nrt(_)
            | StrategySpec::Greedy
            | StrategySpec::ClassifyDuration(_)
            | StrategySpec::Hybrid
            | StrategySpec::ReducedHybrid => KnowledgeNeed::Departures,
            StrategySpec::DirectSum(inner) => inner.knowledge_need(),
            StrategySpec::Rcp
            | StrategySpec::Ppe
            | StrategySpec::RcpNoLarge
            | StrategySpec::PpeNoLarge
            | StrategySpec::La(_)
            | StrategySpec::Predicted(_) => KnowledgeNeed::Predictions,
        }
    }

    /// Strategies that never open a bin while an open one fits the item.
    pub fn is_any_fit(&self) -> bool {
        match self {
            StrategySpec::FirstFit
            | StrategySpec::Mru
            | StrategySpec::RrNextFit
            | StrategySpec::BestFit(_)
            | StrategySpec::Nrt(_)
            | StrategySpec::Greedy
            | StrategySpec::La(_) => true,
            StrategySpec::Predicted(inner) => inner.is_any_fit(),
            _ => false,
        }
    }

    /// Every strategy name with a representative parameter.
    pub fn catalog() -> Vec<StrategySpec> {
        [
            "first-fit",
            "mru",
            "next-fit",
            "rr-next-fit",
            "best-fit:l1",
            "best-fit:l2",
            "best-fit:linf",
            "classify-departure:0.25d",
            "nrt:standard",
            "nrt:prioritized",
            "greedy",
            "classify-duration:2",
            "hybrid",
            "reduced-hybrid",
            "direct-sum:hybrid",
            "direct-sum:reduced-hybrid",
            "rcp",
            "ppe",
            "rcp-nolarge",
            "ppe-nolarge",
            "la:binary",
            "la:geometric",
            "predicted:greedy",
            "predicted:nrt:prioritized",
        ]
        .iter()
        .map(|s| s.parse().expect("catalog names parse"))
        .collect()
    }
}
