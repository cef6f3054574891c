//! Placement policies. A strategy only picks a bin; the engine applies the
//! placement and owns every bin's state.

pub mod clairvoyant;
pub mod learning;
pub mod nonclairvoyant;
pub mod spec;

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::engine::{Bin, OpenBins};
use crate::types::{lp_norm, BinId, ItemId, Norm, SizeVector, TimePoint, MICROS_PER_SEC};

pub use spec::StrategySpec;

/// How much departure information a strategy needs to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum KnowledgeNeed {
    /// Ignores departures entirely.
    Oblivious,
    /// Uses real departure times; also runs on predicted ones.
    Departures,
    /// Built around predictions; also runs with exact departures.
    Predictions,
}

/// An arriving item as presented to a strategy.
#[derive(Clone, Copy, Debug)]
pub struct Arrival {
    pub id: ItemId,
    pub size: SizeVector,
    pub time: TimePoint,
    /// Real departure (clairvoyant), predicted departure (learning) or `None`.
    pub departure_hint: Option<TimePoint>,
}

impl Arrival {
    pub fn duration_hint(&self) -> Option<i64> {
        self.departure_hint.map(|d| d - self.time)
    }
}

/// A departed item. The real departure is revealed here in every mode.
#[derive(Clone, Copy, Debug)]
pub struct Departure {
    pub id: ItemId,
    pub bin: BinId,
    pub size: SizeVector,
    pub arrival: TimePoint,
    pub departure: TimePoint,
    pub departure_hint: Option<TimePoint>,
    /// The item was the last one in its bin, which is now closed.
    pub bin_closed: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Placement {
    Existing(BinId),
    OpenNew,
}

impl From<Option<BinId>> for Placement {
    fn from(choice: Option<BinId>) -> Placement {
        choice.map_or(Placement::OpenNew, Placement::Existing)
    }
}

/// Run-level facts a strategy may read before the first arrival.
#[derive(Clone, Copy, Debug)]
pub struct RunContext {
    pub d: usize,
    /// Smallest hinted duration over the instance; `None` without hints.
    pub min_duration_hint: Option<i64>,
}

pub trait Strategy: Send {
    fn name(&self) -> String;

    fn knowledge_need(&self) -> KnowledgeNeed {
        KnowledgeNeed::Oblivious
    }

    fn begin(&mut self, _ctx: &RunContext) {}

    fn select(&mut self, item: &Arrival, bins: &OpenBins<'_>) -> Placement;

    /// Called after the engine applied the placement; `bins` already
    /// includes the item.
    fn placed(&mut self, _item: &Arrival, _bin: BinId, _opened: bool, _bins: &OpenBins<'_>) {}

    fn departed(&mut self, _item: &Departure, _bins: &OpenBins<'_>) {}
}

/// Earliest-opened bin that fits.
pub fn first_fit<'a>(mut bins: impl Iterator<Item = &'a Bin>, size: &SizeVector) -> Option<BinId> {
    bins.find(|b| b.fits(size)).map(Bin::id)
}

/// Fitting bin whose residual capacity after placement has the smallest
/// norm; ties go to the earliest-opened bin.
pub fn best_fit<'a>(bins: impl Iterator<Item = &'a Bin>, size: &SizeVector, norm: Norm) -> Option<BinId> {
    let mut best: Option<(f64, BinId)> = None;
    for bin in bins.filter(|b| b.fits(size)) {
        let score = lp_norm(&bin.available().minus(size), norm);
        if best.is_none_or(|(s, _)| score < s) {
            best = Some((score, bin.id()));
        }
    }
    best.map(|(_, id)| id)
}

/// Index `i` with `duration ∈ [base·β^(i-1), base·β^i)`. An infinite `beta`
/// puts every duration in category 1.
pub fn duration_category(duration: i64, beta: f64, base: i64) -> i64 {
    assert!(beta > 1.0 && base > 0 && duration > 0);
    if beta.is_infinite() {
        return 1;
    }
    let x = duration as f64 / base as f64;
    let mut i = (x.ln() / beta.ln()).floor() as i64 + 1;
    // Repair float error at the range boundaries.
    let lower = |i: i64| base as f64 * beta.powi((i - 1) as i32);
    while (duration as f64) < lower(i) {
        i -= 1;
    }
    while (duration as f64) >= lower(i + 1) {
        i += 1;
    }
    i
}

/// Duration class on the power-of-two seconds grid: `0` for durations under
/// one second, otherwise `i` with `duration ∈ [2^(i-1), 2^i)` seconds.
pub fn seconds_class(duration: i64) -> i64 {
    if duration < MICROS_PER_SEC {
        0
    } else {
        duration_category(duration, 2.0, MICROS_PER_SEC)
    }
}

/// Bins partitioned into keyed pools, each kept in ascending id order.
#[derive(Clone, Debug)]
pub struct BinPools<K> {
    pools: BTreeMap<K, Vec<BinId>>,
    owner: HashMap<BinId, K>,
}

impl<K> Default for BinPools<K> {
    fn default() -> Self {
        BinPools {
            pools: BTreeMap::new(),
            owner: HashMap::new(),
        }
    }
}

impl<K: Ord + Clone> BinPools<K> {
    pub fn insert(&mut self, key: K, bin: BinId) {
        let pool = self.pools.entry(key.clone()).or_default();
        let pos = pool.binary_search(&bin).unwrap_or_else(|p| p);
        pool.insert(pos, bin);
        self.owner.insert(bin, key);
    }

    /// Forgets a bin; returns the pool it belonged to.
    pub fn remove(&mut self, bin: BinId) -> Option<K> {
        let key = self.owner.remove(&bin)?;
        let pool = self.pools.get_mut(&key).expect("pool of owned bin");
        if let Ok(pos) = pool.binary_search(&bin) {
            pool.remove(pos);
        }
        if pool.is_empty() {
            self.pools.remove(&key);
        }
        Some(key)
    }

    pub fn get(&self, key: &K) -> &[BinId] {
        self.pools.get(key).map_or(&[], Vec::as_slice)
    }

    pub fn key_of(&self, bin: BinId) -> Option<&K> {
        self.owner.get(&bin)
    }
}

/// Sorted insert into an ascending bin list.
pub(crate) fn insert_sorted(list: &mut Vec<BinId>, bin: BinId) {
    let pos = list.binary_search(&bin).unwrap_or_else(|p| p);
    list.insert(pos, bin);
}

pub(crate) fn remove_sorted(list: &mut Vec<BinId>, bin: BinId) -> bool {
    match list.binary_search(&bin) {
        Ok(pos) => {
            list.remove(pos);
            true
        }
        Err(_) => false,
    }
}
