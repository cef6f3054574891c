//! Prediction-aware policies and the adapter that runs a clairvoyant policy
//! on predicted departures.

use std::collections::{BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::clairvoyant::Aggregate;
use super::{
    best_fit, first_fit, insert_sorted, remove_sorted, seconds_class, Arrival, BinPools, Departure,
    KnowledgeNeed, Placement, RunContext, Strategy,
};
use crate::engine::OpenBins;
use crate::types::{BinId, ItemId, Norm, SizeVector, CAPACITY_EPS, MICROS_PER_SEC};

/// Predicted duration per item, in microseconds.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PredictionTable {
    durations: HashMap<ItemId, i64>,
}

impl PredictionTable {
    pub fn insert(&mut self, id: ItemId, duration: i64) {
        self.durations.insert(id, duration);
    }

    pub fn duration(&self, id: ItemId) -> Option<i64> {
        self.durations.get(&id).copied()
    }

    pub fn len(&self) -> usize {
        self.durations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.durations.is_empty()
    }
}

impl FromIterator<(ItemId, i64)> for PredictionTable {
    fn from_iter<T: IntoIterator<Item = (ItemId, i64)>>(iter: T) -> Self {
        PredictionTable {
            durations: iter.into_iter().collect(),
        }
    }
}

/// `max(real/predicted, predicted/real)`; 1 iff the prediction is exact.
pub fn multiplicative_error(predicted: i64, real: i64) -> f64 {
    assert!(predicted > 0 && real > 0, "durations must be positive");
    let (p, r) = (predicted as f64, real as f64);
    (r / p).max(p / r)
}

/// Guess-and-double: raise `alpha` to the next power of two at or above an
/// observed error that exceeds it.
pub fn ppe_update_alpha(alpha: f64, observed_error: f64) -> f64 {
    if observed_error <= alpha {
        alpha
    } else {
        let mut next = alpha.max(1.0);
        while next < observed_error {
            next *= 2.0;
        }
        next
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ThresholdRule {
    /// `1/√x`.
    Rcp,
    /// `α/√x` with `α` the running maximum error estimate.
    Ppe,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LargeItems {
    /// Every item over 1/2 gets a dedicated bin.
    Dedicated,
    /// Large items take the same path as small ones.
    Shared,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Route {
    General,
    Category,
    Base,
    /// A fresh category bin that also switches its category on.
    CategoryOn,
    Large,
}

/// RCP and PPE in both large-item variants.
///
/// Bin roles: general bins shared by all categories, per-category bins, at
/// most one base bin, and (in the dedicated variant) one-item large bins.
#[derive(Clone, Debug)]
pub struct Rcp {
    rule: ThresholdRule,
    large: LargeItems,
    seen: BTreeSet<i64>,
    alpha: f64,
    on: HashSet<i64>,
    general: Vec<BinId>,
    general_load: HashMap<i64, Aggregate>,
    in_general: HashMap<ItemId, i64>,
    pools: BinPools<i64>,
    base: Option<BinId>,
    large_bins: HashSet<BinId>,
    pending: Option<(i64, Route)>,
}

impl Rcp {
    pub fn new(rule: ThresholdRule, large: LargeItems) -> Self {
        Rcp {
            rule,
            large,
            seen: BTreeSet::new(),
            alpha: 1.0,
            on: HashSet::new(),
            general: Vec::new(),
            general_load: HashMap::new(),
            in_general: HashMap::new(),
            pools: BinPools::default(),
            base: None,
            large_bins: HashSet::new(),
            pending: None,
        }
    }

    pub fn threshold(&self) -> f64 {
        let x = self.seen.len().max(1) as f64;
        let scale = match self.rule {
            ThresholdRule::Rcp => 1.0,
            ThresholdRule::Ppe => self.alpha,
        };
        scale / x.sqrt()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn is_on(&self, category: i64) -> bool {
        self.on.contains(&category)
    }

    pub fn base_bin(&self) -> Option<BinId> {
        self.base
    }

    fn route(&mut self, item: &Arrival, bins: &OpenBins<'_>) -> (Route, Option<BinId>) {
        let cat = self.pending.expect("category set").0;
        let is_large = item.size.linf() > 0.5;
        if is_large && self.large == LargeItems::Dedicated {
            return (Route::Large, None);
        }
        let load = Aggregate::linf_with(self.general_load.get(&cat), &item.size);
        if load <= self.threshold() + CAPACITY_EPS {
            return (Route::General, first_fit(bins.restrict(&self.general).iter(), &item.size));
        }
        if self.on.contains(&cat) {
            return (Route::Category, first_fit(bins.restrict(self.pools.get(&cat)).iter(), &item.size));
        }
        match self.base.and_then(|b| bins.get(b)) {
            Some(base) if base.fits(&item.size) => (Route::Base, Some(base.id())),
            Some(_) => (Route::CategoryOn, None),
            None if is_large => (Route::CategoryOn, None),
            None => (Route::Base, None),
        }
    }

    /// Recomputes a category's aggregate over its own bins and switches it
    /// off once that falls below half the threshold.
    fn check_off(&mut self, cat: i64, bins: &OpenBins<'_>) {
        if !self.on.contains(&cat) {
            return;
        }
        let mut sum: Option<SizeVector> = None;
        for bin in bins.restrict(self.pools.get(&cat)).iter() {
            sum = Some(sum.map_or(*bin.load(), |s| s.plus(bin.load())));
        }
        let linf = sum.map_or(0.0, |s| s.linf());
        if linf < self.threshold() / 2.0 {
            self.on.remove(&cat);
        }
    }
}

impl Strategy for Rcp {
    fn name(&self) -> String {
        let base = match self.rule {
            ThresholdRule::Rcp => "rcp",
            ThresholdRule::Ppe => "ppe",
        };
        match self.large {
            LargeItems::Dedicated => base.into(),
            LargeItems::Shared => format!("{base}-nolarge"),
        }
    }

    fn knowledge_need(&self) -> KnowledgeNeed {
        KnowledgeNeed::Predictions
    }

    fn select(&mut self, item: &Arrival, bins: &OpenBins<'_>) -> Placement {
        let dur = item.duration_hint().expect("predicted duration");
        let cat = seconds_class(dur);
        self.seen.insert(cat);
        self.pending = Some((cat, Route::General));
        let (route, choice) = self.route(item, bins);
        self.pending = Some((cat, route));
        choice.into()
    }

    fn placed(&mut self, item: &Arrival, bin: BinId, opened: bool, bins: &OpenBins<'_>) {
        let (cat, route) = self.pending.take().expect("select precedes placed");
        match route {
            Route::General => {
                if opened {
                    insert_sorted(&mut self.general, bin);
                }
                Aggregate::add(&mut self.general_load, cat, &item.size);
                self.in_general.insert(item.id, cat);
            }
            Route::Category => {
                if opened {
                    self.pools.insert(cat, bin);
                }
            }
            Route::CategoryOn => {
                self.pools.insert(cat, bin);
                self.on.insert(cat);
            }
            Route::Large => {
                self.large_bins.insert(bin);
            }
            Route::Base => {
                self.base = Some(bin);
                let load = bins.get(bin).expect("base bin open").load().linf();
                if load > 0.5 {
                    // Convert to a category bin of the item that tipped it.
                    self.base = None;
                    self.pools.insert(cat, bin);
                    self.on.insert(cat);
                }
            }
        }
    }

    fn departed(&mut self, item: &Departure, bins: &OpenBins<'_>) {
        if self.rule == ThresholdRule::Ppe {
            if let Some(hint) = item.departure_hint {
                let err = multiplicative_error((hint - item.arrival).max(1), item.departure - item.arrival);
                self.alpha = ppe_update_alpha(self.alpha, err);
            }
        }
        if let Some(cat) = self.in_general.remove(&item.id) {
            Aggregate::sub(&mut self.general_load, cat, &item.size);
        }
        let owner = self.pools.key_of(item.bin).copied();
        if item.bin_closed {
            if self.base == Some(item.bin) {
                self.base = None;
            }
            self.large_bins.remove(&item.bin);
            remove_sorted(&mut self.general, item.bin);
            self.pools.remove(item.bin);
        }
        if let Some(cat) = owner {
            self.check_off(cat, bins);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LaRanges {
    /// Short (< 120 min) vs long.
    Binary,
    /// Under 1 s, then power-of-two seconds.
    Geometric,
}

impl LaRanges {
    pub fn class(self, duration: i64) -> i64 {
        match self {
            LaRanges::Binary => i64::from(duration >= 120 * 60 * MICROS_PER_SEC),
            LaRanges::Geometric => seconds_class(duration),
        }
    }
}

/// Lifetime Alignment: Best Fit (ℓ∞) preferring bins whose predicted
/// remaining usage time falls in the item's own duration range.
#[derive(Clone, Copy, Debug)]
pub struct LifetimeAlignment {
    pub ranges: LaRanges,
}

impl Strategy for LifetimeAlignment {
    fn name(&self) -> String {
        match self.ranges {
            LaRanges::Binary => "la:binary".into(),
            LaRanges::Geometric => "la:geometric".into(),
        }
    }

    fn knowledge_need(&self) -> KnowledgeNeed {
        KnowledgeNeed::Predictions
    }

    fn select(&mut self, item: &Arrival, bins: &OpenBins<'_>) -> Placement {
        let class = self.ranges.class(item.duration_hint().expect("predicted duration"));
        if class == 0 {
            return best_fit(bins.iter(), &item.size, Norm::Linf).into();
        }
        let remaining = |b: &crate::engine::Bin| self.ranges.class(bins.remaining(b).unwrap_or(0));
        best_fit(bins.iter().filter(|b| remaining(b) == class), &item.size, Norm::Linf)
            .or_else(|| best_fit(bins.iter().filter(|b| remaining(b) != class), &item.size, Norm::Linf))
            .into()
    }
}

/// Runs a clairvoyant strategy with predicted departures in place of real
/// ones. Indicated closing times come from the engine, already clamped to
/// the current time.
pub struct Predicted {
    inner: Box<dyn Strategy>,
}

impl Predicted {
    pub fn new(inner: Box<dyn Strategy>) -> Self {
        Predicted { inner }
    }
}

impl Strategy for Predicted {
    fn name(&self) -> String {
        format!("predicted:{}", self.inner.name())
    }

    fn knowledge_need(&self) -> KnowledgeNeed {
        KnowledgeNeed::Predictions
    }

    fn begin(&mut self, ctx: &RunContext) {
        self.inner.begin(ctx)
    }

    fn select(&mut self, item: &Arrival, bins: &OpenBins<'_>) -> Placement {
        self.inner.select(item, bins)
    }

    fn placed(&mut self, item: &Arrival, bin: BinId, opened: bool, bins: &OpenBins<'_>) {
        self.inner.placed(item, bin, opened, bins)
    }

    fn departed(&mut self, item: &Departure, bins: &OpenBins<'_>) {
        self.inner.departed(item, bins)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{simulate_logged, BinFixture, Knowledge};
    use crate::strategy::nonclairvoyant::BestFit;
    use crate::types::{Instance, Item, TimePoint};

    const S: i64 = MICROS_PER_SEC;

    fn item(id: u64, size: &[f64], from_s: i64, to_s: i64) -> Item {
        Item::new(id, SizeVector::new(size).unwrap(), TimePoint(from_s * S), TimePoint(to_s * S))
    }

    #[test]
    fn errors_and_alpha() {
        assert_eq!(multiplicative_error(10, 10), 1.0);
        assert_eq!(multiplicative_error(5, 20), 4.0);
        assert_eq!(multiplicative_error(20, 5), 4.0);
        assert_eq!(ppe_update_alpha(1.0, 3.5), 4.0);
        assert_eq!(ppe_update_alpha(4.0, 2.0), 4.0);
        assert_eq!(ppe_update_alpha(1.0, 1.0), 1.0);
        assert_eq!(ppe_update_alpha(2.0, 8.0), 8.0);
    }

    #[test]
    fn thresholds() {
        let mut r = Rcp::new(ThresholdRule::Rcp, LargeItems::Dedicated);
        r.seen.extend([1, 2, 3, 4]);
        assert_eq!(r.threshold(), 0.5);
        let mut p = Rcp::new(ThresholdRule::Ppe, LargeItems::Dedicated);
        p.seen.extend([1, 2, 3, 4]);
        p.alpha = 4.0;
        assert_eq!(p.threshold(), 2.0);
    }

    #[test]
    fn large_item_gets_its_own_bin() {
        let mut f = BinFixture::default();
        f.push(&[0.0], TimePoint(0), Some(TimePoint(100 * S)));
        let mut r = Rcp::new(ThresholdRule::Rcp, LargeItems::Dedicated);
        let a = Arrival {
            id: ItemId(1),
            size: SizeVector::new(&[0.6]).unwrap(),
            time: TimePoint(0),
            departure_hint: Some(TimePoint(10 * S)),
        };
        assert_eq!(r.select(&a, &f.view(TimePoint(0))), Placement::OpenNew);
        assert_eq!(r.pending.unwrap().1, Route::Large);
    }

    #[test]
    fn base_bin_converts_past_half() {
        // One category (duration 10 s): threshold 1. Fill general to 1,
        // then overflow goes to the base bin, which converts past 1/2.
        let items = vec![
            item(1, &[0.5], 0, 10),
            item(2, &[0.5], 0, 10),
            item(3, &[0.3], 0, 10),
            item(4, &[0.3], 0, 10),
            item(5, &[0.3], 0, 10),
        ];
        let inst = Instance::new("rcp", 1, items).unwrap();
        let mut r = Rcp::new(ThresholdRule::Rcp, LargeItems::Dedicated);
        let log = simulate_logged(&inst, &mut r, Knowledge::Clairvoyant).unwrap();
        let bins: Vec<u64> = log.decisions.iter().map(|d| d.bin.0).collect();
        // 3 opens the base bin, 4 pushes it to 0.6 (converted, category on),
        // 5 goes to the category bins by First Fit.
        assert_eq!(bins, vec![0, 0, 1, 1, 1]);
    }

    #[test]
    fn shared_large_item_without_base_opens_category_bin() {
        let items = vec![item(1, &[0.5], 0, 10), item(2, &[0.5], 0, 10), item(3, &[0.7], 0, 10)];
        let inst = Instance::new("rcp", 1, items).unwrap();
        let mut r = Rcp::new(ThresholdRule::Rcp, LargeItems::Shared);
        let log = simulate_logged(&inst, &mut r, Knowledge::Clairvoyant).unwrap();
        assert_eq!(log.report.bins_opened, 2);
        assert!(log.decisions[2].opened_new);
    }

    #[test]
    fn category_turns_off_when_its_bins_drain() {
        // Every duration lies in [64, 128) s, so there is one category and
        // the threshold is 1.
        let items = vec![
            item(1, &[0.5], 0, 120),
            item(2, &[0.5], 0, 120),
            item(3, &[0.6], 1, 100),
            item(4, &[0.2], 2, 110),
            item(5, &[0.3], 105, 180),
        ];
        let inst = Instance::new("rcp", 1, items).unwrap();
        let mut r = Rcp::new(ThresholdRule::Rcp, LargeItems::Shared);
        let log = simulate_logged(&inst, &mut r, Knowledge::Clairvoyant).unwrap();
        let bins: Vec<u64> = log.decisions.iter().map(|d| d.bin.0).collect();
        // Item 4 joins the switched-on category bin. Once item 3 leaves, that
        // bin holds 0.2 < 1/2, the category is off and item 5 starts a base bin.
        assert_eq!(bins, vec![0, 0, 1, 1, 2]);
    }

    #[test]
    fn la_ranges() {
        assert_eq!(LaRanges::Binary.class(90 * 60 * S), 0);
        assert_eq!(LaRanges::Binary.class(120 * 60 * S), 1);
        assert_eq!(LaRanges::Geometric.class(50 * S), 6);
        assert_eq!(LaRanges::Geometric.class(40 * S), 6);
        assert_eq!(LaRanges::Geometric.class(500 * S), 9);
    }

    #[test]
    fn la_prefers_aligned_bins() {
        let mut f = BinFixture::default();
        f.push(&[0.1], TimePoint(0), Some(TimePoint(540 * S)));
        f.push(&[0.5], TimePoint(0), Some(TimePoint(80 * S)));
        f.push(&[0.6], TimePoint(0), Some(TimePoint(20 * S)));
        let view = f.view(TimePoint(40 * S));
        let a = Arrival {
            id: ItemId(1),
            size: SizeVector::new(&[0.2]).unwrap(),
            time: TimePoint(40 * S),
            departure_hint: Some(TimePoint(90 * S)),
        };
        // Remaining: 500 s, 40 s, 0 s. The item lasts 50 s, like the 40 s bin.
        let mut la = LifetimeAlignment { ranges: LaRanges::Geometric };
        assert_eq!(la.select(&a, &view), Placement::Existing(BinId(1)));
        // Short items consider everything: the 0 s bin is fullest.
        let short = Arrival { departure_hint: Some(TimePoint(40 * S + S / 2)), ..a };
        assert_eq!(la.select(&short, &view), Placement::Existing(BinId(2)));
    }

    #[test]
    fn la_binary_on_short_items_equals_best_fit() {
        let items: Vec<Item> = (0..60)
            .map(|k| item(k, &[0.1 + (k % 7) as f64 * 0.1], (k as i64 * 37) % 300, (k as i64 * 37) % 300 + 60 + k as i64))
            .collect();
        let inst = Instance::new("la", 1, items).unwrap();
        let la = simulate_logged(&inst, &mut LifetimeAlignment { ranges: LaRanges::Binary }, Knowledge::Clairvoyant)
            .unwrap();
        let bf = simulate_logged(&inst, &mut BestFit { norm: Norm::Linf }, Knowledge::NonClairvoyant).unwrap();
        assert_eq!(la.decisions, bf.decisions);
    }
}
