//! Policies that read each item's departure time (or duration) at arrival.
//!
//! All of them also run on predicted departures; the engine supplies the
//! hints and clamps indicated closing times to the current time.

use std::collections::HashMap;

use super::spec::{format_beta, format_duration};
use super::{
    duration_category, first_fit, insert_sorted, remove_sorted, Arrival, BinPools, Departure,
    KnowledgeNeed, Placement, RunContext, Strategy,
};
use crate::engine::OpenBins;
use crate::types::{BinId, ItemId, SizeVector, TimePoint, CAPACITY_EPS, MICROS_PER_SEC};

fn hinted_departure(item: &Arrival) -> TimePoint {
    item.departure_hint
        .expect("the engine supplies departure hints to clairvoyant strategies")
}

fn hinted_duration(item: &Arrival) -> i64 {
    hinted_departure(item) - item.time
}

/// `floor(departure / rho)`; everything falls in interval 0 when `rho` is
/// unbounded.
pub fn departure_category(departure: TimePoint, rho: Option<i64>) -> i64 {
    match rho {
        Some(rho) => departure.0.div_euclid(rho),
        None => 0,
    }
}

/// First Fit within pools of items whose departures share a `rho`-interval.
#[derive(Clone, Debug)]
pub struct ClassifyByDepartureTime {
    rho: Option<i64>,
    pools: BinPools<i64>,
    pending: i64,
}

impl ClassifyByDepartureTime {
    /// `rho` in microseconds; `None` means an unbounded interval.
    pub fn new(rho: Option<i64>) -> Self {
        assert!(rho.is_none_or(|r| r > 0), "rho must be positive");
        ClassifyByDepartureTime {
            rho,
            pools: BinPools::default(),
            pending: 0,
        }
    }
}

impl Strategy for ClassifyByDepartureTime {
    fn name(&self) -> String {
        format!("classify-departure:{}", self.rho.map_or("inf".into(), format_duration))
    }

    fn knowledge_need(&self) -> KnowledgeNeed {
        KnowledgeNeed::Departures
    }

    fn select(&mut self, item: &Arrival, bins: &OpenBins<'_>) -> Placement {
        self.pending = departure_category(hinted_departure(item), self.rho);
        first_fit(bins.restrict(self.pools.get(&self.pending)).iter(), &item.size).into()
    }

    fn placed(&mut self, _: &Arrival, bin: BinId, opened: bool, _: &OpenBins<'_>) {
        if opened {
            self.pools.insert(self.pending, bin);
        }
    }

    fn departed(&mut self, item: &Departure, _: &OpenBins<'_>) {
        if item.bin_closed {
            self.pools.remove(item.bin);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NrtMode {
    Standard,
    Prioritized,
}

/// Nearest Remaining Time: the fitting bin whose indicated closing time is
/// nearest the item's departure. The prioritized mode first restricts to
/// bins that already close at or after the departure.
#[derive(Clone, Copy, Debug)]
pub struct Nrt {
    pub mode: NrtMode,
}

impl Strategy for Nrt {
    fn name(&self) -> String {
        match self.mode {
            NrtMode::Standard => "nrt:standard".into(),
            NrtMode::Prioritized => "nrt:prioritized".into(),
        }
    }

    fn knowledge_need(&self) -> KnowledgeNeed {
        KnowledgeNeed::Departures
    }

    fn select(&mut self, item: &Arrival, bins: &OpenBins<'_>) -> Placement {
        let dep = hinted_departure(item);
        // Key: (class, distance, closing, id); smaller is better.
        let mut best: Option<(bool, i64, TimePoint, BinId)> = None;
        for bin in bins.iter().filter(|b| b.fits(&item.size)) {
            let closing = bins.closing(bin).expect("clairvoyant bins carry closing times");
            let behind = self.mode == NrtMode::Prioritized && closing < dep;
            let key = (behind, (closing - dep).abs(), closing, bin.id());
            if best.is_none_or(|b| key < b) {
                best = Some(key);
            }
        }
        best.map(|k| k.3).into()
    }
}

/// The fitting bin with the latest indicated closing time.
#[derive(Clone, Copy, Debug, Default)]
pub struct Greedy;

impl Strategy for Greedy {
    fn name(&self) -> String {
        "greedy".into()
    }

    fn knowledge_need(&self) -> KnowledgeNeed {
        KnowledgeNeed::Departures
    }

    fn select(&mut self, item: &Arrival, bins: &OpenBins<'_>) -> Placement {
        let mut best: Option<(TimePoint, BinId)> = None;
        for bin in bins.iter().filter(|b| b.fits(&item.size)) {
            let closing = bins.closing(bin).expect("clairvoyant bins carry closing times");
            if best.is_none_or(|(c, _)| closing > c) {
                best = Some((closing, bin.id()));
            }
        }
        best.map(|b| b.1).into()
    }
}

/// First Fit within pools of items whose durations share a geometric range
/// anchored at the smallest duration of the run.
#[derive(Clone, Debug)]
pub struct ClassifyByDuration {
    beta: f64,
    base: i64,
    pools: BinPools<i64>,
    pending: i64,
}

impl ClassifyByDuration {
    pub fn new(beta: f64) -> Self {
        assert!(beta > 1.0, "beta must exceed 1");
        ClassifyByDuration {
            beta,
            base: 1,
            pools: BinPools::default(),
            pending: 0,
        }
    }
}

impl Strategy for ClassifyByDuration {
    fn name(&self) -> String {
        format!("classify-duration:{}", format_beta(self.beta))
    }

    fn knowledge_need(&self) -> KnowledgeNeed {
        KnowledgeNeed::Departures
    }

    fn begin(&mut self, ctx: &RunContext) {
        self.base = ctx.min_duration_hint.unwrap_or(1).max(1);
    }

    fn select(&mut self, item: &Arrival, bins: &OpenBins<'_>) -> Placement {
        self.pending = duration_category(hinted_duration(item).max(1), self.beta, self.base);
        first_fit(bins.restrict(self.pools.get(&self.pending)).iter(), &item.size).into()
    }

    fn placed(&mut self, _: &Arrival, bin: BinId, opened: bool, _: &OpenBins<'_>) {
        if opened {
            self.pools.insert(self.pending, bin);
        }
    }

    fn departed(&mut self, item: &Departure, _: &OpenBins<'_>) {
        if item.bin_closed {
            self.pools.remove(item.bin);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum HybridVariant {
    /// Categories keyed by duration range and arrival window.
    Full,
    /// Categories keyed by duration range only.
    Reduced,
}

/// Hybrid category: normalized duration index (1 for the range holding the
/// run's shortest duration) and arrival window index (0 when unused).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CategoryKey {
    pub duration_index: i64,
    pub arrival_index: i64,
}

/// Running ℓ∞ aggregate of one category's items in shared bins.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Aggregate {
    pub sum: SizeVector,
    pub count: u32,
}

impl Aggregate {
    pub fn linf_with(agg: Option<&Aggregate>, size: &SizeVector) -> f64 {
        agg.map_or(*size, |a| a.sum.plus(size)).linf()
    }

    pub fn add<K: std::hash::Hash + Eq>(map: &mut HashMap<K, Aggregate>, key: K, size: &SizeVector) {
        let a = map.entry(key).or_insert(Aggregate {
            sum: SizeVector::zeros(size.dims()),
            count: 0,
        });
        a.sum.add_assign(size);
        a.count += 1;
    }

    pub fn sub<K: std::hash::Hash + Eq>(map: &mut HashMap<K, Aggregate>, key: K, size: &SizeVector) {
        if let Some(a) = map.get_mut(&key) {
            a.count -= 1;
            if a.count == 0 {
                // Drop the entry so float residue never accumulates.
                map.remove(&key);
            } else {
                a.sum.sub_assign(size);
            }
        }
    }
}

/// Hybrid: a category's items share general bins (First Fit) while their
/// active aggregate there stays within `1/(2√i)`; beyond that they go to
/// the category's own bins.
#[derive(Clone, Debug)]
pub struct Hybrid {
    variant: HybridVariant,
    offset: i64,
    general: Vec<BinId>,
    pools: BinPools<CategoryKey>,
    general_load: HashMap<CategoryKey, Aggregate>,
    in_general: HashMap<ItemId, CategoryKey>,
    pending: Option<(CategoryKey, bool)>,
}

impl Hybrid {
    pub fn new(variant: HybridVariant) -> Self {
        Hybrid {
            variant,
            offset: 1,
            general: Vec::new(),
            pools: BinPools::default(),
            general_load: HashMap::new(),
            in_general: HashMap::new(),
            pending: None,
        }
    }

    pub fn category(&self, arrival: TimePoint, duration: i64) -> CategoryKey {
        let j = duration_category(duration.max(1), 2.0, MICROS_PER_SEC);
        let arrival_index = match self.variant {
            HybridVariant::Reduced => 0,
            HybridVariant::Full => {
                let window = MICROS_PER_SEC as f64 * 2f64.powi(j as i32);
                (arrival.0 as f64 / window).floor() as i64 + 1
            }
        };
        CategoryKey {
            duration_index: j - self.offset + 1,
            arrival_index,
        }
    }

    /// Share of capacity a category may occupy in the general bins.
    pub fn threshold(duration_index: i64) -> f64 {
        1.0 / (2.0 * (duration_index.max(1) as f64).sqrt())
    }
}

impl Strategy for Hybrid {
    fn name(&self) -> String {
        match self.variant {
            HybridVariant::Full => "hybrid".into(),
            HybridVariant::Reduced => "reduced-hybrid".into(),
        }
    }

    fn knowledge_need(&self) -> KnowledgeNeed {
        KnowledgeNeed::Departures
    }

    fn begin(&mut self, ctx: &RunContext) {
        let min = ctx.min_duration_hint.unwrap_or(MICROS_PER_SEC).max(1);
        self.offset = duration_category(min, 2.0, MICROS_PER_SEC);
    }

    fn select(&mut self, item: &Arrival, bins: &OpenBins<'_>) -> Placement {
        let key = self.category(item.time, hinted_duration(item));
        let load = Aggregate::linf_with(self.general_load.get(&key), &item.size);
        let general = load <= Self::threshold(key.duration_index) + CAPACITY_EPS;
        self.pending = Some((key, general));
        let pool = if general {
            &self.general[..]
        } else {
            self.pools.get(&key)
        };
        first_fit(bins.restrict(pool).iter(), &item.size).into()
    }

    fn placed(&mut self, item: &Arrival, bin: BinId, opened: bool, _: &OpenBins<'_>) {
        let (key, general) = self.pending.take().expect("select precedes placed");
        if general {
            if opened {
                insert_sorted(&mut self.general, bin);
            }
            Aggregate::add(&mut self.general_load, key, &item.size);
            self.in_general.insert(item.id, key);
        } else if opened {
            self.pools.insert(key, bin);
        }
    }

    fn departed(&mut self, item: &Departure, _: &OpenBins<'_>) {
        if let Some(key) = self.in_general.remove(&item.id) {
            Aggregate::sub(&mut self.general_load, key, &item.size);
        }
        if item.bin_closed && !remove_sorted(&mut self.general, item.bin) {
            self.pools.remove(item.bin);
        }
    }
}

/// Builds a fresh inner strategy for one dimension class.
pub type StrategyFactory = Box<dyn Fn() -> Box<dyn Strategy> + Send>;

/// Splits items by the dimension of their largest size component and packs
/// each class separately with its own inner strategy and bins.
pub struct DirectSum {
    inner_name: String,
    need: KnowledgeNeed,
    factory: StrategyFactory,
    classes: Vec<Box<dyn Strategy>>,
    bins: Vec<Vec<BinId>>,
    class_of_bin: HashMap<BinId, usize>,
}

impl DirectSum {
    pub fn new(factory: StrategyFactory) -> Self {
        let probe = factory();
        DirectSum {
            inner_name: probe.name(),
            need: probe.knowledge_need(),
            factory,
            classes: Vec::new(),
            bins: Vec::new(),
            class_of_bin: HashMap::new(),
        }
    }

    /// Class of an item: its argmax dimension, lowest index on ties.
    pub fn class_of(size: &SizeVector) -> usize {
        size.argmax()
    }
}

impl Strategy for DirectSum {
    fn name(&self) -> String {
        format!("direct-sum:{}", self.inner_name)
    }

    fn knowledge_need(&self) -> KnowledgeNeed {
        self.need
    }

    fn begin(&mut self, ctx: &RunContext) {
        self.classes = (0..ctx.d).map(|_| (self.factory)()).collect();
        for inner in &mut self.classes {
            inner.begin(ctx);
        }
        self.bins = vec![Vec::new(); ctx.d];
        self.class_of_bin.clear();
    }

    fn select(&mut self, item: &Arrival, bins: &OpenBins<'_>) -> Placement {
        let class = Self::class_of(&item.size);
        self.classes[class].select(item, &bins.restrict(&self.bins[class]))
    }

    fn placed(&mut self, item: &Arrival, bin: BinId, opened: bool, bins: &OpenBins<'_>) {
        let class = Self::class_of(&item.size);
        if opened {
            insert_sorted(&mut self.bins[class], bin);
            self.class_of_bin.insert(bin, class);
        }
        self.classes[class].placed(item, bin, opened, &bins.restrict(&self.bins[class]));
    }

    fn departed(&mut self, item: &Departure, bins: &OpenBins<'_>) {
        let class = self.class_of_bin[&item.bin];
        if item.bin_closed {
            remove_sorted(&mut self.bins[class], item.bin);
            self.class_of_bin.remove(&item.bin);
        }
        self.classes[class].departed(item, &bins.restrict(&self.bins[class]));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{simulate_logged, BinFixture, Knowledge};
    use crate::strategy::nonclairvoyant::FirstFit;
    use crate::types::{Instance, Item};

    const S: i64 = MICROS_PER_SEC;

    fn arrival(size: &[f64], at_s: i64, dep_s: i64) -> Arrival {
        Arrival {
            id: ItemId(99),
            size: SizeVector::new(size).unwrap(),
            time: TimePoint(at_s * S),
            departure_hint: Some(TimePoint(dep_s * S)),
        }
    }

    fn item(id: u64, size: &[f64], from_s: i64, to_s: i64) -> Item {
        Item::new(id, SizeVector::new(size).unwrap(), TimePoint(from_s * S), TimePoint(to_s * S))
    }

    fn closings(cs: &[i64]) -> BinFixture {
        let mut f = BinFixture::default();
        for &c in cs {
            f.push(&[0.2], TimePoint(0), Some(TimePoint(c * S)));
        }
        f
    }

    #[test]
    fn departure_categories() {
        assert_eq!(departure_category(TimePoint(50_000 * S), Some(21_600 * S)), 2);
        assert_eq!(departure_category(TimePoint(21_600 * S), Some(21_600 * S)), 1);
        assert_eq!(departure_category(TimePoint(10_000_000 * S), None), 0);
    }

    #[test]
    fn classify_departure_separates_intervals() {
        let inst = Instance::new(
            "cd",
            1,
            vec![item(1, &[0.1], 0, 50), item(2, &[0.1], 1, 60), item(3, &[0.1], 2, 150)],
        )
        .unwrap();
        let mut s = ClassifyByDepartureTime::new(Some(100 * S));
        let log = simulate_logged(&inst, &mut s, Knowledge::Clairvoyant).unwrap();
        let bins: Vec<u64> = log.decisions.iter().map(|d| d.bin.0).collect();
        assert_eq!(bins, vec![0, 0, 1]);
        assert_eq!(log.report.anyfit_violations, 1);
    }

    #[test]
    fn nrt_examples() {
        let f = closings(&[100, 200]);
        let v = f.view(TimePoint(10 * S));
        let a = arrival(&[0.1], 10, 140);
        assert_eq!(Nrt { mode: NrtMode::Standard }.select(&a, &v), Placement::Existing(BinId(0)));
        assert_eq!(Nrt { mode: NrtMode::Prioritized }.select(&a, &v), Placement::Existing(BinId(1)));

        let f = closings(&[150, 300]);
        let v = f.view(TimePoint(10 * S));
        assert_eq!(Nrt { mode: NrtMode::Prioritized }.select(&a, &v), Placement::Existing(BinId(0)));

        // Equal distance: the earlier closing wins.
        let f = closings(&[160, 120]);
        let v = f.view(TimePoint(10 * S));
        assert_eq!(Nrt { mode: NrtMode::Standard }.select(&a, &v), Placement::Existing(BinId(1)));
    }

    #[test]
    fn greedy_examples() {
        let f = closings(&[100, 200, 150]);
        let v = f.view(TimePoint(10 * S));
        assert_eq!(Greedy.select(&arrival(&[0.1], 10, 50), &v), Placement::Existing(BinId(1)));

        let mut f = BinFixture::default();
        f.push(&[0.2], TimePoint(0), Some(TimePoint(100 * S)));
        f.push(&[0.9], TimePoint(0), Some(TimePoint(200 * S)));
        let v = f.view(TimePoint(10 * S));
        assert_eq!(Greedy.select(&arrival(&[0.5], 10, 50), &v), Placement::Existing(BinId(0)));
        assert_eq!(Greedy.select(&arrival(&[0.85], 10, 50), &v), Placement::OpenNew);
    }

    #[test]
    fn classify_duration_splits_long_and_short() {
        let inst = Instance::new("cd", 1, vec![item(1, &[0.1], 0, 1), item(2, &[0.1], 0, 100)]).unwrap();
        let log = simulate_logged(&inst, &mut ClassifyByDuration::new(2.0), Knowledge::Clairvoyant).unwrap();
        assert_eq!(log.report.bins_opened, 2);
        assert!(log.report.anyfit_violations >= 1);
    }

    #[test]
    fn hybrid_threshold_arithmetic() {
        assert_eq!(Hybrid::threshold(1), 0.5);
        assert_eq!(Hybrid::threshold(4), 0.25);

        let mut h = Hybrid::new(HybridVariant::Reduced);
        h.begin(&RunContext { d: 1, min_duration_hint: Some(S) });
        let empty = BinFixture::default();
        h.select(&arrival(&[0.3], 0, 1), &empty.view(TimePoint(0)));
        assert!(h.pending.unwrap().1, "0.3 <= 0.5 goes to general bins");

        // Duration 8 s is range j = 4 → i = 4 with offset 1.
        let key = h.category(TimePoint(0), 8 * S);
        assert_eq!(key.duration_index, 4);
        Aggregate::add(&mut h.general_load, key, &SizeVector::new(&[0.2]).unwrap());
        h.select(&arrival(&[0.1], 0, 8), &empty.view(TimePoint(0)));
        assert_eq!(h.pending.unwrap(), (key, false));
    }

    #[test]
    fn hybrid_offset_anchors_shortest_range() {
        let mut h = Hybrid::new(HybridVariant::Reduced);
        h.begin(&RunContext { d: 1, min_duration_hint: Some(300 * S) });
        assert_eq!(h.category(TimePoint(0), 300 * S).duration_index, 1);
        assert_eq!(h.category(TimePoint(0), 600 * S).duration_index, 2);
    }

    #[test]
    fn full_hybrid_splits_arrival_windows() {
        // Both durations are 3 s (range [2, 4) s), arrivals 2 s and 5 s fall
        // in different 4 s windows.
        let inst = Instance::new(
            "hy",
            1,
            vec![item(1, &[0.3], 2, 5), item(2, &[0.3], 3, 6), item(3, &[0.3], 5, 8), item(4, &[0.3], 5, 8)],
        )
        .unwrap();
        let full = simulate_logged(&inst, &mut Hybrid::new(HybridVariant::Full), Knowledge::Clairvoyant).unwrap();
        let reduced =
            simulate_logged(&inst, &mut Hybrid::new(HybridVariant::Reduced), Knowledge::Clairvoyant).unwrap();
        assert_ne!(full.decisions, reduced.decisions);
        let h = Hybrid::new(HybridVariant::Full);
        assert_ne!(h.category(TimePoint(2 * S), 3 * S), h.category(TimePoint(5 * S), 3 * S));
        let r = Hybrid::new(HybridVariant::Reduced);
        assert_eq!(r.category(TimePoint(2 * S), 3 * S), r.category(TimePoint(5 * S), 3 * S));
    }

    #[test]
    fn direct_sum_classes() {
        assert_eq!(DirectSum::class_of(&SizeVector::new(&[0.3, 0.5]).unwrap()), 1);
        assert_eq!(DirectSum::class_of(&SizeVector::new(&[0.4, 0.4]).unwrap()), 0);

        let same = Instance::new("ds", 2, vec![item(1, &[0.3, 0.1], 0, 5), item(2, &[0.4, 0.2], 0, 5)]).unwrap();
        let mut ds = DirectSum::new(Box::new(|| Box::new(FirstFit)));
        assert_eq!(simulate_logged(&same, &mut ds, Knowledge::Clairvoyant).unwrap().report.bins_opened, 1);

        let split = Instance::new("ds", 2, vec![item(1, &[0.3, 0.1], 0, 5), item(2, &[0.1, 0.3], 0, 5)]).unwrap();
        let mut ds = DirectSum::new(Box::new(|| Box::new(FirstFit)));
        assert_eq!(simulate_logged(&split, &mut ds, Knowledge::Clairvoyant).unwrap().report.bins_opened, 2);
    }
}
