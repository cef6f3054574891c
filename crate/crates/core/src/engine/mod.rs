//! Event-driven replay of an [`Instance`] through a [`Strategy`].
//!
//! The engine owns every bin: it applies placements, keeps loads and
//! indicated closing times current, closes bins when their last item departs
//! and accrues usage time. Strategies only choose a bin.

pub mod audit;
pub mod bound;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::strategy::learning::PredictionTable;
use crate::strategy::{Arrival, Departure, KnowledgeNeed, Placement, RunContext, Strategy};
use crate::types::{fits_unchecked, BinId, Instance, ItemId, SizeVector, TimePoint};

pub use audit::{
    audit_any_fit, audit_capacity, concurrent_bins_timeline, timeline_integral, write_decision_log,
};
pub use bound::lower_bound;

/// Loads are rebuilt from the active-item set after this many incremental updates.
pub const LOAD_RECOMPUTE_INTERVAL: u32 = 1024;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EventKind {
    // Declaration order matters: departures sort before arrivals at equal time.
    Departure,
    Arrival,
}

/// One endpoint of an item's active interval.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Event {
    pub time: TimePoint,
    pub kind: EventKind,
    pub item_id: ItemId,
    /// Position of the item in [`Instance::items`].
    pub index: u32,
}

/// All arrival and departure events of an instance in replay order.
///
/// At equal times every departure precedes every arrival, so capacity freed
/// at `t` is usable by an item arriving at `t`. Ties within a kind break by
/// item id.
pub fn build_events(instance: &Instance) -> Vec<Event> {
    let mut events = Vec::with_capacity(2 * instance.len());
    for (index, item) in instance.items().iter().enumerate() {
        let index = index as u32;
        events.push(Event {
            time: item.arrival,
            kind: EventKind::Arrival,
            item_id: item.id,
            index,
        });
        events.push(Event {
            time: item.departure,
            kind: EventKind::Departure,
            item_id: item.id,
            index,
        });
    }
    events.sort_unstable();
    events
}

/// What the strategy is allowed to know about departures.
#[derive(Clone, Copy, Debug)]
pub enum Knowledge<'a> {
    NonClairvoyant,
    Clairvoyant,
    Predicted(&'a PredictionTable),
}

impl Knowledge<'_> {
    pub fn label(&self) -> &'static str {
        match self {
            Knowledge::NonClairvoyant => "non-clairvoyant",
            Knowledge::Clairvoyant => "clairvoyant",
            Knowledge::Predicted(_) => "predicted",
        }
    }
}

/// An open physical machine as seen by strategies.
#[derive(Clone, Debug)]
pub struct Bin {
    id: BinId,
    opened_at: TimePoint,
    last_access: TimePoint,
    access_seq: u64,
    load: SizeVector,
    items: BTreeSet<u32>,
    hints: BTreeMap<TimePoint, u32>,
    updates: u32,
}

impl Bin {
    pub fn id(&self) -> BinId {
        self.id
    }

    pub fn opened_at(&self) -> TimePoint {
        self.opened_at
    }

    /// Time the bin last received an item.
    pub fn last_access(&self) -> TimePoint {
        self.last_access
    }

    /// Global placement counter at the last access; orders bins accessed at
    /// the same instant.
    pub fn access_seq(&self) -> u64 {
        self.access_seq
    }

    pub fn load(&self) -> &SizeVector {
        &self.load
    }

    pub fn available(&self) -> SizeVector {
        self.load.available()
    }

    pub fn item_count(&self) -> usize {
        self.items.len()
    }

    /// Latest known (real or predicted) departure among active items, not
    /// clamped to the current time. `None` in non-clairvoyant runs.
    pub fn latest_hint(&self) -> Option<TimePoint> {
        self.hints.keys().next_back().copied()
    }

    pub fn fits(&self, size: &SizeVector) -> bool {
        fits_unchecked(&self.load, size)
    }
}

/// Read-only view of a set of open bins in ascending open order.
#[derive(Clone, Copy)]
pub struct OpenBins<'a> {
    now: TimePoint,
    slab: &'a [Option<Bin>],
    order: &'a [BinId],
}

impl<'a> OpenBins<'a> {
    pub fn now(&self) -> TimePoint {
        self.now
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn ids(&self) -> &'a [BinId] {
        self.order
    }

    pub fn iter(&self) -> impl Iterator<Item = &'a Bin> + 'a {
        let slab = self.slab;
        self.order
            .iter()
            .map(move |id| slab[id.0 as usize].as_ref().expect("open bin"))
    }

    /// Looks up any currently open bin, even one outside this view's subset.
    pub fn get(&self, id: BinId) -> Option<&'a Bin> {
        self.slab.get(id.0 as usize).and_then(Option::as_ref)
    }

    /// Indicated closing time: the latest known departure among the bin's
    /// active items, clamped so it is never earlier than now.
    pub fn closing(&self, bin: &Bin) -> Option<TimePoint> {
        bin.latest_hint().map(|c| c.max(self.now))
    }

    /// Predicted remaining usage time, never negative.
    pub fn remaining(&self, bin: &Bin) -> Option<i64> {
        self.closing(bin).map(|c| c - self.now)
    }

    /// Same clock and bins, restricted to `order` (which must list open bins
    /// in ascending id order).
    pub fn restrict<'b>(&self, order: &'b [BinId]) -> OpenBins<'b>
    where
        'a: 'b,
    {
        OpenBins {
            now: self.now,
            slab: self.slab,
            order,
        }
    }
}

/// Hand-built open bins for exercising a strategy's `select` in isolation.
#[derive(Default)]
pub struct BinFixture {
    slab: Vec<Option<Bin>>,
    order: Vec<BinId>,
}

impl BinFixture {
    /// Adds an open bin with the given load and optional indicated closing
    /// time. Bins get ascending ids and access order in insertion order.
    pub fn push(&mut self, load: &[f64], opened_at: TimePoint, closing: Option<TimePoint>) -> BinId {
        let id = BinId(self.slab.len() as u64);
        let mut hints = BTreeMap::new();
        if let Some(c) = closing {
            hints.insert(c, 1);
        }
        self.slab.push(Some(Bin {
            id,
            opened_at,
            last_access: opened_at,
            access_seq: id.0 + 1,
            load: SizeVector::from_raw(load),
            items: BTreeSet::new(),
            hints,
            updates: 0,
        }));
        self.order.push(id);
        id
    }

    /// Records an access to `bin` at `at`, making it the most recent.
    pub fn touch(&mut self, bin: BinId, at: TimePoint) {
        let seq = self.slab.iter().flatten().map(|b| b.access_seq).max().unwrap_or(0) + 1;
        let b = self.slab[bin.0 as usize].as_mut().expect("fixture bin");
        b.last_access = at;
        b.access_seq = seq;
    }

    pub fn view(&self, now: TimePoint) -> OpenBins<'_> {
        OpenBins {
            now,
            slab: &self.slab,
            order: &self.order,
        }
    }
}

/// One placement decision, recorded at the item's arrival.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decision {
    pub time: TimePoint,
    pub item: ItemId,
    pub bin: BinId,
    pub opened_new: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub instance: String,
    pub strategy: String,
    pub knowledge: String,
    pub items: usize,
    /// Sum over bins of (close - open), microseconds.
    pub total_usage: i64,
    pub lower_bound: i64,
    pub performance_ratio: f64,
    pub max_concurrent_bins: usize,
    pub anyfit_violations: u64,
    pub bins_opened: u64,
}

/// A report together with the full decision log.
#[derive(Clone, Debug)]
pub struct RunLog {
    pub report: RunReport,
    pub decisions: Vec<Decision>,
}

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("strategy {strategy} chose bin {bin} for item {item}, but that bin is not open")]
    UnknownBin { strategy: String, item: ItemId, bin: BinId },
    #[error("strategy {strategy} chose bin {bin} for item {item}, which does not fit")]
    CapacityViolation { strategy: String, item: ItemId, bin: BinId },
    #[error("no prediction for item {0}")]
    MissingPrediction(ItemId),
    #[error("prediction for item {0} must be a positive duration")]
    BadPrediction(ItemId),
    #[error("strategy {strategy} needs {need:?} but the run is {knowledge}")]
    KnowledgeRequired {
        strategy: String,
        need: KnowledgeNeed,
        knowledge: &'static str,
    },
}

/// Replays `instance` through `strategy` and returns the usage report.
pub fn simulate(
    instance: &Instance,
    strategy: &mut dyn Strategy,
    knowledge: Knowledge<'_>,
) -> Result<RunReport, SimError> {
    Engine::new(instance, strategy, knowledge, false)?
        .run()
        .map(|log| log.report)
}

/// Like [`simulate`] but also keeps every placement decision.
pub fn simulate_logged(
    instance: &Instance,
    strategy: &mut dyn Strategy,
    knowledge: Knowledge<'_>,
) -> Result<RunLog, SimError> {
    Engine::new(instance, strategy, knowledge, true)?.run()
}

struct Engine<'r> {
    instance: &'r Instance,
    strategy: &'r mut dyn Strategy,
    knowledge: Knowledge<'r>,
    hints: Option<Vec<TimePoint>>,
    slab: Vec<Option<Bin>>,
    open: Vec<BinId>,
    item_bin: Vec<Option<BinId>>,
    seq: u64,
    total_usage: i64,
    max_open: usize,
    violations: u64,
    decisions: Option<Vec<Decision>>,
}

impl<'r> Engine<'r> {
    fn new(
        instance: &'r Instance,
        strategy: &'r mut dyn Strategy,
        knowledge: Knowledge<'r>,
        record: bool,
    ) -> Result<Self, SimError> {
        let need = strategy.knowledge_need();
        let allowed = match (need, knowledge) {
            (KnowledgeNeed::Oblivious, _) => true,
            (_, Knowledge::NonClairvoyant) => false,
            _ => true,
        };
        if !allowed {
            return Err(SimError::KnowledgeRequired {
                strategy: strategy.name(),
                need,
                knowledge: knowledge.label(),
            });
        }
        let hints = match knowledge {
            Knowledge::NonClairvoyant => None,
            Knowledge::Clairvoyant => Some(instance.items().iter().map(|it| it.departure).collect()),
            Knowledge::Predicted(table) => {
                let mut out = Vec::with_capacity(instance.len());
                for item in instance.items() {
                    let dur = table
                        .duration(item.id)
                        .ok_or(SimError::MissingPrediction(item.id))?;
                    if dur <= 0 {
                        return Err(SimError::BadPrediction(item.id));
                    }
                    out.push(item.arrival + dur);
                }
                Some(out)
            }
        };
        Ok(Engine {
            instance,
            strategy,
            knowledge,
            hints,
            slab: Vec::new(),
            open: Vec::new(),
            item_bin: vec![None; instance.len()],
            seq: 0,
            total_usage: 0,
            max_open: 0,
            violations: 0,
            decisions: record.then(|| Vec::with_capacity(instance.len())),
        })
    }

    fn view(&self, now: TimePoint) -> OpenBins<'_> {
        OpenBins {
            now,
            slab: &self.slab,
            order: &self.open,
        }
    }

    fn run(mut self) -> Result<RunLog, SimError> {
        let items = self.instance.items();
        let min_hint = self.hints.as_ref().map(|h| {
            items
                .iter()
                .zip(h)
                .map(|(it, &dep)| dep - it.arrival)
                .min()
                .unwrap_or(1)
        });
        self.strategy.begin(&RunContext {
            d: self.instance.d(),
            min_duration_hint: min_hint,
        });

        for event in build_events(self.instance) {
            match event.kind {
                EventKind::Arrival => self.arrive(event)?,
                EventKind::Departure => self.depart(event),
            }
        }
        debug_assert!(self.open.is_empty());

        let lower_bound = self.instance.lower_bound();
        let report = RunReport {
            instance: self.instance.name().to_string(),
            strategy: self.strategy.name(),
            knowledge: self.knowledge.label().to_string(),
            items: self.instance.len(),
            total_usage: self.total_usage,
            lower_bound,
            performance_ratio: self.total_usage as f64 / lower_bound as f64,
            max_concurrent_bins: self.max_open,
            anyfit_violations: self.violations,
            bins_opened: self.slab.len() as u64,
        };
        Ok(RunLog {
            report,
            decisions: self.decisions.unwrap_or_default(),
        })
    }

    fn arrival_of(&self, index: usize) -> Arrival {
        let item = &self.instance.items()[index];
        Arrival {
            id: item.id,
            size: item.size,
            time: item.arrival,
            departure_hint: self.hints.as_ref().map(|h| h[index]),
        }
    }

    fn arrive(&mut self, event: Event) -> Result<(), SimError> {
        let index = event.index as usize;
        let arrival = self.arrival_of(index);
        let now = event.time;
        let view = OpenBins {
            now,
            slab: &self.slab,
            order: &self.open,
        };
        let choice = self.strategy.select(&arrival, &view);

        let (bin_id, opened) = match choice {
            Placement::Existing(bin_id) => {
                let bin = self
                    .slab
                    .get(bin_id.0 as usize)
                    .and_then(Option::as_ref)
                    .ok_or_else(|| SimError::UnknownBin {
                        strategy: self.strategy.name(),
                        item: arrival.id,
                        bin: bin_id,
                    })?;
                if !bin.fits(&arrival.size) {
                    return Err(SimError::CapacityViolation {
                        strategy: self.strategy.name(),
                        item: arrival.id,
                        bin: bin_id,
                    });
                }
                (bin_id, false)
            }
            Placement::OpenNew => {
                if self.view(now).iter().any(|b| b.fits(&arrival.size)) {
                    self.violations += 1;
                }
                let bin_id = BinId(self.slab.len() as u64);
                self.slab.push(Some(Bin {
                    id: bin_id,
                    opened_at: now,
                    last_access: now,
                    access_seq: 0,
                    load: SizeVector::zeros(self.instance.d()),
                    items: BTreeSet::new(),
                    hints: BTreeMap::new(),
                    updates: 0,
                }));
                self.open.push(bin_id);
                self.max_open = self.max_open.max(self.open.len());
                (bin_id, true)
            }
        };

        self.seq += 1;
        let bin = self.slab[bin_id.0 as usize].as_mut().unwrap();
        bin.load.add_assign(&arrival.size);
        bin.items.insert(event.index);
        if let Some(hint) = arrival.departure_hint {
            *bin.hints.entry(hint).or_insert(0) += 1;
        }
        bin.last_access = now;
        bin.access_seq = self.seq;
        bin.updates += 1;
        if bin.updates > LOAD_RECOMPUTE_INTERVAL {
            recompute_load(bin, self.instance);
        }
        self.item_bin[index] = Some(bin_id);

        if let Some(log) = self.decisions.as_mut() {
            log.push(Decision {
                time: now,
                item: arrival.id,
                bin: bin_id,
                opened_new: opened,
            });
        }
        // The strategy sees the bin with the item already in it.
        let view = OpenBins {
            now,
            slab: &self.slab,
            order: &self.open,
        };
        self.strategy.placed(&arrival, bin_id, opened, &view);
        Ok(())
    }

    fn depart(&mut self, event: Event) {
        let index = event.index as usize;
        let item = &self.instance.items()[index];
        let bin_id = self.item_bin[index].take().expect("departing item was placed");
        let hint = self.hints.as_ref().map(|h| h[index]);

        let slot = &mut self.slab[bin_id.0 as usize];
        let bin = slot.as_mut().expect("bin of a departing item is open");
        bin.items.remove(&event.index);
        bin.load.sub_assign(&item.size);
        if let Some(hint) = hint {
            if let Some(count) = bin.hints.get_mut(&hint) {
                *count -= 1;
                if *count == 0 {
                    bin.hints.remove(&hint);
                }
            }
        }
        bin.updates += 1;
        let closed = bin.items.is_empty();
        if closed {
            self.total_usage += event.time - bin.opened_at;
            *slot = None;
            let pos = self.open.binary_search(&bin_id).expect("open list");
            self.open.remove(pos);
        } else if bin.updates > LOAD_RECOMPUTE_INTERVAL {
            recompute_load(bin, self.instance);
        }

        let departure = Departure {
            id: item.id,
            bin: bin_id,
            size: item.size,
            arrival: item.arrival,
            departure: item.departure,
            departure_hint: hint,
            bin_closed: closed,
        };
        let view = OpenBins {
            now: event.time,
            slab: &self.slab,
            order: &self.open,
        };
        self.strategy.departed(&departure, &view);
    }
}

fn recompute_load(bin: &mut Bin, instance: &Instance) {
    let mut load = SizeVector::zeros(instance.d());
    for &i in &bin.items {
        load.add_assign(&instance.items()[i as usize].size);
    }
    bin.load = load;
    bin.updates = 0;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strategy::nonclairvoyant::{FirstFit, NextFit};
    use crate::strategy::spec::StrategySpec;
    use crate::testkit::random::{random_instance, RandomTrace};
    use crate::types::{Item, MICROS_PER_SEC};

    const S: i64 = MICROS_PER_SEC;

    fn item(id: u64, size: &[f64], from_s: i64, to_s: i64) -> Item {
        Item::new(id, SizeVector::new(size).unwrap(), TimePoint(from_s * S), TimePoint(to_s * S))
    }

    #[test]
    fn departures_sort_before_arrivals() {
        let inst = Instance::new(
            "tie",
            1,
            vec![item(2, &[0.6], 5, 9), item(1, &[0.6], 0, 5), item(3, &[0.6], 5, 7)],
        )
        .unwrap();
        let kinds: Vec<(i64, EventKind, u64)> = build_events(&inst)
            .iter()
            .map(|e| (e.time.0 / S, e.kind, e.item_id.0))
            .collect();
        assert_eq!(
            kinds,
            vec![
                (0, EventKind::Arrival, 1),
                (5, EventKind::Departure, 1),
                (5, EventKind::Arrival, 2),
                (5, EventKind::Arrival, 3),
                (7, EventKind::Departure, 3),
                (9, EventKind::Departure, 2),
            ]
        );
        // Item 1 leaves at 5 s, so item 2 reuses capacity at the same instant.
        let report = simulate(&inst, &mut FirstFit, Knowledge::NonClairvoyant).unwrap();
        assert_eq!(report.bins_opened, 3);
        assert_eq!(report.total_usage, (5 + 4 + 2) * S);
    }

    #[test]
    fn two_large_items_need_two_bins() {
        let inst = Instance::new("a", 1, vec![item(1, &[0.6], 0, 10), item(2, &[0.6], 0, 10)]).unwrap();
        let r = simulate(&inst, &mut FirstFit, Knowledge::NonClairvoyant).unwrap();
        assert_eq!(r.bins_opened, 2);
        assert_eq!(r.total_usage, 20 * S);
        assert_eq!(r.lower_bound, 20 * S);
        assert_eq!(r.performance_ratio, 1.0);
    }

    #[test]
    fn single_item_usage_is_its_duration() {
        let inst = Instance::new("b", 2, vec![item(1, &[0.5, 0.5], 2, 9)]).unwrap();
        for name in ["first-fit", "next-fit", "mru", "best-fit:l2", "greedy", "hybrid", "rcp", "la:binary"] {
            let mut s = name.parse::<StrategySpec>().unwrap().build();
            let r = simulate(&inst, s.as_mut(), Knowledge::Clairvoyant).unwrap();
            assert_eq!(r.total_usage, 7 * S, "{name}");
        }
    }

    #[test]
    fn overlapping_pair_hand_sweep() {
        // Bin 0 open [0, 10), bin 1 open [5, 15): 10 s + 10 s.
        let inst = Instance::new("c", 1, vec![item(1, &[0.6], 0, 10), item(2, &[0.6], 5, 15)]).unwrap();
        let log = simulate_logged(&inst, &mut FirstFit, Knowledge::NonClairvoyant).unwrap();
        assert_eq!(log.report.total_usage, 20 * S);
        assert_eq!(log.report.max_concurrent_bins, 2);
        let tl = concurrent_bins_timeline(&inst, &log.decisions);
        assert_eq!(
            tl,
            vec![(TimePoint(0), 1), (TimePoint(5 * S), 2), (TimePoint(10 * S), 1), (TimePoint(15 * S), 0)]
        );
    }

    #[test]
    fn rejects_bad_strategy_choices() {
        struct Rogue(Placement);
        impl Strategy for Rogue {
            fn name(&self) -> String {
                "rogue".into()
            }
            fn select(&mut self, _: &Arrival, bins: &OpenBins<'_>) -> Placement {
                if bins.is_empty() {
                    Placement::OpenNew
                } else {
                    self.0
                }
            }
        }
        let inst = Instance::new("d", 1, vec![item(1, &[0.6], 0, 10), item(2, &[0.6], 1, 10)]).unwrap();
        let err = simulate(&inst, &mut Rogue(Placement::Existing(BinId(0))), Knowledge::NonClairvoyant);
        assert!(matches!(err, Err(SimError::CapacityViolation { .. })));
        let err = simulate(&inst, &mut Rogue(Placement::Existing(BinId(9))), Knowledge::NonClairvoyant);
        assert!(matches!(err, Err(SimError::UnknownBin { .. })));
    }

    #[test]
    fn clairvoyant_strategy_refuses_blind_run() {
        let inst = Instance::new("e", 1, vec![item(1, &[0.6], 0, 10)]).unwrap();
        let mut s = "greedy".parse::<StrategySpec>().unwrap().build();
        assert!(matches!(
            simulate(&inst, s.as_mut(), Knowledge::NonClairvoyant),
            Err(SimError::KnowledgeRequired { .. })
        ));
        let empty = PredictionTable::default();
        assert!(matches!(
            simulate(&inst, s.as_mut(), Knowledge::Predicted(&empty)),
            Err(SimError::MissingPrediction(_))
        ));
    }

    #[test]
    fn next_fit_seals_and_violates_any_fit() {
        // A fills bin 0, B cannot fit and seals it; C would fit bin 0 again.
        let inst = Instance::new(
            "nf",
            1,
            vec![item(1, &[0.9], 0, 10), item(2, &[0.9], 1, 2), item(3, &[0.05], 3, 4)],
        )
        .unwrap();
        let log = simulate_logged(&inst, &mut NextFit::default(), Knowledge::NonClairvoyant).unwrap();
        // B's bin closed at 2 s, so C opens a third bin although bin 0 fits it.
        assert_eq!(log.report.bins_opened, 3);
        assert!(log.report.anyfit_violations >= 1);
        assert_eq!(audit_any_fit(&inst, &log.decisions), log.report.anyfit_violations);
    }

    #[test]
    fn replay_is_deterministic_and_loads_stay_within_capacity() {
        for seed in 0..20 {
            let inst = random_instance(&RandomTrace { items: 300, d: 3, ..RandomTrace::default() }, seed);
            for name in ["first-fit", "best-fit:l1", "nrt:standard", "reduced-hybrid", "classify-duration:2"] {
                let spec: StrategySpec = name.parse().unwrap();
                let a = simulate_logged(&inst, spec.build().as_mut(), Knowledge::Clairvoyant).unwrap();
                let b = simulate_logged(&inst, spec.build().as_mut(), Knowledge::Clairvoyant).unwrap();
                assert_eq!(
                    serde_json::to_string(&a.report).unwrap(),
                    serde_json::to_string(&b.report).unwrap()
                );
                assert_eq!(a.decisions, b.decisions);
                audit_capacity(&inst, &a.decisions).unwrap();
                assert!(a.report.total_usage as f64 >= a.report.lower_bound as f64 * (1.0 - 1e-9));
                let tl = concurrent_bins_timeline(&inst, &a.decisions);
                let area = timeline_integral(&tl);
                assert!((area - a.report.total_usage as f64).abs() <= 1e-6 * a.report.total_usage as f64);
                let peak = tl.iter().map(|p| p.1).max().unwrap();
                assert_eq!(peak, a.report.max_concurrent_bins);
            }
        }
    }

    #[test]
    fn usage_invariant_under_order_preserving_relabel() {
        let inst = random_instance(&RandomTrace { items: 200, d: 2, ..RandomTrace::default() }, 7);
        // Multiplying ids by 3 keeps every tie order intact.
        let relabeled: Vec<Item> = inst
            .items()
            .iter()
            .map(|it| Item { id: ItemId(it.id.0 * 3 + 1), ..*it })
            .collect();
        let other = Instance::new("relabeled", 2, relabeled).unwrap();
        for name in ["first-fit", "mru", "rr-next-fit", "greedy"] {
            let spec: StrategySpec = name.parse().unwrap();
            let a = simulate(&inst, spec.build().as_mut(), Knowledge::Clairvoyant).unwrap();
            let b = simulate(&other, spec.build().as_mut(), Knowledge::Clairvoyant).unwrap();
            assert_eq!(a.total_usage, b.total_usage, "{name}");
        }
    }
}
