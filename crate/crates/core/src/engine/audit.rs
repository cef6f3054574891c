//! Offline checks that replay a decision log against the instance without
//! trusting any engine state.

use std::collections::{BTreeMap, HashMap};
use std::io::{self, Write};

use super::{build_events, Decision, EventKind};
use crate::types::{fits_unchecked, BinId, Instance, ItemId, SizeVector, TimePoint, CAPACITY_EPS};

/// Replays the log and yields, for every event in order, the active item
/// indices of every open bin.
struct Replay<'a> {
    instance: &'a Instance,
    bin_of: Vec<BinId>,
    opened_new: Vec<bool>,
    bins: BTreeMap<BinId, Vec<u32>>,
}

impl<'a> Replay<'a> {
    fn new(instance: &'a Instance, decisions: &[Decision]) -> Replay<'a> {
        let by_id: HashMap<ItemId, &Decision> = decisions.iter().map(|d| (d.item, d)).collect();
        let mut bin_of = Vec::with_capacity(instance.len());
        let mut opened_new = Vec::with_capacity(instance.len());
        for item in instance.items() {
            let d = by_id
                .get(&item.id)
                .unwrap_or_else(|| panic!("decision log has no entry for item {}", item.id));
            bin_of.push(d.bin);
            opened_new.push(d.opened_new);
        }
        Replay {
            instance,
            bin_of,
            opened_new,
            bins: BTreeMap::new(),
        }
    }

    fn load(&self, members: &[u32]) -> SizeVector {
        let mut load = SizeVector::zeros(self.instance.d());
        for &i in members {
            load.add_assign(&self.instance.items()[i as usize].size);
        }
        load
    }
}

/// Counts arrivals that opened a new bin although some open bin could hold
/// the item.
pub fn audit_any_fit(instance: &Instance, decisions: &[Decision]) -> u64 {
    let mut replay = Replay::new(instance, decisions);
    let mut violations = 0;
    for ev in build_events(instance) {
        let idx = ev.index as usize;
        let bin = replay.bin_of[idx];
        match ev.kind {
            EventKind::Arrival => {
                if replay.opened_new[idx] {
                    let size = instance.items()[idx].size;
                    let any = replay
                        .bins
                        .values()
                        .any(|m| fits_unchecked(&replay.load(m), &size));
                    if any {
                        violations += 1;
                    }
                }
                replay.bins.entry(bin).or_default().push(ev.index);
            }
            EventKind::Departure => {
                let members = replay.bins.get_mut(&bin).expect("bin open");
                members.retain(|&m| m != ev.index);
                if members.is_empty() {
                    replay.bins.remove(&bin);
                }
            }
        }
    }
    violations
}

/// Verifies that every bin's load, recomputed from its active items, stays
/// within capacity after each arrival, and that a closed bin is never reused.
pub fn audit_capacity(instance: &Instance, decisions: &[Decision]) -> Result<(), String> {
    let mut replay = Replay::new(instance, decisions);
    let mut closed: Vec<BinId> = Vec::new();
    for ev in build_events(instance) {
        let idx = ev.index as usize;
        let bin = replay.bin_of[idx];
        match ev.kind {
            EventKind::Arrival => {
                if closed.contains(&bin) {
                    return Err(format!("item {} placed into closed bin {bin}", ev.item_id));
                }
                if replay.opened_new[idx] == replay.bins.contains_key(&bin) {
                    return Err(format!("item {}: opened-new flag disagrees with bin {bin} state", ev.item_id));
                }
                let members = replay.bins.entry(bin).or_default();
                members.push(ev.index);
                let members = members.clone();
                let load = replay.load(&members);
                if let Some(k) = load.as_slice().iter().position(|&x| x > 1.0 + CAPACITY_EPS) {
                    return Err(format!(
                        "bin {bin} over capacity in dimension {k} ({}) at {}",
                        load[k], ev.time
                    ));
                }
            }
            EventKind::Departure => {
                let members = replay.bins.get_mut(&bin).expect("bin open");
                members.retain(|&m| m != ev.index);
                if members.is_empty() {
                    replay.bins.remove(&bin);
                    closed.push(bin);
                }
            }
        }
    }
    Ok(())
}

/// Step function of the number of open bins, rebuilt from the decision log.
///
/// Each entry `(t, n)` means `n` bins are open from `t` until the next entry.
pub fn concurrent_bins_timeline(instance: &Instance, decisions: &[Decision]) -> Vec<(TimePoint, usize)> {
    let departure: HashMap<ItemId, TimePoint> =
        instance.items().iter().map(|it| (it.id, it.departure)).collect();
    let mut spans: BTreeMap<BinId, (TimePoint, TimePoint)> = BTreeMap::new();
    for d in decisions {
        let dep = departure[&d.item];
        spans
            .entry(d.bin)
            .and_modify(|s| s.1 = s.1.max(dep))
            .or_insert((d.time, dep));
    }
    let mut deltas: BTreeMap<TimePoint, i64> = BTreeMap::new();
    for (open, close) in spans.values() {
        *deltas.entry(*open).or_insert(0) += 1;
        *deltas.entry(*close).or_insert(0) -= 1;
    }
    let mut out = Vec::with_capacity(deltas.len());
    let mut count = 0i64;
    for (t, delta) in deltas {
        count += delta;
        if delta != 0 || out.is_empty() {
            out.push((t, count as usize));
        }
    }
    out
}

/// Area under a timeline, in bin-microseconds.
pub fn timeline_integral(timeline: &[(TimePoint, usize)]) -> f64 {
    timeline
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) as f64 * w[0].1 as f64)
        .sum()
}

/// Writes one JSON object per decision, newline-delimited.
pub fn write_decision_log(mut out: impl Write, decisions: &[Decision]) -> io::Result<()> {
    for d in decisions {
        serde_json::to_writer(&mut out, d)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}
