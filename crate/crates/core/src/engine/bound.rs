//! Lower bound on optimal usage: the time integral of the ceiling of the
//! ℓ∞-norm of the aggregate active size vector.

use super::{build_events, EventKind};
use crate::types::{Instance, TimePoint, CAPACITY_EPS, MAX_DIM};

/// Full recomputation of the aggregate from the active set happens this often.
pub const AGGREGATE_RECOMPUTE_INTERVAL: usize = 4096;

/// Per-dimension Neumaier-compensated running sum.
#[derive(Clone, Copy, Default)]
struct Compensated {
    sum: f64,
    comp: f64,
}

impl Compensated {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Lower bound of the instance in microseconds (cached on the instance).
pub fn lower_bound(instance: &Instance) -> i64 {
    instance.lower_bound()
}

/// Bins needed at an instant with `active` items and aggregate ℓ∞-norm `linf`.
///
/// Loads within [`CAPACITY_EPS`] of an integer round down to it, matching the
/// fit predicate. Any active item needs at least one bin.
pub fn bins_needed(linf: f64, active: usize) -> i64 {
    if active == 0 {
        0
    } else {
        ((linf - CAPACITY_EPS).ceil() as i64).max(1)
    }
}

/// Walks the piecewise-constant aggregate load. `f(start, end, aggregate,
/// active_count)` is called once per maximal interval between distinct event
/// times.
pub fn sweep_aggregate(instance: &Instance, mut f: impl FnMut(TimePoint, TimePoint, &[f64], usize)) {
    let d = instance.d();
    let items = instance.items();
    let events = build_events(instance);

    let mut sums = [Compensated::default(); MAX_DIM];
    let mut active: Vec<u32> = Vec::new();
    let mut slot: Vec<u32> = vec![u32::MAX; items.len()];
    let mut agg = [0.0; MAX_DIM];
    let mut since_recompute = 0usize;

    let mut i = 0;
    while i < events.len() {
        let t = events[i].time;
        while i < events.len() && events[i].time == t {
            let ev = events[i];
            let size = items[ev.index as usize].size;
            match ev.kind {
                EventKind::Arrival => {
                    slot[ev.index as usize] = active.len() as u32;
                    active.push(ev.index);
                    for k in 0..d {
                        sums[k].add(size[k]);
                    }
                }
                EventKind::Departure => {
                    let pos = slot[ev.index as usize] as usize;
                    active.swap_remove(pos);
                    if pos < active.len() {
                        slot[active[pos] as usize] = pos as u32;
                    }
                    for k in 0..d {
                        sums[k].add(-size[k]);
                    }
                }
            }
            since_recompute += 1;
            i += 1;
        }
        if since_recompute >= AGGREGATE_RECOMPUTE_INTERVAL {
            sums = [Compensated::default(); MAX_DIM];
            for &j in &active {
                let size = items[j as usize].size;
                for k in 0..d {
                    sums[k].add(size[k]);
                }
            }
            since_recompute = 0;
        }
        if i < events.len() {
            for k in 0..d {
                agg[k] = sums[k].value();
            }
            f(t, events[i].time, &agg[..d], active.len());
        }
    }
}

pub(crate) fn sweep_lower_bound(instance: &Instance) -> i64 {
    let mut total = 0i64;
    sweep_aggregate(instance, |start, end, agg, active| {
        let linf = agg.iter().fold(0.0f64, |m, x| m.max(*x));
        total += bins_needed(linf, active) * (end - start);
    });
    total
}

/// Largest ℓ∞-norm of the aggregate active size over the horizon.
pub fn peak_aggregate(instance: &Instance) -> f64 {
    let mut peak = 0.0f64;
    sweep_aggregate(instance, |_, _, agg, _| {
        peak = agg.iter().fold(peak, |m, x| m.max(*x));
    });
    peak
}
