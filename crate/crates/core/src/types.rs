//! Domain types shared by every module: time, size vectors, items and instances.

use std::collections::HashSet;
use std::fmt;
use std::ops::{Add, Index, Sub};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Maximum number of resource dimensions.
pub const MAX_DIM: usize = 8;

/// Slack allowed when comparing a load against unit capacity.
pub const CAPACITY_EPS: f64 = 1e-9;

/// Microseconds per second.
pub const MICROS_PER_SEC: i64 = 1_000_000;

/// Microseconds per day.
pub const MICROS_PER_DAY: i64 = 86_400 * MICROS_PER_SEC;

/// Instant on the trace clock, in integer microseconds since the trace epoch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TimePoint(pub i64);

impl TimePoint {
    pub const ZERO: TimePoint = TimePoint(0);

    pub fn micros(self) -> i64 {
        self.0
    }

    pub fn from_secs_f64(secs: f64) -> TimePoint {
        TimePoint((secs * MICROS_PER_SEC as f64).round() as i64)
    }

    /// Converts a fractional day count with `round(days * 86 400 * 10^6)`.
    pub fn from_days_f64(days: f64) -> TimePoint {
        TimePoint((days * MICROS_PER_DAY as f64).round() as i64)
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / MICROS_PER_SEC as f64
    }
}

impl Add<i64> for TimePoint {
    type Output = TimePoint;
    fn add(self, rhs: i64) -> TimePoint {
        TimePoint(self.0 + rhs)
    }
}

impl Sub for TimePoint {
    type Output = i64;
    fn sub(self, rhs: TimePoint) -> i64 {
        self.0 - rhs.0
    }
}

impl fmt::Display for TimePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}us", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ItemId(pub u64);

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BinId(pub u64);

impl fmt::Display for BinId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SizeError {
    #[error("dimension count {0} outside 1..={MAX_DIM}")]
    BadDimension(usize),
    #[error("component {index} = {value} outside [0, 1]")]
    OutOfRange { index: usize, value: f64 },
    #[error("dimension mismatch: {left} vs {right}")]
    Mismatch { left: usize, right: usize },
}

/// Fixed-capacity vector of per-dimension sizes or loads.
///
/// Item sizes are validated into `[0, 1]` by [`SizeVector::new`]. Bin loads
/// and residual capacities reuse the type through the unchecked arithmetic
/// below, so they may stray outside that range by float error.
#[derive(Clone, Copy, PartialEq)]
pub struct SizeVector {
    dims: u8,
    v: [f64; MAX_DIM],
}

impl SizeVector {
    pub fn new(components: &[f64]) -> Result<SizeVector, SizeError> {
        let d = components.len();
        if d == 0 || d > MAX_DIM {
            return Err(SizeError::BadDimension(d));
        }
        for (index, &value) in components.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(SizeError::OutOfRange { index, value });
            }
        }
        Ok(Self::from_raw(components))
    }

    /// Builds a vector without range checks. Panics on a bad dimension count.
    pub fn from_raw(components: &[f64]) -> SizeVector {
        assert!(!components.is_empty() && components.len() <= MAX_DIM);
        let mut v = [0.0; MAX_DIM];
        v[..components.len()].copy_from_slice(components);
        SizeVector {
            dims: components.len() as u8,
            v,
        }
    }

    pub fn zeros(d: usize) -> SizeVector {
        assert!((1..=MAX_DIM).contains(&d));
        SizeVector {
            dims: d as u8,
            v: [0.0; MAX_DIM],
        }
    }

    pub fn splat(d: usize, value: f64) -> SizeVector {
        let mut out = SizeVector::zeros(d);
        out.v[..d].fill(value);
        out
    }

    pub fn dims(&self) -> usize {
        self.dims as usize
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.v[..self.dims as usize]
    }

    pub fn add_assign(&mut self, other: &SizeVector) {
        debug_assert_eq!(self.dims, other.dims);
        for i in 0..self.dims() {
            self.v[i] += other.v[i];
        }
    }

    pub fn sub_assign(&mut self, other: &SizeVector) {
        debug_assert_eq!(self.dims, other.dims);
        for i in 0..self.dims() {
            self.v[i] -= other.v[i];
        }
    }

    pub fn plus(&self, other: &SizeVector) -> SizeVector {
        let mut out = *self;
        out.add_assign(other);
        out
    }

    pub fn minus(&self, other: &SizeVector) -> SizeVector {
        let mut out = *self;
        out.sub_assign(other);
        out
    }

    /// Capacity left in a bin carrying this load.
    pub fn available(&self) -> SizeVector {
        SizeVector::splat(self.dims(), 1.0).minus(self)
    }

    pub fn linf(&self) -> f64 {
        lp_norm(self, Norm::Linf)
    }

    /// Index of the largest component; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for i in 1..self.dims() {
            if self.v[i] > self.v[best] {
                best = i;
            }
        }
        best
    }
}

impl Index<usize> for SizeVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.as_slice()[i]
    }
}

impl fmt::Debug for SizeVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.as_slice()).finish()
    }
}

/// Norm used to score residual capacity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Norm {
    L1,
    L2,
    Linf,
}

impl Norm {
    pub fn name(self) -> &'static str {
        match self {
            Norm::L1 => "l1",
            Norm::L2 => "l2",
            Norm::Linf => "linf",
        }
    }
}

impl std::str::FromStr for Norm {
    type Err = String;
    fn from_str(s: &str) -> Result<Norm, String> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(Norm::L1),
            "l2" => Ok(Norm::L2),
            "linf" | "l-inf" | "inf" => Ok(Norm::Linf),
            other => Err(format!("unknown norm '{other}' (expected l1, l2 or linf)")),
        }
    }
}

pub fn lp_norm(v: &SizeVector, p: Norm) -> f64 {
    let xs = v.as_slice();
    match p {
        Norm::L1 => xs.iter().map(|x| x.abs()).sum(),
        Norm::L2 => xs.iter().map(|x| x * x).sum::<f64>().sqrt(),
        Norm::Linf => xs.iter().fold(0.0, |m, x| m.max(x.abs())),
    }
}

/// True iff `item_size` can be added to `bin_load` without exceeding unit
/// capacity in any dimension.
pub fn fits(bin_load: &SizeVector, item_size: &SizeVector) -> Result<bool, SizeError> {
    if bin_load.dims != item_size.dims {
        return Err(SizeError::Mismatch {
            left: bin_load.dims(),
            right: item_size.dims(),
        });
    }
    Ok(fits_unchecked(bin_load, item_size))
}

#[inline]
pub(crate) fn fits_unchecked(bin_load: &SizeVector, item_size: &SizeVector) -> bool {
    bin_load
        .as_slice()
        .iter()
        .zip(item_size.as_slice())
        .all(|(l, s)| l + s <= 1.0 + CAPACITY_EPS)
}

/// A VM request: a size vector active on `[arrival, departure)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Item {
    pub id: ItemId,
    pub size: SizeVector,
    pub arrival: TimePoint,
    pub departure: TimePoint,
}

impl Item {
    pub fn new(id: u64, size: SizeVector, arrival: TimePoint, departure: TimePoint) -> Item {
        Item {
            id: ItemId(id),
            size,
            arrival,
            departure,
        }
    }

    pub fn duration(&self) -> i64 {
        duration(self)
    }
}

/// Length of the item's active interval in microseconds.
pub fn duration(item: &Item) -> i64 {
    item.departure - item.arrival
}

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("instance has no items")]
    Empty,
    #[error("item {id}: {source}")]
    Size { id: ItemId, source: SizeError },
    #[error("item {id}: size has {got} dimensions, instance has {expected}")]
    Dimension { id: ItemId, got: usize, expected: usize },
    #[error("item {0}: departure must be strictly after arrival")]
    NonPositiveDuration(ItemId),
    #[error("duplicate item id {0}")]
    DuplicateId(ItemId),
}

/// A cleaned trace ready for replay.
#[derive(Clone, Debug)]
pub struct Instance {
    name: String,
    d: usize,
    items: Vec<Item>,
    min_duration: i64,
    max_duration: i64,
    lower_bound: OnceLock<i64>,
}

impl Instance {
    /// Validates the items and sorts them stably by `(arrival, id)`.
    pub fn new(name: impl Into<String>, d: usize, mut items: Vec<Item>) -> Result<Instance, InstanceError> {
        if items.is_empty() {
            return Err(InstanceError::Empty);
        }
        if d == 0 || d > MAX_DIM {
            return Err(InstanceError::Size {
                id: items[0].id,
                source: SizeError::BadDimension(d),
            });
        }
        let mut seen = HashSet::with_capacity(items.len());
        let mut min_duration = i64::MAX;
        let mut max_duration = 0;
        for item in &items {
            if item.size.dims() != d {
                return Err(InstanceError::Dimension {
                    id: item.id,
                    got: item.size.dims(),
                    expected: d,
                });
            }
            if let Some((index, &value)) = item
                .size
                .as_slice()
                .iter()
                .enumerate()
                .find(|(_, v)| !(0.0..=1.0).contains(*v))
            {
                return Err(InstanceError::Size {
                    id: item.id,
                    source: SizeError::OutOfRange { index, value },
                });
            }
            let dur = item.duration();
            if dur <= 0 {
                return Err(InstanceError::NonPositiveDuration(item.id));
            }
            if !seen.insert(item.id) {
                return Err(InstanceError::DuplicateId(item.id));
            }
            min_duration = min_duration.min(dur);
            max_duration = max_duration.max(dur);
        }
        items.sort_by_key(|it| (it.arrival, it.id));
        Ok(Instance {
            name: name.into(),
            d,
            items,
            min_duration,
            max_duration,
            lower_bound: OnceLock::new(),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn items(&self) -> &[Item] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn min_duration(&self) -> i64 {
        self.min_duration
    }

    pub fn max_duration(&self) -> i64 {
        self.max_duration
    }

    /// Max/min item duration ratio.
    pub fn mu(&self) -> f64 {
        self.max_duration as f64 / self.min_duration as f64
    }

    /// Time from first arrival to last departure.
    pub fn horizon(&self) -> (TimePoint, TimePoint) {
        let start = self.items[0].arrival;
        let end = self.items.iter().map(|it| it.departure).max().unwrap();
        (start, end)
    }

    /// Cached value of [`crate::engine::lower_bound`].
    pub fn lower_bound(&self) -> i64 {
        *self
            .lower_bound
            .get_or_init(|| crate::engine::bound::sweep_lower_bound(self))
    }

    pub fn rename(mut self, name: impl Into<String>) -> Instance {
        self.name = name.into();
        self
    }
}
