//! Item lifetime distribution on power-of-two second buckets.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::strategy::duration_category;
use crate::types::{Instance, MICROS_PER_SEC};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LifetimeHistogram {
    /// Bucket `i` counts lifetimes in `[2^(i-1), 2^i)` seconds. Sub-second
    /// lifetimes land in buckets `i ≤ 0`.
    pub buckets: BTreeMap<i64, u64>,
    /// Natural log of every lifetime in seconds, in item order.
    pub log_lifetimes: Vec<f64>,
}

pub fn lifetime_histogram(instance: &Instance) -> LifetimeHistogram {
    let mut buckets = BTreeMap::new();
    let mut log_lifetimes = Vec::with_capacity(instance.len());
    for it in instance.items() {
        let dur = it.duration();
        *buckets.entry(duration_category(dur, 2.0, MICROS_PER_SEC)).or_insert(0) += 1;
        log_lifetimes.push((dur as f64 / MICROS_PER_SEC as f64).ln());
    }
    LifetimeHistogram { buckets, log_lifetimes }
}

impl LifetimeHistogram {
    /// `bucket,lower_s,upper_s,count`
    pub fn write_buckets(&self, out: impl Write) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["bucket", "lower_s", "upper_s", "count"])?;
        for (&i, &count) in &self.buckets {
            let lower = 2f64.powi((i - 1) as i32);
            let upper = 2f64.powi(i as i32);
            w.write_record([i.to_string(), lower.to_string(), upper.to_string(), count.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// One `log_lifetime_s` value per line, for external Q-Q plots.
    pub fn write_log_lifetimes(&self, out: impl Write) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["log_lifetime_s"])?;
        for x in &self.log_lifetimes {
            w.write_record([x.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testkit::random::{random_instance, RandomTrace};
    use crate::types::{Item, SizeVector, TimePoint};

    #[test]
    fn buckets_and_totals() {
        let s = MICROS_PER_SEC;
        let size = SizeVector::new(&[0.1]).unwrap();
        let inst = Instance::new(
            "h",
            1,
            vec![
                Item::new(1, size, TimePoint(0), TimePoint(3 * s)),
                Item::new(2, size, TimePoint(0), TimePoint(s)),
                Item::new(3, size, TimePoint(0), TimePoint(2 * s)),
            ],
        )
        .unwrap();
        let h = lifetime_histogram(&inst);
        assert_eq!(h.buckets.get(&2), Some(&2));
        assert_eq!(h.buckets.get(&1), Some(&1));
        assert_eq!(h.log_lifetimes[1], 0.0);

        let big = random_instance(&RandomTrace { items: 2000, ..RandomTrace::default() }, 4);
        let h = lifetime_histogram(&big);
        assert_eq!(h.buckets.values().sum::<u64>(), 2000);
        let mut buf = Vec::new();
        h.write_buckets(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("bucket,lower_s,upper_s,count\n"));
    }
}
