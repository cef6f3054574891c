//! Worst-case instance generators for Round Robin Next Fit and Standard NRT.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{Instance, Item, SizeVector, TimePoint, MAX_DIM, MICROS_PER_SEC};

/// How far ahead of its nominal time an adversary round is released.
pub const RELEASE_LEAD_US: i64 = 1;

#[derive(Debug, Error, PartialEq)]
pub enum AdversaryError {
    #[error("invalid adversary parameters: {0}")]
    Invalid(String),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, AdversaryError> {
    Err(AdversaryError::Invalid(msg.into()))
}

/// Parameters of the Round Robin Next Fit construction. Time is in seconds;
/// the short items last one second.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RrnfParams {
    pub d: usize,
    /// Even, with `d * k * eps <= 1`.
    pub k: usize,
    pub rounds: usize,
    /// Duration of the long items, in seconds.
    pub mu: f64,
    pub eps: f64,
    /// Extra lifetime of the initial small items, in seconds.
    pub tau: f64,
}

impl Default for RrnfParams {
    fn default() -> Self {
        RrnfParams {
            d: 2,
            k: 4,
            rounds: 10,
            mu: 8.0,
            eps: 0.05,
            tau: 1e-3,
        }
    }
}

impl RrnfParams {
    pub fn validate(&self) -> Result<(), AdversaryError> {
        let RrnfParams { d, k, rounds, mu, eps, tau } = *self;
        if d == 0 || d > MAX_DIM {
            return invalid(format!("d={d} outside 1..={MAX_DIM}"));
        }
        if k < 2 || k % 2 != 0 {
            return invalid(format!("k={k} must be even and at least 2"));
        }
        if rounds == 0 {
            return invalid("at least one round is required");
        }
        if !(eps > 0.0) || (d * k) as f64 * eps > 1.0 + 1e-12 || d.max(2) as f64 * eps >= 1.0 {
            return invalid(format!("eps={eps} must be positive with d*k*eps <= 1"));
        }
        if !(tau.is_finite() && TimePoint::from_secs_f64(tau).micros() > RELEASE_LEAD_US) {
            return invalid(format!("tau={tau}s must exceed the {RELEASE_LEAD_US}us release lead"));
        }
        let lead_total = (rounds as i64 * RELEASE_LEAD_US) as f64 / MICROS_PER_SEC as f64;
        if !(mu.is_finite() && mu > 1.0 + lead_total) {
            return invalid(format!("mu={mu} must exceed 1"));
        }
        Ok(())
    }

    /// Nominal Round Robin Next Fit usage `d·k·(1 + τ + rounds·μ)` in seconds.
    pub fn rrnf_usage_s(&self) -> f64 {
        (self.d * self.k) as f64 * (1.0 + self.tau + self.rounds as f64 * self.mu)
    }

    /// Upper bound on the hand-built packing, `d·k + rounds·(1 + k/2 + μ)` seconds.
    pub fn feasible_bound_s(&self) -> f64 {
        (self.d * self.k) as f64 + self.rounds as f64 * (1.0 + self.k as f64 / 2.0 + self.mu)
    }

    /// The usage ratio as `rounds` grows with `k` held fixed. The 1-second
    /// bin of first items disappears when it can share the long-item bin.
    pub fn ratio_limit(&self) -> f64 {
        let (d, k, mu) = (self.d as f64, self.k as f64, self.mu);
        let extra = if self.first_items_share() { mu } else { 1.0 + mu };
        2.0 * mu * d / (1.0 + 2.0 * extra / k)
    }

    /// Whether a round's first items fit in the bin of its long items.
    pub fn first_items_share(&self) -> bool {
        (2 * self.d * self.k) as f64 * self.eps + self.eps <= 1.0 + 1e-12
    }

    fn round_release(&self, round: usize) -> TimePoint {
        TimePoint::from_secs_f64(1.0 + self.tau + (round - 1) as f64 * self.mu) + -(round as i64 * RELEASE_LEAD_US)
    }
}

/// Role of an item in the Round Robin Next Fit construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RrnfRole {
    InitialLarge,
    InitialSmall,
    /// First item of a segment in `group` (0-based).
    First { round: usize, group: usize, segment: usize },
    /// Second or fourth item of a segment.
    Long { round: usize, group: usize, segment: usize },
    Third { round: usize, group: usize, segment: usize },
}

/// The generated instance with a role per item id.
#[derive(Clone, Debug)]
pub struct RrnfAdversary {
    pub params: RrnfParams,
    pub instance: Instance,
    pub roles: Vec<RrnfRole>,
}

pub fn gen_rrnf_adversary(params: &RrnfParams) -> Result<RrnfAdversary, AdversaryError> {
    params.validate()?;
    let RrnfParams { d, k, rounds, mu, eps, tau } = *params;
    let mut items = Vec::with_capacity(2 * d * k * (rounds + 1));
    let mut roles = Vec::with_capacity(items.capacity());
    let mut push = |size: Vec<f64>, arrival: TimePoint, departure: TimePoint, role: RrnfRole| {
        let id = items.len() as u64;
        let size = SizeVector::new(&size).expect("adversary sizes are in range");
        items.push(Item::new(id, size, arrival, departure));
        roles.push(role);
    };

    let one = TimePoint(MICROS_PER_SEC);
    let small_end = TimePoint::from_secs_f64(1.0 + tau);
    for _ in 0..d * k {
        push(vec![1.0 - eps; d], TimePoint::ZERO, one, RrnfRole::InitialLarge);
        push(vec![eps; d], TimePoint::ZERO, small_end, RrnfRole::InitialSmall);
    }

    let long = TimePoint::from_secs_f64(mu).micros();
    let third_main = 1.0 - d.max(2) as f64 * eps;
    for round in 1..=rounds {
        let at = params.round_release(round);
        for group in 0..d {
            let prev = (group + d - 1) % d;
            for segment in 0..k / 2 {
                let mut first = vec![0.0; d];
                first[group] = d as f64 * eps;
                first[prev] = d as f64 * eps;
                let mut third = vec![eps; d];
                third[group] = third_main;
                push(first, at, at + MICROS_PER_SEC, RrnfRole::First { round, group, segment });
                push(vec![eps; d], at, at + long, RrnfRole::Long { round, group, segment });
                push(third, at, at + MICROS_PER_SEC, RrnfRole::Third { round, group, segment });
                push(vec![eps; d], at, at + long, RrnfRole::Long { round, group, segment });
            }
        }
    }
    let name = format!("rrnf-d{d}-k{k}-r{rounds}");
    let instance = Instance::new(name, d, items).map_err(|e| AdversaryError::Invalid(e.to_string()))?;
    Ok(RrnfAdversary {
        params: *params,
        instance,
        roles,
    })
}

impl RrnfAdversary {
    /// A hand-built packing, as a bin index per item in instance order.
    ///
    /// Initial pairs share a bin. The first initial bin is extended with the
    /// first round's long items, and the next `k/2` initial bins with its
    /// third items. Later rounds use one bin for all long items (plus the
    /// first items when they fit) and `k/2` bins that each take the same
    /// segment's third item from every group.
    pub fn feasible_packing(&self) -> Vec<usize> {
        let RrnfParams { d, k, eps, .. } = self.params;
        let share = self.params.first_items_share();
        // Round 1's long items join an initial bin only if its leftover small
        // item leaves room.
        let long_joins = (d * k) as f64 * eps + eps <= 1.0 + 1e-12;
        let mut next = d * k;
        let mut fresh = || {
            next += 1;
            next - 1
        };
        let long1 = if long_joins { 0 } else { fresh() };
        let first1 = if share { long1 } else { fresh() };
        let own = usize::from(!share);
        let per_round = k / 2 + 1 + own;
        let first_round_bins = next;
        let round_base = |round: usize| first_round_bins + (round - 2) * per_round;
        let bin_of = |id: usize| match self.roles[id] {
            RrnfRole::InitialLarge | RrnfRole::InitialSmall => id / 2,
            RrnfRole::Long { round: 1, .. } => long1,
            RrnfRole::First { round: 1, .. } => first1,
            RrnfRole::Third { round: 1, segment, .. } => 1 + segment,
            RrnfRole::Long { round, .. } => round_base(round),
            RrnfRole::First { round, .. } => round_base(round) + own,
            RrnfRole::Third { round, segment, .. } => round_base(round) + 1 + own + segment,
        };
        self.instance.items().iter().map(|it| bin_of(it.id.0 as usize)).collect()
    }
}

/// Parameters of the Standard NRT construction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NrtParams {
    /// Number of large items, and bins Standard NRT keeps open.
    pub n: usize,
    pub rounds: usize,
    pub eps: f64,
    /// Spacing of the initial closing times, in seconds.
    pub gap_s: f64,
    /// Where a round item departs between two closing times, as a fraction
    /// of the gap past the nearer one.
    pub offset: f64,
}

impl Default for NrtParams {
    fn default() -> Self {
        NrtParams {
            n: 4,
            rounds: 3,
            eps: 0.01,
            gap_s: 1.0,
            offset: 0.4,
        }
    }
}

impl NrtParams {
    pub fn validate(&self) -> Result<(), AdversaryError> {
        if self.n < 2 {
            return invalid(format!("n={} must be at least 2", self.n));
        }
        if !(self.offset > 0.0 && self.offset < 0.5) {
            return invalid(format!("offset={} must lie in (0, 0.5)", self.offset));
        }
        if !(self.gap_s.is_finite() && TimePoint::from_secs_f64(self.gap_s * self.offset).micros() > 0) {
            return invalid(format!("gap={}s is too small", self.gap_s));
        }
        if !(self.eps > 0.0 && 0.5 + self.eps * (self.rounds + 1) as f64 <= 1.0) {
            return invalid(format!("eps={} leaves no room for {} rounds", self.eps, self.rounds));
        }
        Ok(())
    }
}

/// `n` items of size `½+ε` open bins closing at `g, 2g, …, n·g`. Round `t`
/// arrives at `t·offset·g` with `n` items of size `ε`; the `i`-th one
/// departs `offset·g` after the current closing time of bin `n-i+1`, so it
/// is nearest that bin and pushes its closing time out by `offset·g`.
pub fn gen_nrt_adversary(params: &NrtParams) -> Result<Instance, AdversaryError> {
    params.validate()?;
    let NrtParams { n, rounds, eps, gap_s, offset } = *params;
    let gap = TimePoint::from_secs_f64(gap_s).micros();
    let step = TimePoint::from_secs_f64(gap_s * offset).micros();
    let mut items = Vec::with_capacity(n * (rounds + 1));
    for m in 1..=n {
        let size = SizeVector::splat(1, 0.5 + eps);
        items.push(Item::new(items.len() as u64, size, TimePoint::ZERO, TimePoint(m as i64 * gap)));
    }
    for t in 1..=rounds {
        let at = TimePoint(t as i64 * step);
        for i in 1..=n {
            let m = (n - i + 1) as i64;
            // Bin m closes at m·g + (t-1)·step after t-1 rounds.
            let departure = TimePoint(m * gap + t as i64 * step);
            items.push(Item::new(items.len() as u64, SizeVector::splat(1, eps), at, departure));
        }
    }
    Instance::new(format!("nrt-n{n}-r{rounds}"), 1, items).map_err(|e| AdversaryError::Invalid(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::audit::audit_capacity;
    use crate::strategy::clairvoyant::{Nrt, NrtMode};
    use crate::strategy::nonclairvoyant::RoundRobinNextFit;
    use crate::testkit::oracle::schedule_usage;
    use crate::{simulate, simulate_logged, Knowledge};

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs()
    }

    #[test]
    fn rejects_bad_parameters() {
        let ok = RrnfParams::default();
        assert!(ok.validate().is_ok());
        assert!(RrnfParams { k: 3, ..ok }.validate().is_err());
        assert!(RrnfParams { eps: 0.2, ..ok }.validate().is_err());
        assert!(RrnfParams { mu: 1.0, ..ok }.validate().is_err());
        assert!(RrnfParams { tau: 0.0, ..ok }.validate().is_err());
        assert!(RrnfParams { d: 0, ..ok }.validate().is_err());
        assert!(gen_nrt_adversary(&NrtParams { n: 1, ..NrtParams::default() }).is_err());
    }

    #[test]
    fn small_rrnf_example() {
        let p = RrnfParams {
            d: 1,
            k: 2,
            rounds: 1,
            mu: 2.0,
            eps: 0.1,
            tau: 1e-3,
        };
        let adv = gen_rrnf_adversary(&p).unwrap();
        let mut rr = RoundRobinNextFit::default();
        let log = simulate_logged(&adv.instance, &mut rr, Knowledge::NonClairvoyant).unwrap();
        let usage = log.report.total_usage as f64 / 1e6;
        assert!(close(usage, 6.0 + 2.0 * 1e-3, 1e-6), "{usage}");
        let initial_opened = log.decisions.iter().take(4).filter(|d| d.opened_new).count();
        assert_eq!(initial_opened, 2);

        let packing = adv.feasible_packing();
        let feasible = schedule_usage(&adv.instance, &packing).unwrap() as f64 / 1e6;
        assert!(feasible <= p.feasible_bound_s() + 1e-9, "{feasible}");
    }

    #[test]
    fn rrnf_opens_dk_bins_and_keeps_them() {
        let p = RrnfParams::default();
        let adv = gen_rrnf_adversary(&p).unwrap();
        let log = simulate_logged(&adv.instance, &mut RoundRobinNextFit::default(), Knowledge::NonClairvoyant).unwrap();
        assert_eq!(log.report.bins_opened, (p.d * p.k) as u64);
        assert_eq!(log.report.max_concurrent_bins, p.d * p.k);
        let usage = log.report.total_usage as f64 / 1e6;
        assert!(close(usage, p.rrnf_usage_s(), 1e-6), "{usage} vs {}", p.rrnf_usage_s());
        audit_capacity(&adv.instance, &log.decisions).unwrap();
    }

    #[test]
    fn feasible_packing_respects_bound_in_both_layouts() {
        for p in [
            RrnfParams::default(),
            RrnfParams { k: 8, rounds: 50, ..RrnfParams::default() },
            RrnfParams { d: 3, k: 6, rounds: 4, mu: 3.0, eps: 0.05, tau: 1e-3 },
        ] {
            let adv = gen_rrnf_adversary(&p).unwrap();
            let packing = adv.feasible_packing();
            let usage = schedule_usage(&adv.instance, &packing).unwrap() as f64 / 1e6;
            // Each initial bin outlives its large item by tau; only the
            // shared layout has a spare second per round to absorb that.
            let slack = if p.first_items_share() { 0.0 } else { (p.d * p.k) as f64 * p.tau };
            let bound = p.feasible_bound_s() + slack;
            assert!(usage <= bound + 1e-9, "{p:?}: {usage} > {bound}");
        }
    }

    #[test]
    fn nrt_adversary_holds_standard_open() {
        let inst = gen_nrt_adversary(&NrtParams::default()).unwrap();
        let std_log = simulate_logged(&inst, &mut Nrt { mode: NrtMode::Standard }, Knowledge::Clairvoyant).unwrap();
        assert_eq!(std_log.report.max_concurrent_bins, 4);
        assert!(std_log.decisions.iter().skip(4).all(|d| !d.opened_new));
        let pri = simulate(&inst, &mut Nrt { mode: NrtMode::Prioritized }, Knowledge::Clairvoyant).unwrap();
        assert!(pri.total_usage < std_log.report.total_usage);
    }
}
