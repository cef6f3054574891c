//! Policies that never look at departure times.

use super::{best_fit, first_fit, Arrival, Placement, Strategy};
use crate::engine::OpenBins;
use crate::types::{BinId, Norm};

/// Scans bins in ascending open time and takes the first that fits.
#[derive(Clone, Copy, Debug, Default)]
pub struct FirstFit;

impl Strategy for FirstFit {
    fn name(&self) -> String {
        "first-fit".into()
    }

    fn select(&mut self, item: &Arrival, bins: &OpenBins<'_>) -> Placement {
        first_fit(bins.iter(), &item.size).into()
    }
}

/// Scans bins in descending last-access order. Only receiving an item counts
/// as an access.
#[derive(Clone, Copy, Debug, Default)]
pub struct MostRecentlyUsed;

impl Strategy for MostRecentlyUsed {
    fn name(&self) -> String {
        "mru".into()
    }

    fn select(&mut self, item: &Arrival, bins: &OpenBins<'_>) -> Placement {
        bins.iter()
            .filter(|b| b.fits(&item.size))
            .max_by_key(|b| b.access_seq())
            .map(|b| b.id())
            .into()
    }
}

/// One accepting bin at a time; a bin that rejects an item is sealed.
#[derive(Clone, Copy, Debug, Default)]
pub struct NextFit {
    accepting: Option<BinId>,
}

impl Strategy for NextFit {
    fn name(&self) -> String {
        "next-fit".into()
    }

    fn select(&mut self, item: &Arrival, bins: &OpenBins<'_>) -> Placement {
        match self.accepting.and_then(|id| bins.get(id)) {
            Some(bin) if bin.fits(&item.size) => Placement::Existing(bin.id()),
            _ => Placement::OpenNew,
        }
    }

    fn placed(&mut self, _: &Arrival, bin: BinId, opened: bool, _: &OpenBins<'_>) {
        if opened {
            self.accepting = Some(bin);
        }
    }
}

/// Next Fit that, instead of sealing, scans onward from the flagged bin and
/// wraps around before opening a new bin.
#[derive(Clone, Copy, Debug, Default)]
pub struct RoundRobinNextFit {
    flag: Option<BinId>,
}

impl Strategy for RoundRobinNextFit {
    fn name(&self) -> String {
        "rr-next-fit".into()
    }

    fn select(&mut self, item: &Arrival, bins: &OpenBins<'_>) -> Placement {
        let ids = bins.ids();
        // The flagged bin may have closed; resume at its successor.
        let start = self.flag.map_or(0, |f| ids.partition_point(|&id| id < f));
        ids[start..]
            .iter()
            .chain(&ids[..start])
            .map(|&id| bins.get(id).expect("open bin"))
            .find(|b| b.fits(&item.size))
            .map(|b| b.id())
            .into()
    }

    fn placed(&mut self, _: &Arrival, bin: BinId, _: bool, _: &OpenBins<'_>) {
        self.flag = Some(bin);
    }
}

/// Picks the fitting bin with the least residual capacity under `norm`.
#[derive(Clone, Copy, Debug)]
pub struct BestFit {
    pub norm: Norm,
}

impl Strategy for BestFit {
    fn name(&self) -> String {
        format!("best-fit:{}", self.norm.name())
    }

    fn select(&mut self, item: &Arrival, bins: &OpenBins<'_>) -> Placement {
        best_fit(bins.iter(), &item.size, self.norm).into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::BinFixture;
    use crate::types::{ItemId, SizeVector, TimePoint};

    fn arrival(size: &[f64]) -> Arrival {
        Arrival {
            id: ItemId(99),
            size: SizeVector::new(size).unwrap(),
            time: TimePoint(100),
            departure_hint: None,
        }
    }

    fn fixture(loads: &[&[f64]]) -> BinFixture {
        let mut f = BinFixture::default();
        for (k, l) in loads.iter().enumerate() {
            f.push(l, TimePoint(k as i64), None);
        }
        f
    }

    #[test]
    fn first_fit_examples() {
        let f = fixture(&[&[0.7], &[0.2]]);
        let v = f.view(TimePoint(100));
        assert_eq!(FirstFit.select(&arrival(&[0.5]), &v), Placement::Existing(BinId(1)));
        assert_eq!(FirstFit.select(&arrival(&[0.1]), &v), Placement::Existing(BinId(0)));
        let empty = BinFixture::default();
        assert_eq!(FirstFit.select(&arrival(&[0.1]), &empty.view(TimePoint(0))), Placement::OpenNew);
    }

    #[test]
    fn mru_examples() {
        let mut f = fixture(&[&[0.5], &[0.5]]);
        f.touch(BinId(0), TimePoint(5));
        f.touch(BinId(1), TimePoint(9));
        let v = f.view(TimePoint(10));
        assert_eq!(MostRecentlyUsed.select(&arrival(&[0.3]), &v), Placement::Existing(BinId(1)));

        let mut f = fixture(&[&[0.5], &[0.9]]);
        f.touch(BinId(0), TimePoint(5));
        f.touch(BinId(1), TimePoint(9));
        let v = f.view(TimePoint(10));
        assert_eq!(MostRecentlyUsed.select(&arrival(&[0.3]), &v), Placement::Existing(BinId(0)));
        assert_eq!(MostRecentlyUsed.select(&arrival(&[0.6]), &v), Placement::OpenNew);
    }

    #[test]
    fn next_fit_examples() {
        let f = fixture(&[&[0.6]]);
        let v = f.view(TimePoint(10));
        let mut nf = NextFit { accepting: Some(BinId(0)) };
        assert_eq!(nf.select(&arrival(&[0.3]), &v), Placement::Existing(BinId(0)));
        assert_eq!(nf.select(&arrival(&[0.5]), &v), Placement::OpenNew);
        nf.placed(&arrival(&[0.5]), BinId(1), true, &v);
        assert_eq!(nf.accepting, Some(BinId(1)));
    }

    #[test]
    fn round_robin_wraps_from_flag() {
        let f = fixture(&[&[0.2], &[0.9], &[0.9]]);
        let v = f.view(TimePoint(10));
        let mut rr = RoundRobinNextFit { flag: Some(BinId(1)) };
        let item = arrival(&[0.5]);
        assert_eq!(rr.select(&item, &v), Placement::Existing(BinId(0)));
        rr.placed(&item, BinId(0), false, &v);
        assert_eq!(rr.flag, Some(BinId(0)));

        let mut rr = RoundRobinNextFit { flag: Some(BinId(2)) };
        assert_eq!(rr.select(&arrival(&[0.05]), &v), Placement::Existing(BinId(2)));
        assert_eq!(rr.select(&arrival(&[0.85]), &v), Placement::OpenNew);
    }

    #[test]
    fn best_fit_examples() {
        // Available ⟨0.6,0.4⟩ and ⟨0.3,0.3⟩.
        let f = fixture(&[&[0.4, 0.6], &[0.7, 0.7]]);
        let v = f.view(TimePoint(10));
        let mut bf = BestFit { norm: Norm::Linf };
        assert_eq!(bf.select(&arrival(&[0.2, 0.1]), &v), Placement::Existing(BinId(1)));

        // Available ⟨0.5,0.1⟩ and ⟨0.3,0.3⟩.
        let f = fixture(&[&[0.5, 0.9], &[0.7, 0.7]]);
        let mut bf = BestFit { norm: Norm::L1 };
        assert_eq!(bf.select(&arrival(&[0.2, 0.2]), &f.view(TimePoint(10))), Placement::Existing(BinId(1)));

        let f = fixture(&[&[0.5], &[0.5]]);
        let mut bf = BestFit { norm: Norm::L2 };
        assert_eq!(bf.select(&arrival(&[0.2]), &f.view(TimePoint(10))), Placement::Existing(BinId(0)));
    }

    #[test]
    fn best_fit_picks_most_loaded_in_one_dimension() {
        let f = fixture(&[&[0.3], &[0.6], &[0.5], &[0.95]]);
        let mut bf = BestFit { norm: Norm::L1 };
        assert_eq!(bf.select(&arrival(&[0.1]), &f.view(TimePoint(10))), Placement::Existing(BinId(1)));
    }
}
