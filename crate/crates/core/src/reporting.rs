//! Performance ratios, box-plot statistics, prediction-error sweeps and the
//! CSV tables they produce.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{simulate, Knowledge, RunReport, SimError};
use crate::predictor::{generate_predictions, ErrorKind, ErrorModel};
use crate::strategy::{KnowledgeNeed, StrategySpec};
use crate::types::Instance;

/// Quartiles interpolate linearly between order statistics at rank
/// `p·(n-1)` (the common spreadsheet convention, "type 7").
pub const QUARTILE_METHOD: &str = "linear interpolation between order statistics at rank p*(n-1) (type 7)";

/// Whiskers reach the farthest sample within this many IQRs of the quartiles.
pub const WHISKER_IQR: f64 = 1.5;

/// Usage over lower bound; `None` when the bound is zero.
pub fn performance_ratio(report: &RunReport) -> Option<f64> {
    (report.lower_bound > 0).then(|| report.total_usage as f64 / report.lower_bound as f64)
}

/// `x` rounded to six significant digits, in plain decimal form.
pub fn sig6(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let rounded: f64 = format!("{x:.5e}").parse().expect("formatted float parses");
    let magnitude = rounded.abs().log10().floor() as i32;
    let decimals = (5 - magnitude).max(0) as usize;
    format!("{rounded:.decimals$}")
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    let rank = p * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    sorted[lo] + (rank - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub n: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
    pub whisker_low: f64,
    pub whisker_high: f64,
    /// Samples beyond the whisker fences, ascending.
    pub outliers: Vec<f64>,
}

/// Box-plot summary of a sample; `None` when it is empty or holds NaN.
pub fn box_stats(sample: &[f64]) -> Option<BoxStats> {
    if sample.is_empty() || sample.iter().any(|x| x.is_nan()) {
        return None;
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (q1, median, q3) = (quantile(&sorted, 0.25), quantile(&sorted, 0.5), quantile(&sorted, 0.75));
    let iqr = q3 - q1;
    let (lo_fence, hi_fence) = (q1 - WHISKER_IQR * iqr, q3 + WHISKER_IQR * iqr);
    let inside = || sorted.iter().copied().filter(|&x| x >= lo_fence && x <= hi_fence);
    let whisker_low = inside().next().unwrap_or(q1);
    let whisker_high = inside().next_back().unwrap_or(q3);
    let outliers = sorted.iter().copied().filter(|&x| x < lo_fence || x > hi_fence).collect();
    let mean = sorted.iter().sum::<f64>() / sorted.len() as f64;
    Some(BoxStats {
        n: sorted.len(),
        min: sorted[0],
        q1,
        median,
        q3,
        max: sorted[sorted.len() - 1],
        mean,
        whisker_low,
        whisker_high,
        outliers,
    })
}

/// One prediction-error setting of a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Setting {
    /// The strategy's natural knowledge: none, or exact departures.
    Exact,
    Error(ErrorKind),
}

impl Setting {
    pub fn kind_label(&self) -> &'static str {
        match self {
            Setting::Exact => "none",
            Setting::Error(kind) => kind.label(),
        }
    }

    pub fn param(&self) -> Option<f64> {
        match self {
            Setting::Exact => None,
            Setting::Error(kind) => Some(kind.param()),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Setting::Exact => "none".into(),
            Setting::Error(kind) => kind.to_string(),
        }
    }
}

/// One simulated run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub instance: String,
    pub strategy: String,
    pub setting: Setting,
    pub seed: Option<u64>,
    pub usage_us: i64,
    pub lb_us: i64,
    pub ratio: Option<f64>,
    pub anyfit_violations: u64,
    pub any_fit: bool,
}

/// Mean performance ratio of one strategy under one error setting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub strategy: String,
    pub setting: Setting,
    /// Mean over seeds of the per-seed mean over instances.
    pub mean_ratio: f64,
    pub seeds: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<RatioRow>,
    pub cells: Vec<SweepCell>,
    /// Per strategy and setting, over per-instance ratios averaged across seeds.
    pub boxes: Vec<(String, Setting, BoxStats)>,
}

impl SweepResult {
    pub fn cell(&self, strategy: &str, setting: &Setting) -> Option<&SweepCell> {
        self.cells.iter().find(|c| c.strategy == strategy && &c.setting == setting)
    }

    /// Any-Fit strategies that opened a bin while another one fitted.
    pub fn anyfit_failures(&self) -> Vec<&RatioRow> {
        self.rows.iter().filter(|r| r.any_fit && r.anyfit_violations > 0).collect()
    }
}

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("instance {instance}, strategy {strategy}: {source}")]
    Simulation {
        instance: String,
        strategy: String,
        source: SimError,
    },
}

struct Job {
    instance: usize,
    strategy: usize,
    setting: Setting,
    seed: Option<u64>,
}

/// Runs every strategy on every instance. Strategies that read predictions
/// run once per (error setting, seed); the others run once and their result
/// stands for every setting. With an empty grid, prediction strategies see
/// exact departures.
pub fn error_sweep(
    instances: &[Instance],
    strategies: &[StrategySpec],
    grid: &[ErrorKind],
    seeds: &[u64],
) -> Result<SweepResult, SweepError> {
    let settings: Vec<Setting> = if grid.is_empty() {
        vec![Setting::Exact]
    } else {
        grid.iter().copied().map(Setting::Error).collect()
    };
    let mut jobs = Vec::new();
    for (si, spec) in strategies.iter().enumerate() {
        for ii in 0..instances.len() {
            if spec.knowledge_need() == KnowledgeNeed::Predictions && !grid.is_empty() {
                for &setting in &settings {
                    for &seed in seeds {
                        jobs.push(Job {
                            instance: ii,
                            strategy: si,
                            setting,
                            seed: Some(seed),
                        });
                    }
                }
            } else {
                jobs.push(Job {
                    instance: ii,
                    strategy: si,
                    setting: Setting::Exact,
                    seed: None,
                });
            }
        }
    }

    let rows = jobs
        .par_iter()
        .map(|job| run_job(job, instances, strategies))
        .collect::<Result<Vec<_>, _>>()?;

    let mut cells = Vec::new();
    let mut boxes = Vec::new();
    for spec in strategies {
        let name = spec.to_string();
        let own: Vec<&RatioRow> = rows.iter().filter(|r| r.strategy == name).collect();
        let varies = own.iter().any(|r| r.setting != Setting::Exact);
        for &setting in &settings {
            let wanted = if varies { setting } else { Setting::Exact };
            // seed → instance → ratio
            let mut per_seed: BTreeMap<Option<u64>, Vec<f64>> = BTreeMap::new();
            let mut per_instance: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
            for r in own.iter().filter(|r| r.setting == wanted) {
                if let Some(x) = r.ratio {
                    per_seed.entry(r.seed).or_default().push(x);
                    per_instance.entry(&r.instance).or_default().push(x);
                }
            }
            if per_seed.is_empty() {
                continue;
            }
            let seed_means: Vec<f64> = per_seed.values().map(|v| mean(v)).collect();
            cells.push(SweepCell {
                strategy: name.clone(),
                setting,
                mean_ratio: mean(&seed_means),
                seeds: per_seed.len(),
            });
            let instance_means: Vec<f64> = per_instance.values().map(|v| mean(v)).collect();
            if let Some(b) = box_stats(&instance_means) {
                boxes.push((name.clone(), setting, b));
            }
        }
    }
    Ok(SweepResult { rows, cells, boxes })
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn run_job(job: &Job, instances: &[Instance], strategies: &[StrategySpec]) -> Result<RatioRow, SweepError> {
    let instance = &instances[job.instance];
    let spec = &strategies[job.strategy];
    let mut strategy = spec.build();
    let table;
    let knowledge = match (job.setting, spec.knowledge_need()) {
        (Setting::Error(kind), _) => {
            table = generate_predictions(instance, &ErrorModel::new(kind, job.seed.unwrap_or(0)));
            Knowledge::Predicted(&table)
        }
        (Setting::Exact, KnowledgeNeed::Oblivious) => Knowledge::NonClairvoyant,
        (Setting::Exact, _) => Knowledge::Clairvoyant,
    };
    let report = simulate(instance, strategy.as_mut(), knowledge).map_err(|source| SweepError::Simulation {
        instance: instance.name().to_string(),
        strategy: spec.to_string(),
        source,
    })?;
    Ok(RatioRow {
        instance: instance.name().to_string(),
        strategy: spec.to_string(),
        setting: job.setting,
        seed: job.seed,
        usage_us: report.total_usage,
        lb_us: report.lower_bound,
        ratio: performance_ratio(&report),
        anyfit_violations: report.anyfit_violations,
        any_fit: spec.is_any_fit(),
    })
}

fn opt_sig6(x: Option<f64>) -> String {
    x.map(sig6).unwrap_or_default()
}

/// `instance,strategy,error_kind,error_param,seed,usage_us,lb_us,ratio`
pub fn write_ratios_csv(out: impl Write, rows: &[RatioRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["instance", "strategy", "error_kind", "error_param", "seed", "usage_us", "lb_us", "ratio"])?;
    for r in rows {
        w.write_record([
            r.instance.clone(),
            r.strategy.clone(),
            r.setting.kind_label().to_string(),
            opt_sig6(r.setting.param()),
            r.seed.map(|s| s.to_string()).unwrap_or_default(),
            r.usage_us.to_string(),
            r.lb_us.to_string(),
            opt_sig6(r.ratio),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One row per (strategy, setting); outliers are `;`-separated.
pub fn write_boxstats_csv(out: impl Write, boxes: &[(String, Setting, BoxStats)]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "strategy",
        "error_kind",
        "error_param",
        "n",
        "min",
        "whisker_low",
        "q1",
        "median",
        "q3",
        "whisker_high",
        "max",
        "mean",
        "outliers",
    ])?;
    for (strategy, setting, b) in boxes {
        let outliers: Vec<String> = b.outliers.iter().map(|&x| sig6(x)).collect();
        w.write_record([
            strategy.clone(),
            setting.kind_label().to_string(),
            opt_sig6(setting.param()),
            b.n.to_string(),
            sig6(b.min),
            sig6(b.whisker_low),
            sig6(b.q1),
            sig6(b.median),
            sig6(b.q3),
            sig6(b.whisker_high),
            sig6(b.max),
            sig6(b.mean),
            outliers.join(";"),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `strategy,error_kind,error_param,seeds,mean_ratio`
pub fn write_sweep_csv(out: impl Write, cells: &[SweepCell]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["strategy", "error_kind", "error_param", "seeds", "mean_ratio"])?;
    for c in cells {
        w.write_record([
            c.strategy.clone(),
            c.setting.kind_label().to_string(),
            opt_sig6(c.setting.param()),
            c.seeds.to_string(),
            sig6(c.mean_ratio),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testkit::random::{random_instance, RandomTrace};
    use proptest::prelude::*;

    fn report(usage: i64, lb: i64) -> RunReport {
        RunReport {
            instance: "x".into(),
            strategy: "s".into(),
            knowledge: "k".into(),
            items: 1,
            total_usage: usage,
            lower_bound: lb,
            performance_ratio: 0.0,
            max_concurrent_bins: 1,
            anyfit_violations: 0,
            bins_opened: 1,
        }
    }

    #[test]
    fn ratio_examples() {
        assert_eq!(performance_ratio(&report(20, 20)), Some(1.0));
        assert_eq!(performance_ratio(&report(30, 20)), Some(1.5));
        assert_eq!(performance_ratio(&report(30, 0)), None);
    }

    #[test]
    fn box_examples() {
        let b = box_stats(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!((b.q1, b.median, b.q3), (2.0, 3.0, 4.0));
        assert!(b.outliers.is_empty());
        assert_eq!((b.whisker_low, b.whisker_high), (1.0, 5.0));

        let b = box_stats(&[1.0, 1.0, 1.0, 1.0, 100.0]).unwrap();
        assert_eq!(b.outliers, vec![100.0]);
        assert_eq!(b.whisker_high, 1.0);

        let b = box_stats(&[2.5]).unwrap();
        assert!([b.min, b.q1, b.median, b.q3, b.max, b.mean, b.whisker_low, b.whisker_high]
            .iter()
            .all(|&x| x == 2.5));
        assert!(box_stats(&[]).is_none());
    }

    #[test]
    fn interpolated_quartiles() {
        // Ranks 0.75 and 2.25 over [1, 2, 4, 8].
        let b = box_stats(&[8.0, 1.0, 4.0, 2.0]).unwrap();
        assert_eq!(b.q1, 1.75);
        assert_eq!(b.median, 3.0);
        assert_eq!(b.q3, 5.0);
    }

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(1.0), "1.00000");
        assert_eq!(sig6(1.23456789), "1.23457");
        assert_eq!(sig6(123456.789), "123457");
        assert_eq!(sig6(1234567.0), "1234570");
        assert_eq!(sig6(0.000123456789), "0.000123457");
        assert_eq!(sig6(9.999999), "10.0000");
        assert_eq!(sig6(0.0), "0");
    }

    #[test]
    fn sweep_constant_rows_and_equal_columns() {
        let cfg = RandomTrace { items: 60, ..RandomTrace::default() };
        let instances: Vec<Instance> = (0..3).map(|s| random_instance(&cfg, s)).collect();
        let strategies: Vec<StrategySpec> = ["first-fit", "rcp", "ppe"].iter().map(|s| s.parse().unwrap()).collect();
        let grid = [ErrorKind::LogNormal { sigma: 0.0 }, ErrorKind::LogNormal { sigma: 2.0 }];
        let seeds = [1, 2];
        let a = error_sweep(&instances, &strategies, &grid, &seeds).unwrap();
        let b = error_sweep(&instances, &strategies, &grid, &seeds).unwrap();
        assert_eq!(a, b);

        let ff: Vec<f64> = grid
            .iter()
            .map(|k| a.cell("first-fit", &Setting::Error(*k)).unwrap().mean_ratio)
            .collect();
        assert_eq!(ff[0], ff[1]);
        let exact = Setting::Error(grid[0]);
        assert_eq!(a.cell("rcp", &exact).unwrap().mean_ratio, a.cell("ppe", &exact).unwrap().mean_ratio);
        // 3 first-fit runs + 2 × (3 instances × 2 settings × 2 seeds).
        assert_eq!(a.rows.len(), 3 + 2 * 12);
        assert!(a.cells.iter().all(|c| c.mean_ratio >= 1.0 - 1e-9));
    }

    #[test]
    fn csv_layouts() {
        let rows = vec![RatioRow {
            instance: "i".into(),
            strategy: "ppe".into(),
            setting: Setting::Error(ErrorKind::Uniform { epsilon: 10.0 }),
            seed: Some(3),
            usage_us: 30,
            lb_us: 20,
            ratio: Some(1.5),
            anyfit_violations: 0,
            any_fit: false,
        }];
        let mut buf = Vec::new();
        write_ratios_csv(&mut buf, &rows).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "instance,strategy,error_kind,error_param,seed,usage_us,lb_us,ratio\ni,ppe,uniform,10.0000,3,30,20,1.50000\n"
        );
    }

    proptest! {
        #[test]
        fn box_stats_is_permutation_invariant(mut v in prop::collection::vec(0.5f64..100.0, 1..40), seed in any::<u64>()) {
            let a = box_stats(&v).unwrap();
            let n = v.len();
            let mut s = seed;
            for i in (1..n).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                v.swap(i, (s >> 33) as usize % (i + 1));
            }
            let b = box_stats(&v).unwrap();
            prop_assert_eq!(&a, &b);
            prop_assert!(a.q1 <= a.median && a.median <= a.q3);
            prop_assert!(a.whisker_low >= a.q1 - 1.5 * (a.q3 - a.q1) && a.whisker_low >= a.min);
            prop_assert!(a.whisker_high <= a.q3 + 1.5 * (a.q3 - a.q1) && a.whisker_high <= a.max);
        }
    }
}
