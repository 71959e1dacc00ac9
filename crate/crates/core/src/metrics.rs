//! Aggregation of per-pair records into per-detector summaries.
//!
//! For a detector `d`, `rep(d, n)` is the mean over tasks at budget `n`,
//! `rep(d)` the mean of those over all budgets, and the stability error is
//! the population standard deviation of the `rep(d, n)` values divided by
//! `rep(d)`. Percentiles describe the pooled sample of every
//! `rep(d, task, n)` and use linear interpolation between closest ranks.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocol::RepeatabilityRecord;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Percentiles {
    pub p10: f64,
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
    pub p90: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorSummary {
    pub detector: String,
    pub rep_by_n: BTreeMap<usize, f64>,
    pub rep: f64,
    /// `None` when `rep` is zero and the ratio is undefined.
    pub stability: Option<f64>,
    pub percentiles: Percentiles,
    pub mean: f64,
    pub rank: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AggregateOptions {
    /// Leave records flagged degenerate out of every mean and percentile.
    pub exclude_degenerate: bool,
}

/// Linear-interpolation percentile of an ascending sample, `p` in `[0, 1]`.
pub fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of an empty sample");
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = h - lo as f64;
    if frac == 0.0 {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

pub fn percentiles(sample: &[f64]) -> Percentiles {
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    Percentiles {
        p10: percentile_sorted(&sorted, 0.10),
        p25: percentile_sorted(&sorted, 0.25),
        p50: percentile_sorted(&sorted, 0.50),
        p75: percentile_sorted(&sorted, 0.75),
        p90: percentile_sorted(&sorted, 0.90),
    }
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Normalized population standard deviation of `rep(d, n)` across budgets.
pub fn stability(rep_by_n: &[f64]) -> Option<f64> {
    let avg = mean(rep_by_n);
    if rep_by_n.is_empty() || avg == 0.0 {
        return None;
    }
    let var = rep_by_n.iter().map(|r| (r - avg) * (r - avg)).sum::<f64>() / rep_by_n.len() as f64;
    Some(var.sqrt() / avg)
}

/// One summary per detector, in detector-name order, ranked by `rep`.
///
/// Records must cover the full detector × task × n grid.
pub fn aggregate(records: &[RepeatabilityRecord], options: AggregateOptions) -> Result<Vec<DetectorSummary>> {
    if records.is_empty() {
        return Err(Error::EmptyInput);
    }
    let detectors: BTreeSet<&str> = records.iter().map(|r| r.detector.as_str()).collect();
    let tasks: BTreeSet<&str> = records.iter().map(|r| r.task.as_str()).collect();
    let ns: BTreeSet<usize> = records.iter().map(|r| r.n).collect();

    let mut cells: HashMap<(&str, &str, usize), &RepeatabilityRecord> = HashMap::with_capacity(records.len());
    for r in records {
        if cells.insert((&r.detector, &r.task, r.n), r).is_some() {
            return Err(Error::InvalidParameter(format!(
                "duplicate record for {}/{}/{}",
                r.detector, r.task, r.n
            )));
        }
    }
    let mut missing = Vec::new();
    for &d in &detectors {
        for &t in &tasks {
            for &n in &ns {
                if !cells.contains_key(&(d, t, n)) {
                    missing.push(format!("{d}/{t}/{n}"));
                }
            }
        }
    }
    if !missing.is_empty() {
        return Err(Error::IncompleteGrid(missing));
    }

    let mut summaries: Vec<DetectorSummary> = detectors
        .iter()
        .map(|&d| {
            let mut rep_by_n = BTreeMap::new();
            let mut pooled = Vec::with_capacity(tasks.len() * ns.len());
            for &n in &ns {
                let values: Vec<f64> = tasks
                    .iter()
                    .map(|&t| cells[&(d, t, n)])
                    .filter(|r| !(options.exclude_degenerate && r.degenerate))
                    .map(|r| r.rep)
                    .collect();
                rep_by_n.insert(n, mean(&values));
                pooled.extend(values);
            }
            let by_n: Vec<f64> = rep_by_n.values().copied().collect();
            let (percentiles, mean_pooled) = if pooled.is_empty() {
                (percentiles(&[0.0]), 0.0)
            } else {
                (percentiles(&pooled), mean(&pooled))
            };
            DetectorSummary {
                detector: d.to_string(),
                rep: mean(&by_n),
                stability: stability(&by_n),
                rep_by_n,
                percentiles,
                mean: mean_pooled,
                rank: 0,
            }
        })
        .collect();
    rank(&mut summaries);
    Ok(summaries)
}

/// Competition ranking by `rep`, best first: equal values share the lower
/// rank and the next rank skips accordingly.
pub fn rank(summaries: &mut [DetectorSummary]) {
    let reps: Vec<f64> = summaries.iter().map(|s| s.rep).collect();
    for s in summaries.iter_mut() {
        s.rank = 1 + reps.iter().filter(|&&r| r > s.rep).count();
    }
}

/// Mean rank of every detector across the given splits.
pub fn average_ranks<'a>(splits: impl IntoIterator<Item = &'a [DetectorSummary]>) -> BTreeMap<String, f64> {
    let mut acc: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for split in splits {
        for s in split {
            let e = acc.entry(s.detector.clone()).or_insert((0.0, 0));
            e.0 += s.rank as f64;
            e.1 += 1;
        }
    }
    acc.into_iter().map(|(d, (sum, k))| (d, sum / k as f64)).collect()
}
