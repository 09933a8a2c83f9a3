//! Hit rate across popularity strata of the ground-truth item: how accurate
//! is the model when the target is very, mildly or poorly popular?

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataset::PopularityMap;
use crate::error::{RecError, Result};
use crate::metrics::{rank_within_k, EvalPair};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrataScheme {
    /// Equal-count buckets after sorting by ground-truth training count.
    /// Ties never split across buckets, so bucket sizes may be uneven and
    /// fewer buckets than requested may come back.
    Quantile,
    /// Buckets by `floor(log2(count + 1))`.
    Log,
}

/// One popularity bucket, ordered from least to most popular.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrataBucket {
    pub low_count: u64,
    pub high_count: u64,
    pub hr_at_k: Option<f64>,
    pub n_cases: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrataReport {
    pub scheme: StrataScheme,
    pub k: usize,
    pub buckets: Vec<StrataBucket>,
    pub n_skipped: usize,
}

impl StrataReport {
    pub fn bottom(&self) -> Option<&StrataBucket> {
        self.buckets.first()
    }

    pub fn top(&self) -> Option<&StrataBucket> {
        self.buckets.last()
    }
}

fn bucket_of(cases: &[(u64, bool)]) -> StrataBucket {
    let hits = cases.iter().filter(|(_, hit)| *hit).count();
    StrataBucket {
        low_count: cases.iter().map(|&(c, _)| c).min().unwrap_or(0),
        high_count: cases.iter().map(|&(c, _)| c).max().unwrap_or(0),
        hr_at_k: (!cases.is_empty()).then(|| hits as f64 / cases.len() as f64),
        n_cases: cases.len(),
    }
}

/// Buckets non-skipped cases by the training count of their primary ground
/// truth (unseen targets count zero) and reports HR@k per bucket.
pub fn popularity_strata(
    pairs: &[EvalPair],
    popularity: &PopularityMap,
    k: usize,
    n_buckets: usize,
    scheme: StrataScheme,
) -> Result<StrataReport> {
    if popularity.is_empty() {
        return Err(RecError::Config(
            "popularity strata need training counts".into(),
        ));
    }
    if n_buckets == 0 {
        return Err(RecError::Config("need at least one bucket".into()));
    }

    let mut cases: Vec<(u64, bool)> = Vec::new();
    let mut skipped = 0usize;
    for (case, pred) in pairs {
        if pred.is_empty() {
            skipped += 1;
            continue;
        }
        let count = popularity
            .get(case.primary_target())
            .copied()
            .unwrap_or(0);
        cases.push((count, rank_within_k(case.primary_target(), pred, k).is_some()));
    }
    cases.sort_by_key(|&(count, _)| count);

    let buckets = match scheme {
        StrataScheme::Quantile => {
            let n = cases.len();
            let mut buckets = Vec::new();
            let mut start = 0usize;
            for b in 1..=n_buckets {
                if start >= n {
                    break;
                }
                // Nominal boundary at ceil(b * n / n_buckets), extended
                // rightwards so a run of tied counts stays together.
                let mut end = (b * n).div_ceil(n_buckets);
                if end <= start {
                    continue;
                }
                while end < n && cases[end].0 == cases[end - 1].0 {
                    end += 1;
                }
                buckets.push(bucket_of(&cases[start..end]));
                start = end;
            }
            buckets
        }
        StrataScheme::Log => {
            let mut groups: BTreeMap<u32, Vec<(u64, bool)>> = BTreeMap::new();
            for &(count, hit) in &cases {
                let key = (count + 1).ilog2();
                groups.entry(key).or_default().push((count, hit));
            }
            groups.into_values().map(|g| bucket_of(&g)).collect()
        }
    };

    Ok(StrataReport {
        scheme,
        k,
        buckets,
        n_skipped: skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{ItemId, TestCase};
    use crate::models::PredictionList;

    fn ids(raw: &[&str]) -> Vec<ItemId> {
        raw.iter().map(|s| s.to_string()).collect()
    }

    fn pair_for(target: &str, hit: bool) -> EvalPair {
        let predicted = if hit { target } else { "other" };
        (
            TestCase::new(ids(&["q"]), ids(&[target])).unwrap(),
            PredictionList::new(ids(&[predicted])),
        )
    }

    fn pop(counts: &[(&str, u64)]) -> PopularityMap {
        counts.iter().map(|&(i, c)| (i.to_string(), c)).collect()
    }

    #[test]
    fn uniform_popularity_merges_to_single_bucket() {
        let popularity = pop(&[("a", 3), ("b", 3), ("c", 3)]);
        let pairs = vec![pair_for("a", true), pair_for("b", false), pair_for("c", true)];
        let report =
            popularity_strata(&pairs, &popularity, 10, 4, StrataScheme::Quantile).unwrap();
        assert_eq!(report.buckets.len(), 1);
        assert_eq!(report.buckets[0].n_cases, 3);
    }

    #[test]
    fn quantile_splits_counts_evenly() {
        let popularity = pop(&[("a", 1), ("b", 2), ("c", 3), ("d", 4)]);
        let pairs = vec![
            pair_for("a", false),
            pair_for("b", false),
            pair_for("c", true),
            pair_for("d", true),
        ];
        let report =
            popularity_strata(&pairs, &popularity, 10, 2, StrataScheme::Quantile).unwrap();
        assert_eq!(report.buckets.len(), 2);
        assert_eq!(
            (report.buckets[0].low_count, report.buckets[0].high_count),
            (1, 2)
        );
        assert_eq!(
            (report.buckets[1].low_count, report.buckets[1].high_count),
            (3, 4)
        );
        assert_eq!(report.buckets[0].hr_at_k, Some(0.0));
        assert_eq!(report.buckets[1].hr_at_k, Some(1.0));
    }

    #[test]
    fn bucket_counts_sum_to_non_skipped() {
        let popularity = pop(&[("a", 1), ("b", 5), ("c", 9)]);
        let mut pairs = vec![pair_for("a", true), pair_for("b", false), pair_for("c", true)];
        pairs.push((
            TestCase::new(ids(&["q"]), ids(&["a"])).unwrap(),
            PredictionList::default(),
        ));
        let report = popularity_strata(&pairs, &popularity, 10, 2, StrataScheme::Log).unwrap();
        let total: usize = report.buckets.iter().map(|b| b.n_cases).sum();
        assert_eq!(total, 3);
        assert_eq!(report.n_skipped, 1);
    }

    #[test]
    fn log_scheme_groups_by_magnitude() {
        let popularity = pop(&[("a", 0), ("b", 1), ("c", 7), ("d", 8)]);
        let pairs = vec![
            pair_for("a", false),
            pair_for("b", false),
            pair_for("c", false),
            pair_for("d", false),
        ];
        let report = popularity_strata(&pairs, &popularity, 10, 4, StrataScheme::Log).unwrap();
        // floor(log2(count+1)): 0 -> 0, 1 -> 1, 7 -> 3, 8 -> 3.
        assert_eq!(report.buckets.len(), 3);
        assert_eq!(report.buckets[2].n_cases, 2);
    }

    #[test]
    fn unseen_targets_count_as_zero() {
        let popularity = pop(&[("a", 10)]);
        let pairs = vec![pair_for("never_seen", false), pair_for("a", true)];
        let report =
            popularity_strata(&pairs, &popularity, 10, 2, StrataScheme::Quantile).unwrap();
        assert_eq!(report.buckets[0].low_count, 0);
        assert_eq!(report.buckets[1].high_count, 10);
    }
}
