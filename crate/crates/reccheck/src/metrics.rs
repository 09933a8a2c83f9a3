//! Point-wise metrics over aligned (test case, prediction) pairs.
//!
//! Empty predictions are skips: hit rate and MRR exclude them from the
//! denominator and report them in `n_skipped`. Coverage and popularity bias
//! include every pair (an empty prediction simply contributes no items).
//!
//! Popularity bias is defined here as the mean training-popularity *share*
//! of recommended items: each recommended slot contributes
//! `count(item) / total_train_count`, with unseen items contributing zero.
//! This is a definition choice; the literature does not pin one down.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::dataset::{ItemId, PopularityMap, TestCase};
use crate::error::{RecError, Result};
use crate::models::PredictionList;

/// One aligned evaluation pair.
pub type EvalPair = (TestCase, PredictionList);

/// A scalar metric outcome. `value` is `None` when no case qualified.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricResult {
    pub name: String,
    pub k: usize,
    pub value: Option<f64>,
    /// Cases that entered the computation.
    pub n_cases: usize,
    /// Cases excluded (empty predictions).
    pub n_skipped: usize,
}

/// 1-based rank of `target` within the top-k of `items`, if present.
pub(crate) fn rank_within_k(target: &ItemId, pred: &PredictionList, k: usize) -> Option<usize> {
    pred.top_k(k).iter().position(|i| i == target).map(|p| p + 1)
}

/// Fraction of non-skipped cases whose primary target appears in the top-k.
pub fn hit_rate_at_k(pairs: &[EvalPair], k: usize) -> MetricResult {
    let mut hits = 0usize;
    let mut n = 0usize;
    let mut skipped = 0usize;
    for (case, pred) in pairs {
        if pred.is_empty() {
            skipped += 1;
            continue;
        }
        n += 1;
        if rank_within_k(case.primary_target(), pred, k).is_some() {
            hits += 1;
        }
    }
    MetricResult {
        name: "hr".into(),
        k,
        value: (n > 0).then(|| hits as f64 / n as f64),
        n_cases: n,
        n_skipped: skipped,
    }
}

/// Mean reciprocal rank of the primary target, zero beyond rank k.
pub fn mrr_at_k(pairs: &[EvalPair], k: usize) -> MetricResult {
    let mut sum = 0.0;
    let mut n = 0usize;
    let mut skipped = 0usize;
    for (case, pred) in pairs {
        if pred.is_empty() {
            skipped += 1;
            continue;
        }
        n += 1;
        if let Some(rank) = rank_within_k(case.primary_target(), pred, k) {
            sum += 1.0 / rank as f64;
        }
    }
    MetricResult {
        name: "mrr".into(),
        k,
        value: (n > 0).then(|| sum / n as f64),
        n_cases: n,
        n_skipped: skipped,
    }
}

/// Distinct items recommended anywhere in any top-k, over the catalog size.
pub fn coverage_at_k(pairs: &[EvalPair], k: usize, catalog_size: usize) -> Result<MetricResult> {
    if catalog_size == 0 {
        return Err(RecError::Config("coverage needs a non-empty catalog".into()));
    }
    let mut seen: HashSet<&str> = HashSet::new();
    for (_, pred) in pairs {
        for item in pred.top_k(k) {
            seen.insert(item);
        }
    }
    Ok(MetricResult {
        name: "coverage".into(),
        k,
        value: Some(seen.len() as f64 / catalog_size as f64),
        n_cases: pairs.len(),
        n_skipped: 0,
    })
}

/// Mean popularity share over all recommended top-k slots.
pub fn popularity_bias_at_k(
    pairs: &[EvalPair],
    k: usize,
    popularity: &PopularityMap,
) -> Result<MetricResult> {
    let total: u64 = popularity.values().sum();
    if total == 0 {
        return Err(RecError::Config(
            "popularity bias needs a non-empty training count".into(),
        ));
    }
    let mut sum = 0.0;
    let mut slots = 0usize;
    for (_, pred) in pairs {
        for item in pred.top_k(k) {
            sum += popularity.get(item).copied().unwrap_or(0) as f64 / total as f64;
            slots += 1;
        }
    }
    Ok(MetricResult {
        name: "popularity_bias".into(),
        k,
        value: (slots > 0).then(|| sum / slots as f64),
        n_cases: pairs.len(),
        n_skipped: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(raw: &[&str]) -> Vec<ItemId> {
        raw.iter().map(|s| s.to_string()).collect()
    }

    fn pair(query: &[&str], truth: &[&str], pred: &[&str]) -> EvalPair {
        (
            TestCase::new(ids(query), ids(truth)).unwrap(),
            PredictionList::new(ids(pred)),
        )
    }

    #[test]
    fn hit_rate_counts_topk_membership() {
        // One hit at rank 3 and one miss, k = 10 -> 0.5.
        let pairs = vec![
            pair(&["q"], &["t"], &["a", "b", "t"]),
            pair(&["q"], &["t"], &["a", "b", "c"]),
        ];
        assert_eq!(hit_rate_at_k(&pairs, 10).value, Some(0.5));
    }

    #[test]
    fn hit_rate_respects_k() {
        let pairs = vec![pair(&["q"], &["t"], &["a", "b", "t"])];
        assert_eq!(hit_rate_at_k(&pairs, 2).value, Some(0.0));
        assert_eq!(hit_rate_at_k(&pairs, 3).value, Some(1.0));
    }

    #[test]
    fn empty_predictions_are_skips_not_misses() {
        let pairs = vec![
            pair(&["q"], &["t"], &["t"]),
            pair(&["q"], &["t"], &[]),
        ];
        let hr = hit_rate_at_k(&pairs, 10);
        assert_eq!(hr.value, Some(1.0));
        assert_eq!(hr.n_cases, 1);
        assert_eq!(hr.n_skipped, 1);
    }

    #[test]
    fn all_skipped_reports_null_value() {
        let pairs = vec![pair(&["q"], &["t"], &[])];
        let hr = hit_rate_at_k(&pairs, 10);
        assert_eq!(hr.value, None);
        assert_eq!(hr.n_cases, 0);
    }

    #[test]
    fn mrr_single_case_rank_four() {
        let pairs = vec![pair(&["q"], &["t"], &["a", "b", "c", "t"])];
        assert_eq!(mrr_at_k(&pairs, 10).value, Some(0.25));
    }

    #[test]
    fn mrr_averages_hits_and_misses() {
        // Ranks {2, miss} at k = 10 -> (0.5 + 0) / 2.
        let pairs = vec![
            pair(&["q"], &["t"], &["a", "t"]),
            pair(&["q"], &["t"], &["a", "b"]),
        ];
        assert_eq!(mrr_at_k(&pairs, 10).value, Some(0.25));
    }

    #[test]
    fn coverage_counts_distinct_recommended() {
        let pairs = vec![
            pair(&["q"], &["t"], &["a"]),
            pair(&["q"], &["t"], &["a"]),
        ];
        let result = coverage_at_k(&pairs, 10, 100).unwrap();
        assert_eq!(result.value, Some(0.01));
    }

    #[test]
    fn coverage_full_catalog() {
        let pairs = vec![pair(&["q"], &["t"], &["a", "b"])];
        assert_eq!(coverage_at_k(&pairs, 10, 2).unwrap().value, Some(1.0));
    }

    #[test]
    fn popularity_bias_single_item_corpus() {
        let mut pop = PopularityMap::new();
        pop.insert("a".into(), 3);
        let pairs = vec![pair(&["q"], &["t"], &["a"])];
        assert_eq!(
            popularity_bias_at_k(&pairs, 10, &pop).unwrap().value,
            Some(1.0)
        );
    }

    #[test]
    fn popularity_bias_unseen_items_score_zero() {
        let mut pop = PopularityMap::new();
        pop.insert("a".into(), 3);
        let pairs = vec![pair(&["q"], &["t"], &["x", "y"])];
        assert_eq!(
            popularity_bias_at_k(&pairs, 10, &pop).unwrap().value,
            Some(0.0)
        );
    }

    #[test]
    fn popularity_bias_uniform_is_one_over_m() {
        let mut pop = PopularityMap::new();
        for id in ["a", "b", "c", "d"] {
            pop.insert(id.into(), 7);
        }
        let pairs = vec![pair(&["q"], &["t"], &["a", "c"])];
        let value = popularity_bias_at_k(&pairs, 10, &pop).unwrap().value.unwrap();
        assert!((value - 0.25).abs() < 1e-15);
    }
}
