//! Per-slice metrics: not all inputs are created equal, so hit rate and MRR
//! are reported per data slice (brand, category, cold-start, or any custom
//! partition).
//!
//! Within a slice, an empty prediction counts as a miss rather than a skip.
//! That keeps the slice accounting exact: slice case counts sum to the
//! number of sliceable cases, and the case-count-weighted mean of slice hit
//! rates equals the global hit rate over sliceable cases as an identity.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataset::{Catalog, PopularityMap, TestCase};
use crate::metrics::{rank_within_k, EvalPair};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceStats {
    pub hr_at_k: f64,
    pub mrr_at_k: f64,
    pub n_cases: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceReport {
    pub k: usize,
    pub slices: BTreeMap<String, SliceStats>,
    /// Cases the partition function declined to map.
    pub unsliceable: usize,
}

/// Groups cases by partition key and reports HR@k and MRR@k per slice.
pub fn slice_metrics(
    pairs: &[EvalPair],
    k: usize,
    partition: impl Fn(&TestCase) -> Option<String>,
) -> SliceReport {
    struct Accumulator {
        hits: usize,
        reciprocal: f64,
        n: usize,
    }
    let mut groups: BTreeMap<String, Accumulator> = BTreeMap::new();
    let mut unsliceable = 0usize;
    for (case, pred) in pairs {
        let Some(key) = partition(case) else {
            unsliceable += 1;
            continue;
        };
        let acc = groups.entry(key).or_insert(Accumulator {
            hits: 0,
            reciprocal: 0.0,
            n: 0,
        });
        acc.n += 1;
        if let Some(rank) = rank_within_k(case.primary_target(), pred, k) {
            acc.hits += 1;
            acc.reciprocal += 1.0 / rank as f64;
        }
    }
    SliceReport {
        k,
        slices: groups
            .into_iter()
            .map(|(key, acc)| {
                (
                    key,
                    SliceStats {
                        hr_at_k: acc.hits as f64 / acc.n as f64,
                        mrr_at_k: acc.reciprocal / acc.n as f64,
                        n_cases: acc.n,
                    },
                )
            })
            .collect(),
        unsliceable,
    }
}

/// Slice by the brand of the last query item.
pub fn partition_by_brand(catalog: &Catalog) -> impl Fn(&TestCase) -> Option<String> + '_ {
    |case| {
        let last = case.query.last()?;
        catalog.brand_of(last).map(str::to_string)
    }
}

/// Slice by the leaf category of the last query item.
pub fn partition_by_leaf_category(catalog: &Catalog) -> impl Fn(&TestCase) -> Option<String> + '_ {
    |case| {
        let last = case.query.last()?;
        catalog.leaf_category_of(last).map(str::to_string)
    }
}

/// Slice by cold-start status of the ground truth: was the target ever seen
/// in training?
pub fn partition_by_cold_start(
    popularity: &PopularityMap,
) -> impl Fn(&TestCase) -> Option<String> + '_ {
    |case| {
        let seen = popularity
            .get(case.primary_target())
            .is_some_and(|&c| c > 0);
        Some(if seen { "seen" } else { "cold_start" }.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{ItemId, ItemMeta};
    use crate::models::PredictionList;

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
    fn single_slice_matches_global() {
        let pairs = vec![
            pair(&["q"], &["t"], &["t"]),
            pair(&["q"], &["t"], &["x"]),
        ];
        let report = slice_metrics(&pairs, 10, |_| Some("all".into()));
        assert_eq!(report.slices["all"].hr_at_k, 0.5);
        assert_eq!(report.slices["all"].n_cases, 2);
        assert_eq!(report.unsliceable, 0);
    }

    #[test]
    fn disjoint_brand_slices() {
        let catalog = Catalog::from_rows(vec![
            ItemMeta {
                brand: Some("A".into()),
                ..ItemMeta::new("a1")
            },
            ItemMeta {
                brand: Some("A".into()),
                ..ItemMeta::new("a2")
            },
            ItemMeta {
                brand: Some("B".into()),
                ..ItemMeta::new("b1")
            },
            ItemMeta {
                brand: Some("B".into()),
                ..ItemMeta::new("b2")
            },
        ])
        .unwrap();
        // Hits only for brand-A queries.
        let pairs = vec![
            pair(&["a1"], &["t"], &["t"]),
            pair(&["a2"], &["t"], &["t"]),
            pair(&["b1"], &["t"], &["x"]),
            pair(&["b2"], &["t"], &["y"]),
        ];
        let report = slice_metrics(&pairs, 10, partition_by_brand(&catalog));
        assert_eq!(report.slices["A"].hr_at_k, 1.0);
        assert_eq!(report.slices["B"].hr_at_k, 0.0);
    }

    #[test]
    fn none_everywhere_is_all_unsliceable() {
        let pairs = vec![pair(&["q"], &["t"], &["t"])];
        let report = slice_metrics(&pairs, 10, |_| None);
        assert!(report.slices.is_empty());
        assert_eq!(report.unsliceable, 1);
    }

    #[test]
    fn weighted_slice_mean_equals_global() {
        let pairs = vec![
            pair(&["a"], &["t"], &["t"]),
            pair(&["b"], &["t"], &["x"]),
            pair(&["c"], &["t"], &["t"]),
            pair(&["d"], &["t"], &["t"]),
            pair(&["e"], &["t"], &[]),
        ];
        let report = slice_metrics(&pairs, 10, |case| Some(case.query[0].clone()));
        let weighted: f64 = report
            .slices
            .values()
            .map(|s| s.hr_at_k * s.n_cases as f64)
            .sum();
        let total: usize = report.slices.values().map(|s| s.n_cases).sum();
        // Global HR over sliceable cases, empty predictions as misses.
        let global = 3.0 / 5.0;
        assert!((weighted / total as f64 - global).abs() < 1e-15);
    }

    #[test]
    fn cold_start_partition_keys() {
        let popularity: PopularityMap = [("hot".to_string(), 5u64)].into_iter().collect();
        let pairs = vec![
            pair(&["q"], &["hot"], &["hot"]),
            pair(&["q"], &["new"], &["x"]),
        ];
        let report = slice_metrics(&pairs, 10, partition_by_cold_start(&popularity));
        assert_eq!(report.slices["seen"].n_cases, 1);
        assert_eq!(report.slices["cold_start"].n_cases, 1);
    }
}
