//! "Being less wrong": cosine distances from query to label and from query
//! to prediction, over an embedding space.
//!
//! A hit-or-miss metric cannot tell a terrible suggestion from a reasonable
//! mistake; comparing the two distance distributions can. For missed
//! predictions, the closer the query→prediction distribution sits to the
//! query→label one, the more aligned the model's mistakes are with the task.

use serde::{Deserialize, Serialize};

use crate::dataset::{Catalog, ItemId, TestCase};
use crate::embedding::{cosine_distance, EmbeddingSpace};
use crate::error::{RecError, Result};
use crate::metrics::EvalPair;

/// Which cases enter the distance statistics.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceScope {
    /// Drop cases whose top-1 prediction equals the primary ground truth.
    MissesOnly,
    All,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub low: f64,
    pub high: f64,
    pub count: u64,
}

/// Paired distance distributions for query→label and query→prediction.
///
/// Both histograms span the full cosine-distance range [0, 2] with identical
/// equal-width bins, so reports from different models are directly
/// comparable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceReport {
    pub name: String,
    pub scope: DistanceScope,
    pub mean_query_to_label: Option<f64>,
    pub mean_query_to_pred: Option<f64>,
    pub histogram_label: Vec<HistogramBin>,
    pub histogram_pred: Vec<HistogramBin>,
    pub n_cases: usize,
    pub n_skipped: usize,
}

fn histogram(values: &[f64], bins: usize) -> Vec<HistogramBin> {
    let width = 2.0 / bins as f64;
    let mut counts = vec![0u64; bins];
    for &v in values {
        let idx = ((v / 2.0) * bins as f64).floor() as usize;
        counts[idx.min(bins - 1)] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| HistogramBin {
            low: i as f64 * width,
            high: (i + 1) as f64 * width,
            count,
        })
        .collect()
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

/// Shared distance loop: callers decide how a query maps to a vector and how
/// a single item maps to a vector. Any unmapped element skips the case.
fn distance_core(
    name: &str,
    pairs: &[EvalPair],
    scope: DistanceScope,
    bins: usize,
    query_vec: impl Fn(&TestCase) -> Option<Vec<f64>>,
    item_vec: impl Fn(&ItemId) -> Option<Vec<f64>>,
) -> Result<DistanceReport> {
    if bins == 0 {
        return Err(RecError::Config("histogram needs at least one bin".into()));
    }
    let mut d_label = Vec::new();
    let mut d_pred = Vec::new();
    for (case, pred) in pairs {
        if pred.is_empty() {
            continue;
        }
        let top1 = &pred.items[0];
        if scope == DistanceScope::MissesOnly && top1 == case.primary_target() {
            continue;
        }
        let (Some(q), Some(l), Some(p)) = (
            query_vec(case),
            item_vec(case.primary_target()),
            item_vec(top1),
        ) else {
            continue;
        };
        // A zero-norm query mean is unmeasurable; skip the case.
        let (Ok(dl), Ok(dp)) = (cosine_distance(&q, &l), cosine_distance(&q, &p)) else {
            continue;
        };
        d_label.push(dl);
        d_pred.push(dp);
    }
    let n_cases = d_label.len();
    Ok(DistanceReport {
        name: name.into(),
        scope,
        mean_query_to_label: mean(&d_label),
        mean_query_to_pred: mean(&d_pred),
        histogram_label: histogram(&d_label, bins),
        histogram_pred: histogram(&d_pred, bins),
        n_cases,
        n_skipped: pairs.len() - n_cases,
    })
}

/// Query→label vs query→prediction cosine distances over an item space.
///
/// The query vector is the mean embedding of in-vocab query items; cases
/// with any out-of-vocab required element are skipped and counted.
pub fn less_wrong_distances(
    pairs: &[EvalPair],
    space: &EmbeddingSpace,
    scope: DistanceScope,
    bins: usize,
) -> Result<DistanceReport> {
    if space.is_empty() {
        return Err(RecError::Embedding("empty embedding space".into()));
    }
    distance_core(
        "less_wrong",
        pairs,
        scope,
        bins,
        |case| space.mean_vector(case.query.iter().map(String::as_str)),
        |item| space.vector(item).map(<[f64]>::to_vec),
    )
}

/// The same computation over brand tokens: every item maps to its brand
/// first, and distances are measured in a space trained on brand sequences.
/// Cases whose query, label or prediction lack a brand (in the catalog or
/// in the brand vocabulary) are skipped and counted.
pub fn brand_distance(
    pairs: &[EvalPair],
    brand_space: &EmbeddingSpace,
    catalog: &Catalog,
    scope: DistanceScope,
    bins: usize,
) -> Result<DistanceReport> {
    if brand_space.is_empty() {
        return Err(RecError::Embedding("empty brand space".into()));
    }
    distance_core(
        "brand_distance",
        pairs,
        scope,
        bins,
        |case| {
            brand_space.mean_vector(
                case.query
                    .iter()
                    .filter_map(|item| catalog.brand_of(item)),
            )
        },
        |item| {
            let brand = catalog.brand_of(item)?;
            brand_space.vector(brand).map(<[f64]>::to_vec)
        },
    )
}
