//! The black-box recommender contract, reference baselines and a remote
//! HTTP client.
//!
//! Any model that can answer "given these query items, return a ranked
//! list" can be tested: implement [`RecModel`] or stand the model behind
//! the remote batch protocol (see [`RemoteModel`]).

mod baselines;
pub mod mock;
mod remote;

use serde::{Deserialize, Serialize};

use crate::dataset::ItemId;
use crate::error::Result;

pub use baselines::{ConstantModel, CooccurrenceModel, OracleModel, P2vModel, PopularityModel};
pub use mock::MockRecServer;
pub use remote::{RemoteConfig, RemoteModel};

/// A ranked prediction for one query.
///
/// Valid lists have at most `k` items, no duplicates, no item from their own
/// query, and non-increasing scores when scores are present.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PredictionList {
    pub items: Vec<ItemId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<Vec<f64>>,
}

impl PredictionList {
    pub fn new(items: Vec<ItemId>) -> Self {
        PredictionList {
            items,
            scores: None,
        }
    }

    pub fn with_scores(items: Vec<ItemId>, scores: Vec<f64>) -> Self {
        PredictionList {
            items,
            scores: Some(scores),
        }
    }

    /// An empty prediction; the harness counts these as skips.
    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Top-k item view.
    pub fn top_k(&self, k: usize) -> &[ItemId] {
        &self.items[..self.items.len().min(k)]
    }
}

/// The interface every tested recommender implements.
///
/// `predict` returns one list per query, order-aligned. Local models must be
/// pure within a run (same input, same output); remote models are exempt but
/// their responses are recorded by the harness.
pub trait RecModel: Send + Sync {
    fn name(&self) -> &str;

    fn predict(&self, queries: &[Vec<ItemId>], k: usize) -> Result<Vec<PredictionList>>;

    /// Contract violations sanitized away so far (remote models only).
    fn sanitization_count(&self) -> u64 {
        0
    }

    /// Whether repeated runs against this model reproduce bit-identical
    /// results. Local baselines are deterministic; remote models are not.
    fn is_deterministic(&self) -> bool {
        true
    }
}

/// Checks one prediction against the contract. Returns a description of the
/// first violation, if any.
pub fn validate_prediction(
    query: &[ItemId],
    k: usize,
    pred: &PredictionList,
) -> std::result::Result<(), String> {
    if pred.items.len() > k {
        return Err(format!(
            "prediction has {} items for k = {k}",
            pred.items.len()
        ));
    }
    let mut seen = std::collections::HashSet::new();
    for item in &pred.items {
        if !seen.insert(item.as_str()) {
            return Err(format!("duplicate item {item:?}"));
        }
        if query.iter().any(|q| q == item) {
            return Err(format!("prediction contains query item {item:?}"));
        }
    }
    if let Some(scores) = &pred.scores {
        if scores.len() != pred.items.len() {
            return Err(format!(
                "{} scores for {} items",
                scores.len(),
                pred.items.len()
            ));
        }
        if scores.windows(2).any(|w| w[0] < w[1]) {
            return Err("scores are not non-increasing".into());
        }
    }
    Ok(())
}

/// Validates a whole order-aligned batch.
pub fn validate_batch(
    queries: &[Vec<ItemId>],
    k: usize,
    preds: &[PredictionList],
) -> std::result::Result<(), String> {
    if queries.len() != preds.len() {
        return Err(format!(
            "{} predictions for {} queries",
            preds.len(),
            queries.len()
        ));
    }
    for (i, (query, pred)) in queries.iter().zip(preds).enumerate() {
        validate_prediction(query, k, pred).map_err(|e| format!("query {i}: {e}"))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(raw: &[&str]) -> Vec<ItemId> {
        raw.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn valid_prediction_passes() {
        let pred = PredictionList::with_scores(ids(&["a", "b"]), vec![2.0, 1.0]);
        assert!(validate_prediction(&ids(&["q"]), 5, &pred).is_ok());
    }

    #[test]
    fn duplicate_item_rejected() {
        let pred = PredictionList::new(ids(&["a", "a"]));
        assert!(validate_prediction(&ids(&["q"]), 5, &pred).is_err());
    }

    #[test]
    fn query_item_rejected() {
        let pred = PredictionList::new(ids(&["q"]));
        assert!(validate_prediction(&ids(&["q"]), 5, &pred).is_err());
    }

    #[test]
    fn overlong_list_rejected() {
        let pred = PredictionList::new(ids(&["a", "b", "c"]));
        assert!(validate_prediction(&ids(&["q"]), 2, &pred).is_err());
    }

    #[test]
    fn increasing_scores_rejected() {
        let pred = PredictionList::with_scores(ids(&["a", "b"]), vec![1.0, 2.0]);
        assert!(validate_prediction(&ids(&["q"]), 5, &pred).is_err());
    }
}
