//! Asymmetry checks for complementary-item behavior.
//!
//! Complementary recommendations have a natural direction (a TV suggests a
//! cable far more than a cable suggests a TV), while similar-item
//! recommendations are reciprocal. The directional check measures exactly
//! that reciprocity; the price check exploits that the driver item of a
//! complementary pair is typically the expensive one.

use std::collections::{BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::dataset::{Catalog, ItemId};
use crate::error::{RecError, Result};
use crate::metrics::EvalPair;
use crate::models::RecModel;

/// Reciprocity of top-k membership over probe items.
///
/// A score near 1 means symmetric (similar-items) behavior; a low score
/// means directional (complementary) behavior. `None` when no pair could be
/// formed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectionalAsymmetry {
    pub score: Option<f64>,
    pub n_pairs: usize,
}

/// For each probe `a` and each `b` the model suggests for `[a]`, checks
/// whether `a` is suggested back for `[b]`; the score is the reciprocal
/// fraction.
pub fn asymmetry_directional(
    model: &dyn RecModel,
    probe_items: &[ItemId],
    k: usize,
) -> Result<DirectionalAsymmetry> {
    if probe_items.is_empty() {
        return Err(RecError::Config("no probe items".into()));
    }
    let forward_queries: Vec<Vec<ItemId>> = probe_items.iter().map(|a| vec![a.clone()]).collect();
    let forward = model.predict(&forward_queries, k)?;

    let mut topk: HashMap<ItemId, HashSet<ItemId>> = HashMap::new();
    for (probe, pred) in probe_items.iter().zip(&forward) {
        topk.insert(probe.clone(), pred.items.iter().cloned().collect());
    }
    let secondary: BTreeSet<ItemId> = forward
        .iter()
        .flat_map(|pred| pred.items.iter())
        .filter(|b| !topk.contains_key(*b))
        .cloned()
        .collect();
    let secondary_queries: Vec<Vec<ItemId>> = secondary.iter().map(|b| vec![b.clone()]).collect();
    let backward = model.predict(&secondary_queries, k)?;
    for (item, pred) in secondary.iter().zip(&backward) {
        topk.insert(item.clone(), pred.items.iter().cloned().collect());
    }

    let mut n_pairs = 0usize;
    let mut reciprocal = 0usize;
    for (a, pred) in probe_items.iter().zip(&forward) {
        for b in &pred.items {
            n_pairs += 1;
            if topk[b].contains(a) {
                reciprocal += 1;
            }
        }
    }
    Ok(DirectionalAsymmetry {
        score: (n_pairs > 0).then(|| reciprocal as f64 / n_pairs as f64),
        n_pairs,
    })
}

/// Price structure of predictions against the most expensive query item.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriceAsymmetry {
    /// Fraction of priced predicted slots strictly cheaper than the anchor.
    pub frac_cheaper: Option<f64>,
    /// Geometric mean of price(prediction) / price(anchor).
    pub mean_price_ratio: Option<f64>,
    pub n_cases: usize,
    pub n_skipped: usize,
}

/// Compares the prices of top-k predictions against the max-priced query
/// item. Cases without a positively priced query item, or without any
/// priced prediction, are skipped and counted. Equal prices count as "not
/// cheaper" and contribute a ratio of exactly 1.
pub fn price_asymmetry(pairs: &[EvalPair], catalog: &Catalog, k: usize) -> Result<PriceAsymmetry> {
    if !catalog.has_prices() {
        return Err(RecError::Config(
            "price asymmetry needs prices in the catalog".into(),
        ));
    }
    let mut cheaper = 0usize;
    let mut slots = 0usize;
    let mut log_ratio_sum = 0.0f64;
    let mut n_cases = 0usize;
    for (case, pred) in pairs {
        let anchor = case
            .query
            .iter()
            .filter_map(|q| catalog.price_of(q))
            .fold(f64::NAN, f64::max);
        if !anchor.is_finite() || anchor <= 0.0 {
            continue;
        }
        let mut contributed = false;
        for item in pred.top_k(k) {
            let Some(price) = catalog.price_of(item) else {
                continue;
            };
            slots += 1;
            contributed = true;
            if price < anchor {
                cheaper += 1;
            }
            log_ratio_sum += (price / anchor).ln();
        }
        if contributed {
            n_cases += 1;
        }
    }
    Ok(PriceAsymmetry {
        frac_cheaper: (slots > 0).then(|| cheaper as f64 / slots as f64),
        mean_price_ratio: (slots > 0).then(|| (log_ratio_sum / slots as f64).exp()),
        n_cases,
        n_skipped: pairs.len() - n_cases,
    })
}
