//! Dense token representations trained with skip-gram negative sampling,
//! plus the cosine geometry used by similarity queries and behavioral tests.
//!
//! Sessions are token sequences: item ids for the item space (prod2vec) or
//! feature values such as brands for feature spaces. Training is
//! single-threaded and bit-reproducible for a fixed seed and config.

mod io;
pub mod sgns;

use std::collections::HashMap;
use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::dataset::{Catalog, SessionSet};
use crate::error::{RecError, Result};

pub use io::{load_space, read_space, save_space, write_space};
pub use sgns::train_skipgram;

/// Skip-gram training hyperparameters.
///
/// Defaults are sized for desk-scale corpora; everything is configurable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingConfig {
    /// Vector dimensionality, at least 2.
    pub dim: usize,
    /// Positional context window within a sequence. A window larger than any
    /// sequence means "whole session as context".
    pub window: usize,
    /// Negative samples per (center, context) pair.
    pub negatives: usize,
    pub epochs: usize,
    /// Learning rate decays linearly from `lr_start` to `lr_end` over all
    /// processed pairs.
    pub lr_start: f64,
    pub lr_end: f64,
    /// Tokens rarer than this are dropped from the vocabulary.
    pub min_count: u64,
    pub seed: u64,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig {
            dim: 32,
            window: 3,
            negatives: 5,
            epochs: 5,
            lr_start: 0.025,
            lr_end: 1e-4,
            min_count: 1,
            seed: 42,
        }
    }
}

impl EmbeddingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(RecError::Config(format!("dim must be >= 2, got {}", self.dim)));
        }
        if self.window == 0 || self.negatives == 0 || self.epochs == 0 || self.min_count == 0 {
            return Err(RecError::Config(
                "window, negatives, epochs and min_count must be positive".into(),
            ));
        }
        if !(self.lr_start > 0.0 && self.lr_end > 0.0 && self.lr_end < self.lr_start) {
            return Err(RecError::Config(format!(
                "learning rates must satisfy 0 < lr_end < lr_start, got {} and {}",
                self.lr_start, self.lr_end
            )));
        }
        Ok(())
    }
}

/// A trained token → vector map with cosine geometry.
///
/// Only the input ("in") vectors survive training. Tokens are stored in
/// lexicographic order; vectors are finite and non-zero by construction.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingSpace {
    dim: usize,
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    /// Row-major, `tokens.len() * dim`.
    vectors: Vec<f64>,
    /// Training counts, aligned with `tokens`. Zero for loaded spaces.
    counts: Vec<u64>,
}

impl EmbeddingSpace {
    pub(crate) fn from_parts(
        dim: usize,
        tokens: Vec<String>,
        vectors: Vec<f64>,
        counts: Vec<u64>,
    ) -> Result<Self> {
        if vectors.len() != tokens.len() * dim {
            return Err(RecError::Embedding(format!(
                "vector storage mismatch: {} tokens x dim {} != {} values",
                tokens.len(),
                dim,
                vectors.len()
            )));
        }
        if let Some(bad) = vectors.iter().find(|v| !v.is_finite()) {
            return Err(RecError::Embedding(format!(
                "non-finite vector component {bad}"
            )));
        }
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Ok(EmbeddingSpace {
            dim,
            tokens,
            index,
            vectors,
            counts,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(String::as_str)
    }

    pub fn vector(&self, token: &str) -> Option<&[f64]> {
        let &i = self.index.get(token)?;
        Some(&self.vectors[i * self.dim..(i + 1) * self.dim])
    }

    /// Training count for a token; zero for spaces loaded from disk.
    pub fn count(&self, token: &str) -> Option<u64> {
        let &i = self.index.get(token)?;
        Some(self.counts[i])
    }

    fn vector_at(&self, i: usize) -> &[f64] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    /// Arithmetic mean of the vectors of the given tokens that are in vocab.
    /// `None` when no token is known.
    pub fn mean_vector<'a>(&self, tokens: impl IntoIterator<Item = &'a str>) -> Option<Vec<f64>> {
        let mut sum = vec![0.0; self.dim];
        let mut n = 0usize;
        for token in tokens {
            if let Some(v) = self.vector(token) {
                for (s, x) in sum.iter_mut().zip(v) {
                    *s += x;
                }
                n += 1;
            }
        }
        if n == 0 {
            return None;
        }
        for s in &mut sum {
            *s /= n as f64;
        }
        Some(sum)
    }
}

/// Cosine distance `1 - u.v / (|u||v|)`, clamped to the mathematical range
/// [0, 2]. Errors on length mismatch or a zero-norm input.
pub fn cosine_distance(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(RecError::Embedding(format!(
            "cosine distance over mismatched lengths {} and {}",
            u.len(),
            v.len()
        )));
    }
    let mut dot = 0.0;
    let mut nu = 0.0;
    let mut nv = 0.0;
    for (a, b) in u.iter().zip(v) {
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if nu == 0.0 || nv == 0.0 {
        return Err(RecError::Embedding("cosine distance of a zero vector".into()));
    }
    let d = 1.0 - dot / (nu.sqrt() * nv.sqrt());
    Ok(d.clamp(0.0, 2.0))
}

/// A nearest-neighbor query: either a vocab token or a raw vector.
#[derive(Clone, Copy, Debug)]
pub enum Query<'a> {
    Token(&'a str),
    Vector(&'a [f64]),
}

/// The `k` vocab tokens closest to the query by cosine distance.
///
/// The query token itself and everything in `exclude` are left out; ties
/// break lexicographically. Fewer than `k` results only when the vocabulary
/// is exhausted.
pub fn nearest_neighbors(
    space: &EmbeddingSpace,
    query: Query<'_>,
    k: usize,
    exclude: &HashSet<String>,
) -> Result<Vec<(String, f64)>> {
    let (query_vec, self_token) = match query {
        Query::Token(t) => {
            let v = space
                .vector(t)
                .ok_or_else(|| RecError::Embedding(format!("unknown query token {t:?}")))?;
            (v, Some(t))
        }
        Query::Vector(v) => (v, None),
    };

    let mut ranked: Vec<(f64, usize)> = Vec::with_capacity(space.len());
    for i in 0..space.len() {
        let token = &space.tokens[i];
        if Some(token.as_str()) == self_token || exclude.contains(token) {
            continue;
        }
        ranked.push((cosine_distance(query_vec, space.vector_at(i))?, i));
    }
    // Tokens are stored sorted, so an index tie-break is a lexicographic one.
    ranked.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    ranked.truncate(k);
    Ok(ranked
        .into_iter()
        .map(|(d, i)| (space.tokens[i].clone(), d))
        .collect())
}

/// Which item feature to project sessions onto.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    Brand,
    CategoryLeaf,
}

/// Maps each session item-by-item to a feature value, producing the token
/// sequences a feature space is trained on.
///
/// Items lacking the feature are dropped, consecutive duplicate tokens are
/// collapsed, and sequences shorter than 2 are discarded.
pub fn feature_sequences(
    sessions: &SessionSet,
    catalog: &Catalog,
    feature: Feature,
) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    for session in sessions.iter() {
        let mut seq: Vec<String> = Vec::new();
        for item in &session.items {
            let token = match feature {
                Feature::Brand => catalog.brand_of(item),
                Feature::CategoryLeaf => catalog.leaf_category_of(item),
            };
            if let Some(token) = token {
                if seq.last().map(String::as_str) != Some(token) {
                    seq.push(token.to_string());
                }
            }
        }
        if seq.len() >= 2 {
            out.push(seq);
        }
    }
    out
}
