//! Reference baselines and test doubles.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use crate::dataset::{item_popularity, ItemId, SessionSet, TestCase};
use crate::embedding::{nearest_neighbors, EmbeddingSpace, Query};
use crate::error::Result;
use crate::models::{PredictionList, RecModel};

/// Predicts the k most popular training items, ties broken lexicographically.
pub struct PopularityModel {
    /// Items sorted by (count desc, id asc), with their counts.
    ranked: Vec<(ItemId, u64)>,
}

impl PopularityModel {
    pub fn from_train(train: &SessionSet) -> Self {
        let mut ranked: Vec<(ItemId, u64)> = item_popularity(train).into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        PopularityModel { ranked }
    }
}

impl RecModel for PopularityModel {
    fn name(&self) -> &str {
        "popularity"
    }

    fn predict(&self, queries: &[Vec<ItemId>], k: usize) -> Result<Vec<PredictionList>> {
        Ok(queries
            .iter()
            .map(|query| {
                let in_query: HashSet<&str> = query.iter().map(String::as_str).collect();
                let (items, scores): (Vec<ItemId>, Vec<f64>) = self
                    .ranked
                    .iter()
                    .filter(|(id, _)| !in_query.contains(id.as_str()))
                    .take(k)
                    .map(|(id, count)| (id.clone(), *count as f64))
                    .unzip();
                PredictionList::with_scores(items, scores)
            })
            .collect())
    }
}

/// Session co-occurrence scoring: `C[a][b]` counts sessions containing both
/// `a` and `b` (deduplicated within a session), which is symmetric by
/// construction. A query scores candidates by summing co-occurrence with
/// every query item; ties break by popularity, then lexicographically. A
/// fully unseen query degrades to the popularity ranking.
pub struct CooccurrenceModel {
    items: Vec<ItemId>,
    index: HashMap<ItemId, usize>,
    popularity: Vec<u64>,
    cooc: Vec<HashMap<u32, u64>>,
}

impl CooccurrenceModel {
    pub fn from_train(train: &SessionSet) -> Self {
        let pop = item_popularity(train);
        let items: Vec<ItemId> = pop.keys().cloned().collect(); // sorted
        let index: HashMap<ItemId, usize> =
            items.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        let popularity: Vec<u64> = items.iter().map(|t| pop[t]).collect();

        let mut cooc: Vec<HashMap<u32, u64>> = vec![HashMap::new(); items.len()];
        for session in train.iter() {
            let mut distinct: Vec<usize> =
                session.items.iter().map(|t| index[t]).collect::<HashSet<_>>().into_iter().collect();
            distinct.sort_unstable();
            for (pos, &a) in distinct.iter().enumerate() {
                for &b in &distinct[pos + 1..] {
                    *cooc[a].entry(b as u32).or_insert(0) += 1;
                    *cooc[b].entry(a as u32).or_insert(0) += 1;
                }
            }
        }
        CooccurrenceModel {
            items,
            index,
            popularity,
            cooc,
        }
    }

    /// Co-occurrence count for a pair, zero when either item is unseen.
    pub fn pair_count(&self, a: &str, b: &str) -> u64 {
        match (self.index.get(a), self.index.get(b)) {
            (Some(&ia), Some(&ib)) => self.cooc[ia].get(&(ib as u32)).copied().unwrap_or(0),
            _ => 0,
        }
    }
}

impl RecModel for CooccurrenceModel {
    fn name(&self) -> &str {
        "cooccurrence"
    }

    fn predict(&self, queries: &[Vec<ItemId>], k: usize) -> Result<Vec<PredictionList>> {
        Ok(queries
            .iter()
            .map(|query| {
                let mut scores = vec![0u64; self.items.len()];
                for q in query {
                    if let Some(&qi) = self.index.get(q) {
                        for (&cand, &count) in &self.cooc[qi] {
                            scores[cand as usize] += count;
                        }
                    }
                }
                let in_query: HashSet<&str> = query.iter().map(String::as_str).collect();
                let mut ranked: Vec<usize> = (0..self.items.len())
                    .filter(|&i| !in_query.contains(self.items[i].as_str()))
                    .collect();
                ranked.sort_by(|&a, &b| {
                    scores[b]
                        .cmp(&scores[a])
                        .then(self.popularity[b].cmp(&self.popularity[a]))
                        .then(self.items[a].cmp(&self.items[b]))
                });
                ranked.truncate(k);
                let items: Vec<ItemId> = ranked.iter().map(|&i| self.items[i].clone()).collect();
                let score_vals: Vec<f64> = ranked.iter().map(|&i| scores[i] as f64).collect();
                PredictionList::with_scores(items, score_vals)
            })
            .collect())
    }
}

/// Nearest-neighbor recommendations over a trained item space: the query
/// vector is the mean embedding of in-vocab query items. Queries entirely
/// out of vocabulary get an empty prediction, which the harness counts as a
/// skip.
pub struct P2vModel {
    space: Arc<EmbeddingSpace>,
}

impl P2vModel {
    pub fn new(space: Arc<EmbeddingSpace>) -> Self {
        P2vModel { space }
    }

    pub fn space(&self) -> &EmbeddingSpace {
        &self.space
    }
}

impl RecModel for P2vModel {
    fn name(&self) -> &str {
        "p2v"
    }

    fn predict(&self, queries: &[Vec<ItemId>], k: usize) -> Result<Vec<PredictionList>> {
        let mut out = Vec::with_capacity(queries.len());
        for query in queries {
            let mean = self.space.mean_vector(query.iter().map(String::as_str));
            let list = match mean {
                None => PredictionList::default(),
                Some(vec) => {
                    let exclude: HashSet<String> = query.iter().cloned().collect();
                    let hits = nearest_neighbors(&self.space, Query::Vector(&vec), k, &exclude)?;
                    let (items, dists): (Vec<ItemId>, Vec<f64>) = hits.into_iter().unzip();
                    // Similarity = 1 - distance keeps scores descending.
                    PredictionList::with_scores(items, dists.into_iter().map(|d| 1.0 - d).collect())
                }
            };
            out.push(list);
        }
        Ok(out)
    }
}

/// Answers every known query with its ground truth; used to pin the upper
/// bound of every metric.
pub struct OracleModel {
    answers: HashMap<Vec<ItemId>, Vec<ItemId>>,
}

impl OracleModel {
    pub fn new(cases: &[TestCase]) -> Self {
        OracleModel {
            answers: cases
                .iter()
                .map(|c| (c.query.clone(), c.ground_truth.clone()))
                .collect(),
        }
    }
}

impl RecModel for OracleModel {
    fn name(&self) -> &str {
        "oracle"
    }

    fn predict(&self, queries: &[Vec<ItemId>], k: usize) -> Result<Vec<PredictionList>> {
        Ok(queries
            .iter()
            .map(|query| match self.answers.get(query) {
                None => PredictionList::default(),
                Some(truth) => {
                    PredictionList::new(truth.iter().take(k).cloned().collect())
                }
            })
            .collect())
    }
}

/// Always predicts the same fixed list (minus query items).
pub struct ConstantModel {
    name: String,
    items: Vec<ItemId>,
}

impl ConstantModel {
    pub fn new(items: Vec<ItemId>) -> Self {
        ConstantModel {
            name: "constant".into(),
            items,
        }
    }

    pub fn with_name(items: Vec<ItemId>, name: impl Into<String>) -> Self {
        ConstantModel {
            name: name.into(),
            items,
        }
    }
}

impl RecModel for ConstantModel {
    fn name(&self) -> &str {
        &self.name
    }

    fn predict(&self, queries: &[Vec<ItemId>], k: usize) -> Result<Vec<PredictionList>> {
        Ok(queries
            .iter()
            .map(|query| {
                PredictionList::new(
                    self.items
                        .iter()
                        .filter(|i| !query.contains(i))
                        .take(k)
                        .cloned()
                        .collect(),
                )
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Session;

    fn sessions(raw: &[&[&str]]) -> SessionSet {
        SessionSet::new(
            raw.iter()
                .enumerate()
                .map(|(i, items)| Session {
                    id: format!("s{i}"),
                    items: items.iter().map(|s| s.to_string()).collect(),
                    start_ts: i as i64,
                })
                .collect(),
        )
    }

    fn ids(raw: &[&str]) -> Vec<ItemId> {
        raw.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn popularity_ranks_and_excludes_query() {
        // counts {a:3, b:2, c:1}
        let train = sessions(&[&["a", "b"], &["a", "b"], &["a", "c"]]);
        let model = PopularityModel::from_train(&train);
        let preds = model.predict(&[ids(&["b"])], 2).unwrap();
        assert_eq!(preds[0].items, ids(&["a", "c"]));
    }

    #[test]
    fn popularity_empty_when_query_covers_catalog() {
        let train = sessions(&[&["a", "b"]]);
        let model = PopularityModel::from_train(&train);
        let preds = model.predict(&[ids(&["a", "b"])], 3).unwrap();
        assert!(preds[0].is_empty());
    }

    #[test]
    fn popularity_tie_breaks_lexicographically() {
        let train = sessions(&[&["b", "a"], &["a", "b"]]);
        let model = PopularityModel::from_train(&train);
        let preds = model.predict(&[ids(&[])], 1).unwrap();
        assert_eq!(preds[0].items, ids(&["a"]));
    }

    #[test]
    fn cooccurrence_prefers_stronger_pair() {
        // C[a][b] = 2 > C[a][c] = 1.
        let train = sessions(&[&["a", "b"], &["a", "b"], &["a", "c"]]);
        let model = CooccurrenceModel::from_train(&train);
        let preds = model.predict(&[ids(&["a"])], 2).unwrap();
        assert_eq!(preds[0].items, ids(&["b", "c"]));
    }

    #[test]
    fn cooccurrence_unseen_query_falls_back_to_popularity() {
        let train = sessions(&[&["a", "b"], &["a", "c"]]);
        let model = CooccurrenceModel::from_train(&train);
        let preds = model.predict(&[ids(&["zzz"])], 2).unwrap();
        // All scores zero: popularity then lexicographic.
        assert_eq!(preds[0].items, ids(&["a", "b"]));
    }

    #[test]
    fn cooccurrence_counts_are_symmetric() {
        let train = sessions(&[&["a", "b", "c"], &["b", "c"], &["a", "c", "d"]]);
        let model = CooccurrenceModel::from_train(&train);
        for a in ["a", "b", "c", "d"] {
            for b in ["a", "b", "c", "d"] {
                assert_eq!(model.pair_count(a, b), model.pair_count(b, a));
            }
        }
    }

    #[test]
    fn cooccurrence_dedups_within_session() {
        let train = sessions(&[&["a", "b", "a"]]);
        let model = CooccurrenceModel::from_train(&train);
        assert_eq!(model.pair_count("a", "b"), 1);
    }

    #[test]
    fn oracle_answers_known_queries() {
        let cases = vec![TestCase::new(ids(&["a"]), ids(&["b"])).unwrap()];
        let model = OracleModel::new(&cases);
        let preds = model.predict(&[ids(&["a"]), ids(&["x"])], 5).unwrap();
        assert_eq!(preds[0].items, ids(&["b"]));
        assert!(preds[1].is_empty());
    }

    #[test]
    fn constant_filters_query_and_truncates() {
        let model = ConstantModel::new(ids(&["x", "y", "z"]));
        let preds = model.predict(&[ids(&["y"])], 1).unwrap();
        assert_eq!(preds[0].items, ids(&["x"]));
    }
}
