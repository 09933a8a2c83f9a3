//! Discrete distance over the product tree: path length between the anchor
//! item's category node and the top-1 prediction's category node.

use serde::{Deserialize, Serialize};

use crate::dataset::{Catalog, Taxonomy};
use crate::error::{RecError, Result};
use crate::metrics::EvalPair;

/// Which item anchors the distance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathAnchor {
    /// The last query item (the input the prediction answered).
    QueryLast,
    /// The primary ground-truth item.
    Label,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathLengthReport {
    pub name: String,
    pub anchor: PathAnchor,
    pub mean: Option<f64>,
    pub n_cases: usize,
    pub n_skipped: usize,
}

/// Mean taxonomy path length between anchor and top-1 prediction.
///
/// Distance is `depth(a) + depth(b) - 2 * depth(lca)`; items in the same
/// leaf category sit at distance zero. Cases where either side lacks a
/// category path are skipped and counted. Longer mean distance indicates
/// greater diversity between input and suggestion.
pub fn taxonomy_path_length(
    pairs: &[EvalPair],
    catalog: &Catalog,
    anchor: PathAnchor,
) -> Result<PathLengthReport> {
    if catalog.taxonomy().is_trivial() {
        return Err(RecError::Config(
            "taxonomy path length needs category paths in the catalog".into(),
        ));
    }
    let mut sum = 0usize;
    let mut n = 0usize;
    for (case, pred) in pairs {
        if pred.is_empty() {
            continue;
        }
        let anchor_item = match anchor {
            PathAnchor::QueryLast => case.query.last().expect("query is non-empty"),
            PathAnchor::Label => case.primary_target(),
        };
        let (Some(a), Some(b)) = (
            catalog.category_path_of(anchor_item),
            catalog.category_path_of(&pred.items[0]),
        ) else {
            continue;
        };
        sum += Taxonomy::path_distance(a, b);
        n += 1;
    }
    Ok(PathLengthReport {
        name: "path_length".into(),
        anchor,
        mean: (n > 0).then(|| sum as f64 / n as f64),
        n_cases: n,
        n_skipped: pairs.len() - n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{ItemId, ItemMeta, TestCase};
    use crate::models::PredictionList;

    fn ids(raw: &[&str]) -> Vec<ItemId> {
        raw.iter().map(|s| s.to_string()).collect()
    }

    fn catalog() -> Catalog {
        let item = |id: &str, path: &str| ItemMeta {
            category_path: Some(path.split('>').map(str::to_string).collect()),
            ..ItemMeta::new(id)
        };
        Catalog::from_rows(vec![
            item("i_ax1", "root>A>x"),
            item("i_ax2", "root>A>x"),
            item("i_ay", "root>A>y"),
            item("i_byz", "root>B>y>z"),
            ItemMeta::new("uncategorized"),
        ])
        .unwrap()
    }

    fn pair(query: &[&str], truth: &[&str], pred: &[&str]) -> EvalPair {
        (
            TestCase::new(ids(query), ids(truth)).unwrap(),
            PredictionList::new(ids(pred)),
        )
    }

    #[test]
    fn same_leaf_is_zero() {
        let report = taxonomy_path_length(
            &[pair(&["i_ax1"], &["i_ay"], &["i_ax2"])],
            &catalog(),
            PathAnchor::QueryLast,
        )
        .unwrap();
        assert_eq!(report.mean, Some(0.0));
    }

    #[test]
    fn sibling_leaves_are_two_apart() {
        let report = taxonomy_path_length(
            &[pair(&["i_ax1"], &["i_byz"], &["i_ay"])],
            &catalog(),
            PathAnchor::QueryLast,
        )
        .unwrap();
        assert_eq!(report.mean, Some(2.0));
    }

    #[test]
    fn cross_branch_depths_two_and_three() {
        let report = taxonomy_path_length(
            &[pair(&["i_ax1"], &["i_ay"], &["i_byz"])],
            &catalog(),
            PathAnchor::QueryLast,
        )
        .unwrap();
        assert_eq!(report.mean, Some(5.0));
    }

    #[test]
    fn label_anchor_uses_ground_truth() {
        let report = taxonomy_path_length(
            &[pair(&["i_byz"], &["i_ax1"], &["i_ax2"])],
            &catalog(),
            PathAnchor::Label,
        )
        .unwrap();
        assert_eq!(report.mean, Some(0.0));
    }

    #[test]
    fn uncategorized_items_skip_the_case() {
        let report = taxonomy_path_length(
            &[
                pair(&["uncategorized"], &["i_ay"], &["i_ax1"]),
                pair(&["i_ax1"], &["i_ay"], &["uncategorized"]),
                pair(&["i_ax1"], &["i_byz"], &["i_ax2"]),
            ],
            &catalog(),
            PathAnchor::QueryLast,
        )
        .unwrap();
        assert_eq!(report.n_cases, 1);
        assert_eq!(report.n_skipped, 2);
    }

    #[test]
    fn trivial_taxonomy_is_an_error() {
        let catalog = Catalog::from_rows(vec![ItemMeta::new("a")]).unwrap();
        assert!(taxonomy_path_length(&[], &catalog, PathAnchor::QueryLast).is_err());
    }
}
