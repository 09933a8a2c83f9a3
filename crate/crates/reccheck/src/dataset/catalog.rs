//! Item metadata and the category taxonomy induced by catalog paths.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::dataset::ItemId;
use crate::error::{RecError, Result};

/// Per-item metadata used in behavioral joins.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ItemMeta {
    pub item_id: ItemId,
    /// Price in minor currency units, non-negative.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub price: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub brand: Option<String>,
    /// Category labels root→leaf; at least one non-empty label when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category_path: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, String>,
}

impl ItemMeta {
    pub fn new(item_id: impl Into<ItemId>) -> Self {
        ItemMeta {
            item_id: item_id.into(),
            ..ItemMeta::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.item_id.is_empty() {
            return Err(RecError::Data("catalog row with empty item_id".into()));
        }
        if let Some(p) = self.price {
            if !p.is_finite() || p < 0.0 {
                return Err(RecError::Data(format!(
                    "item {:?} has invalid price {}",
                    self.item_id, p
                )));
            }
        }
        if let Some(path) = &self.category_path {
            if path.is_empty() || path.iter().any(|l| l.is_empty()) {
                return Err(RecError::Data(format!(
                    "item {:?} has an empty category label",
                    self.item_id
                )));
            }
        }
        Ok(())
    }

    /// Last label of the category path, when present.
    pub fn leaf_category(&self) -> Option<&str> {
        self.category_path
            .as_ref()
            .and_then(|p| p.last())
            .map(String::as_str)
    }
}

/// The category tree induced by all `category_path` prefixes, rooted at a
/// synthetic root node (depth 0). Every prefix of every path is a node.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Taxonomy {
    nodes: BTreeSet<Vec<String>>,
}

impl Taxonomy {
    pub fn from_paths<'a>(paths: impl Iterator<Item = &'a [String]>) -> Self {
        let mut nodes = BTreeSet::new();
        for path in paths {
            for i in 1..=path.len() {
                nodes.insert(path[..i].to_vec());
            }
        }
        Taxonomy { nodes }
    }

    pub fn contains_path(&self, path: &[String]) -> bool {
        self.nodes.contains(path)
    }

    /// Node count, including the synthetic root.
    pub fn node_count(&self) -> usize {
        self.nodes.len() + 1
    }

    /// True when the tree has at least one category node.
    pub fn is_trivial(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Edge distance between two category nodes:
    /// `depth(a) + depth(b) - 2 * depth(lca)`, where the lowest common
    /// ancestor is the longest common prefix (the synthetic root when the
    /// paths share nothing).
    pub fn path_distance(a: &[String], b: &[String]) -> usize {
        let lcp = a.iter().zip(b.iter()).take_while(|(x, y)| x == y).count();
        a.len() + b.len() - 2 * lcp
    }
}

/// Item metadata indexed by id, plus the induced taxonomy.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Catalog {
    items: BTreeMap<ItemId, ItemMeta>,
    taxonomy: Taxonomy,
}

impl Catalog {
    /// Builds a catalog from rows; duplicate item ids are an error.
    pub fn from_rows(rows: Vec<ItemMeta>) -> Result<Self> {
        let mut items = BTreeMap::new();
        for row in rows {
            row.validate()?;
            let id = row.item_id.clone();
            if items.insert(id.clone(), row).is_some() {
                return Err(RecError::Data(format!("duplicate item_id {:?}", id)));
            }
        }
        let taxonomy = Taxonomy::from_paths(
            items
                .values()
                .filter_map(|m| m.category_path.as_deref()),
        );
        Ok(Catalog { items, taxonomy })
    }

    pub fn get(&self, item_id: &str) -> Option<&ItemMeta> {
        self.items.get(item_id)
    }

    pub fn brand_of(&self, item_id: &str) -> Option<&str> {
        self.get(item_id)?.brand.as_deref()
    }

    pub fn price_of(&self, item_id: &str) -> Option<f64> {
        self.get(item_id)?.price
    }

    pub fn category_path_of(&self, item_id: &str) -> Option<&[String]> {
        self.get(item_id)?.category_path.as_deref()
    }

    pub fn leaf_category_of(&self, item_id: &str) -> Option<&str> {
        self.get(item_id)?.leaf_category()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> impl Iterator<Item = &ItemMeta> {
        self.items.values()
    }

    pub fn taxonomy(&self) -> &Taxonomy {
        &self.taxonomy
    }

    pub fn has_brands(&self) -> bool {
        self.items.values().any(|m| m.brand.is_some())
    }

    pub fn has_prices(&self) -> bool {
        self.items.values().any(|m| m.price.is_some())
    }

    pub fn has_categories(&self) -> bool {
        !self.taxonomy.is_trivial()
    }
}
