//! Dataset ingestion: interaction logs, catalogs, sessions, temporal splits
//! and test-case construction.
//!
//! All types here are immutable after construction and safe to share across
//! threads. Loading and splitting are single-threaded.

mod cases;
mod catalog;
mod io;
mod sessions;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{RecError, Result};

pub use cases::{build_test_cases, CaseBuild, CaseScheme};
pub use catalog::{Catalog, ItemMeta, Taxonomy};
pub use io::{
    load_catalog, load_interactions, write_catalog_jsonl, write_interactions_jsonl, FileFormat,
};
pub use sessions::{item_popularity, sessionize, temporal_split, SplitRule};

/// Item identifiers are opaque strings throughout the crate.
pub type ItemId = String;

/// Training-interaction counts per item.
pub type PopularityMap = BTreeMap<ItemId, u64>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventType {
    View,
    Add,
    Purchase,
}

impl Default for EventType {
    fn default() -> Self {
        EventType::View
    }
}

/// One raw timestamped item interaction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interaction {
    pub session_id: String,
    pub item_id: ItemId,
    /// Milliseconds since epoch, non-negative.
    pub timestamp: i64,
    #[serde(default)]
    pub event_type: EventType,
}

/// An ordered item sequence for one session.
///
/// Items are ordered by ascending timestamp, ties broken by input order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    pub items: Vec<ItemId>,
    /// Timestamp of the first interaction; drives temporal splitting.
    pub start_ts: i64,
}

/// A set of sessions, ordered by (start timestamp, session id).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SessionSet {
    sessions: Vec<Session>,
}

impl SessionSet {
    /// Builds a set from sessions, normalizing the order to
    /// (start timestamp, session id).
    pub fn new(mut sessions: Vec<Session>) -> Self {
        sessions.sort_by(|a, b| (a.start_ts, &a.id).cmp(&(b.start_ts, &b.id)));
        SessionSet { sessions }
    }

    pub fn len(&self) -> usize {
        self.sessions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sessions.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Session> {
        self.sessions.iter()
    }

    pub fn sessions(&self) -> &[Session] {
        &self.sessions
    }

    /// Total number of interactions across all sessions.
    pub fn total_interactions(&self) -> usize {
        self.sessions.iter().map(|s| s.items.len()).sum()
    }

    /// Sessions as plain token sequences, for embedding training.
    pub fn item_sequences(&self) -> Vec<Vec<String>> {
        self.sessions.iter().map(|s| s.items.clone()).collect()
    }
}

/// One evaluation sample: a query item sequence and its ground truth.
///
/// The first ground-truth element is the primary target. Query and ground
/// truth never share an item.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TestCase {
    pub query: Vec<ItemId>,
    pub ground_truth: Vec<ItemId>,
}

impl TestCase {
    pub fn new(query: Vec<ItemId>, ground_truth: Vec<ItemId>) -> Result<Self> {
        if query.is_empty() {
            return Err(RecError::Data("test case with empty query".into()));
        }
        if ground_truth.is_empty() {
            return Err(RecError::Data("test case with empty ground truth".into()));
        }
        if ground_truth.iter().any(|g| query.contains(g)) {
            return Err(RecError::Data(
                "test case query and ground truth overlap".into(),
            ));
        }
        Ok(TestCase {
            query,
            ground_truth,
        })
    }

    /// The primary target used by point-wise metrics.
    pub fn primary_target(&self) -> &ItemId {
        &self.ground_truth[0]
    }
}

/// A train/test split plus catalog and training popularity counts.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub train: SessionSet,
    pub test: SessionSet,
    pub catalog: Catalog,
    pub popularity: PopularityMap,
}

impl Dataset {
    /// Assembles a dataset, computing popularity from the train split and
    /// checking that train and test session ids are disjoint.
    pub fn new(train: SessionSet, test: SessionSet, catalog: Catalog) -> Result<Self> {
        let train_ids: BTreeSet<&str> = train.iter().map(|s| s.id.as_str()).collect();
        if let Some(dup) = test.iter().find(|s| train_ids.contains(s.id.as_str())) {
            return Err(RecError::Data(format!(
                "session id {:?} appears in both train and test",
                dup.id
            )));
        }
        let popularity = item_popularity(&train);
        Ok(Dataset {
            train,
            test,
            catalog,
            popularity,
        })
    }
}
