//! Session building, temporal splitting and popularity counting.

use std::collections::BTreeMap;

use crate::dataset::{Interaction, ItemId, PopularityMap, Session, SessionSet};
use crate::error::{RecError, Result};

/// Groups interactions into sessions.
///
/// Interactions are grouped by `session_id` and sorted by timestamp within
/// each group, ties broken by input order. With `gap_ms`, a group is further
/// split wherever consecutive timestamps differ by more than the gap; when a
/// split actually happens the sub-sessions get ids `"<id>#0"`, `"<id>#1"`, …
pub fn sessionize(interactions: &[Interaction], gap_ms: Option<i64>) -> SessionSet {
    let mut groups: BTreeMap<&str, Vec<(i64, usize, &ItemId)>> = BTreeMap::new();
    for (idx, it) in interactions.iter().enumerate() {
        groups
            .entry(&it.session_id)
            .or_default()
            .push((it.timestamp, idx, &it.item_id));
    }

    let mut sessions = Vec::new();
    for (id, mut rows) in groups {
        rows.sort_by_key(|&(ts, idx, _)| (ts, idx));
        let parts: Vec<&[(i64, usize, &ItemId)]> = match gap_ms {
            None => vec![&rows[..]],
            Some(gap) => {
                let mut parts = Vec::new();
                let mut start = 0;
                for i in 1..rows.len() {
                    if rows[i].0 - rows[i - 1].0 > gap {
                        parts.push(&rows[start..i]);
                        start = i;
                    }
                }
                parts.push(&rows[start..]);
                parts
            }
        };
        let split = parts.len() > 1;
        for (part_idx, part) in parts.into_iter().enumerate() {
            sessions.push(Session {
                id: if split {
                    format!("{id}#{part_idx}")
                } else {
                    id.to_string()
                },
                items: part.iter().map(|&(_, _, item)| item.clone()).collect(),
                start_ts: part[0].0,
            });
        }
    }
    SessionSet::new(sessions)
}

/// How to cut sessions into train and test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SplitRule {
    /// Sessions starting strictly before the timestamp go to train.
    AtTimestamp(i64),
    /// The latest fraction of sessions (by start timestamp, ties by id)
    /// goes to test. Must lie in (0, 1).
    Fraction(f64),
}

/// Splits sessions temporally. Errors when either side would be empty.
pub fn temporal_split(sessions: &SessionSet, rule: SplitRule) -> Result<(SessionSet, SessionSet)> {
    if sessions.is_empty() {
        return Err(RecError::Data("cannot split an empty session set".into()));
    }
    // SessionSet is already ordered by (start_ts, id).
    let ordered = sessions.sessions();
    let n = ordered.len();
    let n_test = match rule {
        SplitRule::AtTimestamp(ts) => ordered.iter().filter(|s| s.start_ts >= ts).count(),
        SplitRule::Fraction(f) => {
            if !(f > 0.0 && f < 1.0) {
                return Err(RecError::Config(format!(
                    "test fraction must lie in (0, 1), got {f}"
                )));
            }
            (f * n as f64 + 1e-9).floor() as usize
        }
    };
    if n_test == 0 {
        return Err(RecError::Data("split produces an empty test set".into()));
    }
    if n_test == n {
        return Err(RecError::Data("split produces an empty train set".into()));
    }
    let cut = n - n_test;
    let train = SessionSet::new(ordered[..cut].to_vec());
    let test = SessionSet::new(ordered[cut..].to_vec());
    Ok((train, test))
}

/// Counts item occurrences across all train sessions, repeats included.
pub fn item_popularity(train: &SessionSet) -> PopularityMap {
    let mut counts = PopularityMap::new();
    for session in train.iter() {
        for item in &session.items {
            *counts.entry(item.clone()).or_insert(0) += 1;
        }
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::EventType;

    fn inter(sid: &str, item: &str, ts: i64) -> Interaction {
        Interaction {
            session_id: sid.into(),
            item_id: item.into(),
            timestamp: ts,
            event_type: EventType::View,
        }
    }

    #[test]
    fn single_session_in_timestamp_order() {
        let rows = vec![inter("s", "c", 30), inter("s", "a", 10), inter("s", "b", 20)];
        let set = sessionize(&rows, None);
        assert_eq!(set.len(), 1);
        let s = &set.sessions()[0];
        assert_eq!(s.items, vec!["a", "b", "c"]);
        assert_eq!(s.start_ts, 10);
    }

    #[test]
    fn timestamp_ties_broken_by_input_order() {
        let rows = vec![inter("s", "x", 5), inter("s", "y", 5), inter("s", "z", 5)];
        let set = sessionize(&rows, None);
        assert_eq!(set.sessions()[0].items, vec!["x", "y", "z"]);
    }

    #[test]
    fn gap_splits_into_suffixed_subsessions() {
        let rows = vec![
            inter("s", "a", 0),
            inter("s", "b", 10),
            inter("s", "c", 10_000_000),
        ];
        let set = sessionize(&rows, Some(1_800_000));
        assert_eq!(set.len(), 2);
        let ids: Vec<&str> = set.iter().map(|s| s.id.as_str()).collect();
        assert_eq!(ids, vec!["s#0", "s#1"]);
        assert_eq!(set.sessions()[0].items.len(), 2);
        assert_eq!(set.sessions()[1].items.len(), 1);
    }

    #[test]
    fn no_split_keeps_plain_id() {
        let rows = vec![inter("s", "a", 0), inter("s", "b", 10)];
        let set = sessionize(&rows, Some(1_800_000));
        assert_eq!(set.sessions()[0].id, "s");
    }

    #[test]
    fn interleaved_session_ids_grouped_correctly() {
        let rows = vec![
            inter("s1", "a", 0),
            inter("s2", "x", 1),
            inter("s1", "b", 2),
            inter("s2", "y", 3),
        ];
        let set = sessionize(&rows, None);
        assert_eq!(set.len(), 2);
        let by_id: BTreeMap<&str, &Session> = set.iter().map(|s| (s.id.as_str(), s)).collect();
        assert_eq!(by_id["s1"].items, vec!["a", "b"]);
        assert_eq!(by_id["s2"].items, vec!["x", "y"]);
    }

    fn session(id: &str, ts: i64) -> Session {
        Session {
            id: id.into(),
            items: vec!["a".into(), "b".into()],
            start_ts: ts,
        }
    }

    #[test]
    fn fraction_split_takes_latest_quarter() {
        let sessions = SessionSet::new((0..10).map(|i| session(&format!("s{i}"), i * 100)).collect());
        let (train, test) = temporal_split(&sessions, SplitRule::Fraction(0.25)).unwrap();
        assert_eq!(train.len(), 8);
        assert_eq!(test.len(), 2);
        let test_ids: Vec<&str> = test.iter().map(|s| s.id.as_str()).collect();
        assert_eq!(test_ids, vec!["s8", "s9"]);
    }

    #[test]
    fn timestamp_split_between_sessions() {
        let sessions = SessionSet::new((0..5).map(|i| session(&format!("s{i}"), i * 100)).collect());
        // First timestamps are 0,100,200,300,400; split between 3rd and 4th.
        let (train, test) = temporal_split(&sessions, SplitRule::AtTimestamp(250)).unwrap();
        assert_eq!(train.len(), 3);
        assert_eq!(test.len(), 2);
    }

    #[test]
    fn timestamp_before_everything_is_empty_train() {
        let sessions = SessionSet::new(vec![session("s", 100)]);
        assert!(temporal_split(&sessions, SplitRule::AtTimestamp(0)).is_err());
    }

    #[test]
    fn popularity_counts_every_occurrence() {
        let set = SessionSet::new(vec![
            Session {
                id: "1".into(),
                items: vec!["a".into(), "b".into()],
                start_ts: 0,
            },
            Session {
                id: "2".into(),
                items: vec!["a".into()],
                start_ts: 1,
            },
        ]);
        let pop = item_popularity(&set);
        assert_eq!(pop["a"], 2);
        assert_eq!(pop["b"], 1);
    }

    #[test]
    fn popularity_counts_repeats_within_session() {
        let set = SessionSet::new(vec![Session {
            id: "1".into(),
            items: vec!["a".into(), "a".into()],
            start_ts: 0,
        }]);
        assert_eq!(item_popularity(&set)["a"], 2);
    }

    #[test]
    fn popularity_of_empty_train_is_empty() {
        assert!(item_popularity(&SessionSet::default()).is_empty());
    }
}
