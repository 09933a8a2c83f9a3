//! Test-case construction from test sessions.

use crate::dataset::{SessionSet, TestCase};

/// How a session becomes a (query, ground truth) pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CaseScheme {
    /// Query is everything but the last item, the last item is the target.
    NextItem,
    /// Same leave-last-out construction, but items are deduplicated first:
    /// a cart is a set-like sequence.
    CartLast,
}

/// Outcome of test-case construction.
#[derive(Clone, Debug, Default)]
pub struct CaseBuild {
    pub cases: Vec<TestCase>,
    /// Sessions dropped because query and ground truth overlapped after
    /// construction.
    pub dropped_overlap: usize,
    /// Sessions too short to yield a case.
    pub skipped_short: usize,
}

/// Builds test cases from each qualifying session.
///
/// A session needs at least `min_query_len + 1` items (after deduplication
/// for [`CaseScheme::CartLast`]). Sessions whose query still contains the
/// target are dropped and counted.
pub fn build_test_cases(
    test: &SessionSet,
    scheme: CaseScheme,
    min_query_len: usize,
) -> CaseBuild {
    let min_query_len = min_query_len.max(1);
    let mut build = CaseBuild::default();
    for session in test.iter() {
        let items: Vec<String> = match scheme {
            CaseScheme::NextItem => session.items.clone(),
            CaseScheme::CartLast => {
                let mut seen = std::collections::HashSet::new();
                session
                    .items
                    .iter()
                    .filter(|i| seen.insert(i.as_str()))
                    .cloned()
                    .collect()
            }
        };
        if items.len() < min_query_len + 1 {
            build.skipped_short += 1;
            continue;
        }
        let (query, target) = items.split_at(items.len() - 1);
        if query.contains(&target[0]) {
            build.dropped_overlap += 1;
            continue;
        }
        build.cases.push(TestCase {
            query: query.to_vec(),
            ground_truth: target.to_vec(),
        });
    }
    build
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Session;

    fn set(items_per_session: &[&[&str]]) -> SessionSet {
        SessionSet::new(
            items_per_session
                .iter()
                .enumerate()
                .map(|(i, items)| Session {
                    id: format!("s{i}"),
                    items: items.iter().map(|s| s.to_string()).collect(),
                    start_ts: i as i64,
                })
                .collect(),
        )
    }

    #[test]
    fn next_item_leaves_last_out() {
        let build = build_test_cases(&set(&[&["a", "b", "c"]]), CaseScheme::NextItem, 1);
        assert_eq!(build.cases.len(), 1);
        assert_eq!(build.cases[0].query, vec!["a", "b"]);
        assert_eq!(build.cases[0].ground_truth, vec!["c"]);
    }

    #[test]
    fn cart_last_deduplicates_first() {
        let build = build_test_cases(&set(&[&["a", "a", "b"]]), CaseScheme::CartLast, 1);
        assert_eq!(build.cases.len(), 1);
        assert_eq!(build.cases[0].query, vec!["a"]);
        assert_eq!(build.cases[0].ground_truth, vec!["b"]);
    }

    #[test]
    fn single_item_session_emits_nothing() {
        let build = build_test_cases(&set(&[&["a"]]), CaseScheme::NextItem, 1);
        assert!(build.cases.is_empty());
        assert_eq!(build.skipped_short, 1);
    }

    #[test]
    fn overlapping_target_dropped_and_counted() {
        // next_item on [a,b,a]: query [a,b] contains target a.
        let build = build_test_cases(&set(&[&["a", "b", "a"]]), CaseScheme::NextItem, 1);
        assert!(build.cases.is_empty());
        assert_eq!(build.dropped_overlap, 1);
    }

    #[test]
    fn min_query_len_applies() {
        let build = build_test_cases(&set(&[&["a", "b"], &["a", "b", "c"]]), CaseScheme::NextItem, 2);
        assert_eq!(build.cases.len(), 1);
        assert_eq!(build.skipped_short, 1);
    }
}
