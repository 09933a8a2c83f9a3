//! Side-by-side comparison of two reports over the same dataset.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{RecError, Result};
use crate::harness::report::{RecReport, TestOutput};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BucketDelta {
    pub key: String,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub abs_delta: Option<f64>,
    /// b / a, when a is a nonzero number.
    pub ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CompareRow {
    /// One scalar statistic from each report.
    Scalar {
        label: String,
        a: Option<f64>,
        b: Option<f64>,
        abs_delta: Option<f64>,
        /// (b - a) / a, when a is a nonzero number.
        rel_delta: Option<f64>,
    },
    /// Per-bucket or per-slice statistics.
    Buckets {
        label: String,
        entries: Vec<BucketDelta>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub model_a: String,
    pub model_b: String,
    pub dataset_fingerprint: String,
    pub rows: Vec<CompareRow>,
}

/// Scalar statistics of one test output, labeled.
fn scalars(name: &str, output: &TestOutput) -> Vec<(String, Option<f64>)> {
    match output {
        TestOutput::Metric(m) => vec![(name.to_string(), m.value)],
        TestOutput::Distance(d) => vec![
            (format!("{name}.query_to_label_mean"), d.mean_query_to_label),
            (format!("{name}.query_to_pred_mean"), d.mean_query_to_pred),
        ],
        TestOutput::PathLength(p) => vec![(format!("{name}.mean"), p.mean)],
        TestOutput::Asymmetry(a) => vec![(format!("{name}.score"), a.score)],
        TestOutput::PriceAsymmetry(p) => vec![
            (format!("{name}.frac_cheaper"), p.frac_cheaper),
            (format!("{name}.mean_price_ratio"), p.mean_price_ratio),
        ],
        TestOutput::Strata(_) | TestOutput::Slices(_) | TestOutput::Failure { .. } => vec![],
    }
}

/// Bucketized statistics of one test output: (group label, key -> value).
fn buckets(name: &str, output: &TestOutput) -> Vec<(String, BTreeMap<String, Option<f64>>)> {
    match output {
        TestOutput::Strata(s) => {
            let map = s
                .buckets
                .iter()
                .map(|b| {
                    (
                        format!("counts {}..={}", b.low_count, b.high_count),
                        b.hr_at_k,
                    )
                })
                .collect();
            vec![(format!("{name}.hr_by_bucket"), map)]
        }
        TestOutput::Slices(s) => {
            let hr = s
                .slices
                .iter()
                .map(|(key, v)| (key.clone(), Some(v.hr_at_k)))
                .collect();
            let mrr = s
                .slices
                .iter()
                .map(|(key, v)| (key.clone(), Some(v.mrr_at_k)))
                .collect();
            vec![
                (format!("{name}.hr_by_slice"), hr),
                (format!("{name}.mrr_by_slice"), mrr),
            ]
        }
        _ => vec![],
    }
}

fn delta(a: Option<f64>, b: Option<f64>) -> (Option<f64>, Option<f64>, Option<f64>) {
    match (a, b) {
        (Some(x), Some(y)) => {
            let abs = Some(y - x);
            let rel = (x != 0.0).then(|| (y - x) / x);
            let ratio = (x != 0.0).then(|| y / x);
            (abs, rel, ratio)
        }
        _ => (None, None, None),
    }
}

/// Compares two reports produced on the same dataset with the same test
/// names. Scalar rows carry absolute and relative deltas; strata and slice
/// rows carry per-bucket deltas and ratios.
pub fn compare_reports(a: &RecReport, b: &RecReport) -> Result<Comparison> {
    if a.dataset_fingerprint != b.dataset_fingerprint {
        return Err(RecError::Report(format!(
            "dataset fingerprints differ: {} vs {}",
            a.dataset_fingerprint, b.dataset_fingerprint
        )));
    }
    let names_a: Vec<&str> = a.results.iter().map(|r| r.name.as_str()).collect();
    let names_b: Vec<&str> = b.results.iter().map(|r| r.name.as_str()).collect();
    if names_a != names_b {
        let only_a: Vec<&&str> = names_a.iter().filter(|n| !names_b.contains(n)).collect();
        let only_b: Vec<&&str> = names_b.iter().filter(|n| !names_a.contains(n)).collect();
        return Err(RecError::Report(format!(
            "test sets differ (only in a: {only_a:?}; only in b: {only_b:?})"
        )));
    }

    let mut rows = Vec::new();
    for (ra, rb) in a.results.iter().zip(&b.results) {
        let scalars_a = scalars(&ra.name, &ra.output);
        let scalars_b: BTreeMap<String, Option<f64>> =
            scalars(&rb.name, &rb.output).into_iter().collect();
        for (label, value_a) in scalars_a {
            let value_b = scalars_b.get(&label).copied().flatten();
            let (abs_delta, rel_delta, _) = delta(value_a, value_b);
            rows.push(CompareRow::Scalar {
                label,
                a: value_a,
                b: value_b,
                abs_delta,
                rel_delta,
            });
        }

        let buckets_a = buckets(&ra.name, &ra.output);
        let buckets_b: BTreeMap<String, BTreeMap<String, Option<f64>>> =
            buckets(&rb.name, &rb.output).into_iter().collect();
        for (label, map_a) in buckets_a {
            let map_b = buckets_b.get(&label).cloned().unwrap_or_default();
            let mut keys: Vec<&String> = map_a.keys().chain(map_b.keys()).collect();
            keys.sort();
            keys.dedup();
            let entries = keys
                .into_iter()
                .map(|key| {
                    let value_a = map_a.get(key).copied().flatten();
                    let value_b = map_b.get(key).copied().flatten();
                    let (abs_delta, _, ratio) = delta(value_a, value_b);
                    BucketDelta {
                        key: key.clone(),
                        a: value_a,
                        b: value_b,
                        abs_delta,
                        ratio,
                    }
                })
                .collect();
            rows.push(CompareRow::Buckets { label, entries });
        }
    }

    Ok(Comparison {
        model_a: a.model_name.clone(),
        model_b: b.model_name.clone(),
        dataset_fingerprint: a.dataset_fingerprint.clone(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::report::NamedResult;
    use crate::harness::{RecListSpec, RecTask, RecTest};
    use crate::metrics::MetricResult;

    fn report_with_hr(model: &str, fingerprint: &str, hr: f64) -> RecReport {
        RecReport {
            schema_version: crate::harness::SCHEMA_VERSION.into(),
            run_id: "r".into(),
            model_name: model.into(),
            dataset_fingerprint: fingerprint.into(),
            config_fingerprint: "c".into(),
            spec: RecListSpec {
                task: RecTask::SessionBased,
                tests: vec![RecTest::hit_rate()],
                k: 10,
                seed: 0,
            },
            started_at_ms: 0,
            finished_at_ms: 0,
            deterministic: true,
            results: vec![NamedResult {
                name: "hr".into(),
                output: TestOutput::Metric(MetricResult {
                    name: "hr".into(),
                    k: 10,
                    value: Some(hr),
                    n_cases: 100,
                    n_skipped: 0,
                }),
            }],
            skip_counters: Default::default(),
        }
    }

    #[test]
    fn identical_reports_have_zero_deltas() {
        let a = report_with_hr("m", "f", 0.5);
        let comparison = compare_reports(&a, &a).unwrap();
        match &comparison.rows[0] {
            CompareRow::Scalar {
                abs_delta,
                rel_delta,
                ..
            } => {
                assert_eq!(*abs_delta, Some(0.0));
                assert_eq!(*rel_delta, Some(0.0));
            }
            other => panic!("unexpected row {other:?}"),
        }
    }

    #[test]
    fn forty_percent_relative_delta() {
        let a = report_with_hr("p2v", "f", 0.10);
        let b = report_with_hr("goo", "f", 0.14);
        let comparison = compare_reports(&a, &b).unwrap();
        match &comparison.rows[0] {
            CompareRow::Scalar { rel_delta, .. } => {
                assert!((rel_delta.unwrap() - 0.40).abs() < 1e-9);
            }
            other => panic!("unexpected row {other:?}"),
        }
    }

    #[test]
    fn fingerprint_mismatch_is_an_error() {
        let a = report_with_hr("m", "f1", 0.5);
        let b = report_with_hr("m", "f2", 0.5);
        assert!(compare_reports(&a, &b).is_err());
    }

    #[test]
    fn disjoint_test_sets_are_an_error() {
        let a = report_with_hr("m", "f", 0.5);
        let mut b = report_with_hr("m", "f", 0.5);
        b.results[0].name = "other".into();
        let err = compare_reports(&a, &b).unwrap_err();
        assert!(err.to_string().contains("test sets differ"));
    }
}
