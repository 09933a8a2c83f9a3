//! Versioned, machine-readable run reports with canonical serialization
//! and content fingerprints.
//!
//! Canonical form: sorted object keys, shortest round-trip float encoding,
//! UTF-8, newline-terminated. Serializing the same report twice is
//! byte-identical, and `parse(serialize(r)) == r`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::behavioral::{
    DirectionalAsymmetry, DistanceReport, PathLengthReport, PriceAsymmetry, SliceReport,
    StrataReport,
};
use crate::dataset::Dataset;
use crate::embedding::EmbeddingConfig;
use crate::error::{RecError, Result};
use crate::harness::RecListSpec;
use crate::metrics::MetricResult;

pub const SCHEMA_VERSION: &str = "1";

/// One named test outcome. A failing test records its error instead of
/// aborting the run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TestOutput {
    Metric(MetricResult),
    Distance(DistanceReport),
    PathLength(PathLengthReport),
    Strata(StrataReport),
    Slices(SliceReport),
    Asymmetry(DirectionalAsymmetry),
    PriceAsymmetry(PriceAsymmetry),
    Failure { error: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedResult {
    pub name: String,
    pub output: TestOutput,
}

/// The full output bundle of one (model, dataset, spec) run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecReport {
    pub schema_version: String,
    /// Random per-run id; excluded from determinism comparisons.
    pub run_id: String,
    pub model_name: String,
    /// Content digest of canonicalized train + test + catalog.
    pub dataset_fingerprint: String,
    /// Content digest of the spec, embedding config and crate version.
    pub config_fingerprint: String,
    pub spec: RecListSpec,
    pub started_at_ms: u64,
    pub finished_at_ms: u64,
    /// Whether rerunning with identical inputs reproduces `results`
    /// byte-for-byte.
    pub deterministic: bool,
    pub results: Vec<NamedResult>,
    /// Every skip anywhere in the pipeline, by counter name.
    pub skip_counters: BTreeMap<String, u64>,
}

/// Canonical JSON bytes for any serializable value: passing through
/// `serde_json::Value` sorts object keys, and floats print in shortest
/// round-trip form.
fn canonical_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let value = serde_json::to_value(value)
        .map_err(|e| RecError::Report(format!("canonicalize: {e}")))?;
    let mut bytes =
        serde_json::to_vec(&value).map_err(|e| RecError::Report(format!("serialize: {e}")))?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Serializes a report to canonical JSON bytes.
pub fn serialize_report(report: &RecReport) -> Result<Vec<u8>> {
    canonical_json(report)
}

/// Canonical bytes of the results section alone, for determinism checks
/// (run id and timestamps live outside of it).
pub fn serialize_results(report: &RecReport) -> Result<Vec<u8>> {
    canonical_json(&report.results)
}

/// Parses a report, rejecting unknown schema versions.
pub fn parse_report(bytes: &[u8]) -> Result<RecReport> {
    let report: RecReport =
        serde_json::from_slice(bytes).map_err(|e| RecError::Report(format!("parse: {e}")))?;
    if report.schema_version != SCHEMA_VERSION {
        return Err(RecError::Report(format!(
            "schema_version {:?} is not supported (expected {SCHEMA_VERSION:?})",
            report.schema_version
        )));
    }
    Ok(report)
}

fn hex_digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Content digest over canonicalized train + test + catalog, making "same
/// data" machine-checkable for report comparison.
pub fn dataset_fingerprint(dataset: &Dataset) -> Result<String> {
    #[derive(Serialize)]
    struct CanonicalSession<'a> {
        id: &'a str,
        start_ts: i64,
        items: &'a [String],
    }
    let canonical_sessions = |set: &crate::dataset::SessionSet| {
        let mut sessions: Vec<&crate::dataset::Session> = set.iter().collect();
        sessions.sort_by(|a, b| a.id.cmp(&b.id));
        sessions
            .iter()
            .map(|s| {
                serde_json::to_value(CanonicalSession {
                    id: &s.id,
                    start_ts: s.start_ts,
                    items: &s.items,
                })
            })
            .collect::<std::result::Result<Vec<_>, _>>()
    };
    let body = serde_json::json!({
        "train": canonical_sessions(&dataset.train)
            .map_err(|e| RecError::Report(format!("fingerprint: {e}")))?,
        "test": canonical_sessions(&dataset.test)
            .map_err(|e| RecError::Report(format!("fingerprint: {e}")))?,
        // Catalog iteration is id-sorted already.
        "catalog": dataset.catalog.items().collect::<Vec<_>>(),
    });
    Ok(hex_digest(&canonical_json(&body)?))
}

/// Digest of everything that shapes a run besides the data: spec, embedding
/// config and crate version.
pub fn config_fingerprint(spec: &RecListSpec, embedding: &EmbeddingConfig) -> Result<String> {
    let body = serde_json::json!({
        "spec": spec,
        "embedding": embedding,
        "version": env!("CARGO_PKG_VERSION"),
    });
    Ok(hex_digest(&canonical_json(&body)?))
}
