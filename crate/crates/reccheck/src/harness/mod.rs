//! Run composition: dataset + model + test spec in, versioned report out.
//!
//! A run builds test cases for the task, trains the required embedding
//! spaces from the training split (the item space always, the brand space
//! only when a brand test asks for it), collects model predictions once,
//! executes every requested test in order and assembles the report. A
//! failing test records a failure entry without aborting the rest.

mod compare;
mod report;

use std::collections::{BTreeMap, HashSet};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use rand::RngExt;
use serde::{Deserialize, Serialize};

use crate::behavioral::{
    asymmetry_directional, brand_distance, less_wrong_distances, partition_by_brand,
    partition_by_cold_start, partition_by_leaf_category, popularity_strata, price_asymmetry,
    slice_metrics, taxonomy_path_length, DistanceScope, PathAnchor, StrataScheme,
};
use crate::dataset::{build_test_cases, CaseBuild, CaseScheme, Dataset, ItemId};
use crate::embedding::{
    feature_sequences, train_skipgram, EmbeddingConfig, EmbeddingSpace, Feature,
};
use crate::error::{RecError, Result};
use crate::metrics::{
    coverage_at_k, hit_rate_at_k, mrr_at_k, popularity_bias_at_k, EvalPair,
};
use crate::models::{validate_batch, RecModel};

pub use compare::{compare_reports, BucketDelta, CompareRow, Comparison};
pub use report::{
    config_fingerprint, dataset_fingerprint, parse_report, serialize_report, serialize_results,
    NamedResult, RecReport, TestOutput, SCHEMA_VERSION,
};

/// The recommendation use case under test; decides how sessions become
/// test cases.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecTask {
    SimilarItems,
    ComplementaryItems,
    SessionBased,
}

impl RecTask {
    pub fn case_scheme(&self) -> CaseScheme {
        match self {
            // A cart is set-like; browsing sessions keep their order.
            RecTask::ComplementaryItems => CaseScheme::CartLast,
            RecTask::SimilarItems | RecTask::SessionBased => CaseScheme::NextItem,
        }
    }
}

/// One test descriptor: a unique name plus the test kind and parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecTest {
    pub name: String,
    #[serde(flatten)]
    pub kind: TestKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestKind {
    HitRate,
    Mrr,
    Coverage,
    PopularityBias,
    LessWrong { scope: DistanceScope, bins: usize },
    BrandDistance { scope: DistanceScope, bins: usize },
    PathLength { anchor: PathAnchor },
    PopularityStrata { n_buckets: usize, scheme: StrataScheme },
    SliceByBrand,
    SliceByCategory,
    SliceByColdStart,
    AsymmetryDirectional { n_probes: usize },
    PriceAsymmetry,
}

impl TestKind {
    pub fn canonical_name(&self) -> &'static str {
        match self {
            TestKind::HitRate => "hr",
            TestKind::Mrr => "mrr",
            TestKind::Coverage => "coverage",
            TestKind::PopularityBias => "popularity_bias",
            TestKind::LessWrong { .. } => "less_wrong",
            TestKind::BrandDistance { .. } => "brand_distance",
            TestKind::PathLength { .. } => "path_length",
            TestKind::PopularityStrata { .. } => "popularity_strata",
            TestKind::SliceByBrand => "slice_brand",
            TestKind::SliceByCategory => "slice_category",
            TestKind::SliceByColdStart => "slice_cold_start",
            TestKind::AsymmetryDirectional { .. } => "asymmetry_directional",
            TestKind::PriceAsymmetry => "price_asymmetry",
        }
    }
}

impl RecTest {
    fn of(kind: TestKind) -> Self {
        RecTest {
            name: kind.canonical_name().to_string(),
            kind,
        }
    }

    pub fn hit_rate() -> Self {
        Self::of(TestKind::HitRate)
    }

    pub fn mrr() -> Self {
        Self::of(TestKind::Mrr)
    }

    pub fn coverage() -> Self {
        Self::of(TestKind::Coverage)
    }

    pub fn popularity_bias() -> Self {
        Self::of(TestKind::PopularityBias)
    }

    pub fn less_wrong() -> Self {
        Self::of(TestKind::LessWrong {
            scope: DistanceScope::MissesOnly,
            bins: 20,
        })
    }

    pub fn brand_distance() -> Self {
        Self::of(TestKind::BrandDistance {
            scope: DistanceScope::MissesOnly,
            bins: 20,
        })
    }

    pub fn path_length() -> Self {
        Self::of(TestKind::PathLength {
            anchor: PathAnchor::QueryLast,
        })
    }

    pub fn popularity_strata() -> Self {
        Self::of(TestKind::PopularityStrata {
            n_buckets: 10,
            scheme: StrataScheme::Quantile,
        })
    }

    pub fn slice_by_brand() -> Self {
        Self::of(TestKind::SliceByBrand)
    }

    pub fn slice_by_category() -> Self {
        Self::of(TestKind::SliceByCategory)
    }

    pub fn slice_by_cold_start() -> Self {
        Self::of(TestKind::SliceByColdStart)
    }

    pub fn asymmetry_directional() -> Self {
        Self::of(TestKind::AsymmetryDirectional { n_probes: 20 })
    }

    pub fn price_asymmetry() -> Self {
        Self::of(TestKind::PriceAsymmetry)
    }

    /// Every available test with default parameters, in report order.
    pub fn all_defaults() -> Vec<RecTest> {
        vec![
            Self::hit_rate(),
            Self::mrr(),
            Self::coverage(),
            Self::popularity_bias(),
            Self::less_wrong(),
            Self::brand_distance(),
            Self::path_length(),
            Self::popularity_strata(),
            Self::slice_by_brand(),
            Self::slice_by_category(),
            Self::slice_by_cold_start(),
            Self::asymmetry_directional(),
            Self::price_asymmetry(),
        ]
    }

    /// Looks a test up by its canonical name.
    pub fn by_name(name: &str) -> Option<RecTest> {
        Self::all_defaults().into_iter().find(|t| t.name == name)
    }
}

/// The ordered set of tests to run, with the task, cutoff and seed shared
/// by all of them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecListSpec {
    pub task: RecTask,
    pub tests: Vec<RecTest>,
    pub k: usize,
    pub seed: u64,
}

impl RecListSpec {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(RecError::Config("k must be positive".into()));
        }
        let mut seen = HashSet::new();
        for test in &self.tests {
            if !seen.insert(test.name.as_str()) {
                return Err(RecError::Config(format!(
                    "duplicate test name {:?} in spec",
                    test.name
                )));
            }
        }
        Ok(())
    }
}

/// Pre-trained spaces to inject into a run. By default nothing is injected
/// and spaces are trained inside the run from the training split, which
/// keeps the report deterministic. Injecting a space marks the report
/// nondeterministic unless the caller vouches that it was reproducibly
/// derived from this dataset and seed.
#[derive(Clone, Default)]
pub struct RunSpaces {
    pub item: Option<Arc<EmbeddingSpace>>,
    pub brand: Option<Arc<EmbeddingSpace>>,
    /// Set when injected spaces are reproducible from (dataset, seed).
    pub reproducible: bool,
}

impl RunSpaces {
    pub fn trained_in_run() -> Self {
        RunSpaces {
            item: None,
            brand: None,
            reproducible: true,
        }
    }

    pub fn with_item(space: Arc<EmbeddingSpace>, reproducible: bool) -> Self {
        RunSpaces {
            item: Some(space),
            brand: None,
            reproducible,
        }
    }
}

/// Trains the item (prod2vec) space for a dataset with the default config
/// and the given seed.
pub fn train_item_space(dataset: &Dataset, seed: u64) -> Result<EmbeddingSpace> {
    let config = EmbeddingConfig {
        seed,
        ..EmbeddingConfig::default()
    };
    train_skipgram(&dataset.train.item_sequences(), &config)
}

/// Trains the brand space from brand sequences of the training split.
/// Seeded from the run seed through a fixed offset so the two spaces use
/// distinct but reproducible streams.
pub fn train_brand_space(dataset: &Dataset, seed: u64) -> Result<EmbeddingSpace> {
    let sequences = feature_sequences(&dataset.train, &dataset.catalog, Feature::Brand);
    let config = EmbeddingConfig {
        seed: seed.wrapping_add(0x9e3779b97f4a7c15),
        ..EmbeddingConfig::default()
    };
    train_skipgram(&sequences, &config)
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

/// Checks every test's data requirements up front, before any model call,
/// and reports all unmet ones at once.
fn check_requirements(dataset: &Dataset, spec: &RecListSpec) -> Result<()> {
    let mut unmet = Vec::new();
    for test in &spec.tests {
        match &test.kind {
            TestKind::BrandDistance { .. } | TestKind::SliceByBrand => {
                if !dataset.catalog.has_brands() {
                    unmet.push(format!("{}: catalog has no brands", test.name));
                }
            }
            TestKind::PathLength { .. } | TestKind::SliceByCategory => {
                if !dataset.catalog.has_categories() {
                    unmet.push(format!("{}: catalog has no category paths", test.name));
                }
            }
            TestKind::PriceAsymmetry => {
                if !dataset.catalog.has_prices() {
                    unmet.push(format!("{}: catalog has no prices", test.name));
                }
            }
            TestKind::Coverage => {
                if dataset.catalog.is_empty() {
                    unmet.push(format!("{}: catalog is empty", test.name));
                }
            }
            TestKind::PopularityBias | TestKind::PopularityStrata { .. }
            | TestKind::SliceByColdStart => {
                if dataset.popularity.is_empty() {
                    unmet.push(format!("{}: training split has no interactions", test.name));
                }
            }
            _ => {}
        }
    }
    if unmet.is_empty() {
        Ok(())
    } else {
        Err(RecError::Config(format!(
            "unmet test requirements: {}",
            unmet.join("; ")
        )))
    }
}

fn needs_brand_space(spec: &RecListSpec) -> bool {
    spec.tests
        .iter()
        .any(|t| matches!(t.kind, TestKind::BrandDistance { .. }))
}

/// Distinct last-query items in case order, the default probe set for the
/// directional asymmetry test.
fn probe_items(pairs: &[EvalPair], n_probes: usize) -> Vec<ItemId> {
    let mut seen = HashSet::new();
    let mut probes = Vec::new();
    for (case, _) in pairs {
        let last = case.query.last().expect("query is non-empty");
        if seen.insert(last.clone()) {
            probes.push(last.clone());
            if probes.len() >= n_probes {
                break;
            }
        }
    }
    probes
}

struct RunContext<'a> {
    dataset: &'a Dataset,
    spec: &'a RecListSpec,
    pairs: &'a [EvalPair],
    item_space: &'a EmbeddingSpace,
    brand_space: Option<&'a EmbeddingSpace>,
    model: &'a dyn RecModel,
}

fn execute_test(test: &RecTest, ctx: &RunContext<'_>) -> Result<TestOutput> {
    let k = ctx.spec.k;
    Ok(match &test.kind {
        TestKind::HitRate => TestOutput::Metric(hit_rate_at_k(ctx.pairs, k)),
        TestKind::Mrr => TestOutput::Metric(mrr_at_k(ctx.pairs, k)),
        TestKind::Coverage => {
            TestOutput::Metric(coverage_at_k(ctx.pairs, k, ctx.dataset.catalog.len())?)
        }
        TestKind::PopularityBias => {
            TestOutput::Metric(popularity_bias_at_k(ctx.pairs, k, &ctx.dataset.popularity)?)
        }
        TestKind::LessWrong { scope, bins } => TestOutput::Distance(less_wrong_distances(
            ctx.pairs,
            ctx.item_space,
            *scope,
            *bins,
        )?),
        TestKind::BrandDistance { scope, bins } => {
            let space = ctx.brand_space.ok_or_else(|| {
                RecError::Config("brand space unavailable for brand_distance".into())
            })?;
            TestOutput::Distance(brand_distance(
                ctx.pairs,
                space,
                &ctx.dataset.catalog,
                *scope,
                *bins,
            )?)
        }
        TestKind::PathLength { anchor } => {
            TestOutput::PathLength(taxonomy_path_length(ctx.pairs, &ctx.dataset.catalog, *anchor)?)
        }
        TestKind::PopularityStrata { n_buckets, scheme } => TestOutput::Strata(popularity_strata(
            ctx.pairs,
            &ctx.dataset.popularity,
            k,
            *n_buckets,
            *scheme,
        )?),
        TestKind::SliceByBrand => TestOutput::Slices(slice_metrics(
            ctx.pairs,
            k,
            partition_by_brand(&ctx.dataset.catalog),
        )),
        TestKind::SliceByCategory => TestOutput::Slices(slice_metrics(
            ctx.pairs,
            k,
            partition_by_leaf_category(&ctx.dataset.catalog),
        )),
        TestKind::SliceByColdStart => TestOutput::Slices(slice_metrics(
            ctx.pairs,
            k,
            partition_by_cold_start(&ctx.dataset.popularity),
        )),
        TestKind::AsymmetryDirectional { n_probes } => {
            let probes = probe_items(ctx.pairs, *n_probes);
            TestOutput::Asymmetry(asymmetry_directional(ctx.model, &probes, k)?)
        }
        TestKind::PriceAsymmetry => {
            TestOutput::PriceAsymmetry(price_asymmetry(ctx.pairs, &ctx.dataset.catalog, k)?)
        }
    })
}

/// Skips a test contributed to the shared counters.
fn skip_count(output: &TestOutput) -> Option<u64> {
    Some(match output {
        TestOutput::Metric(m) => m.n_skipped as u64,
        TestOutput::Distance(d) => d.n_skipped as u64,
        TestOutput::PathLength(p) => p.n_skipped as u64,
        TestOutput::Strata(s) => s.n_skipped as u64,
        TestOutput::Slices(s) => s.unsliceable as u64,
        TestOutput::PriceAsymmetry(p) => p.n_skipped as u64,
        TestOutput::Asymmetry(_) | TestOutput::Failure { .. } => return None,
    })
}

/// Runs the full suite, training embedding spaces inside the run.
pub fn run_reclist(
    dataset: &Dataset,
    model: &dyn RecModel,
    spec: &RecListSpec,
) -> Result<RecReport> {
    run_reclist_with(dataset, model, spec, RunSpaces::trained_in_run())
}

/// Runs the full suite with optionally injected embedding spaces.
pub fn run_reclist_with(
    dataset: &Dataset,
    model: &dyn RecModel,
    spec: &RecListSpec,
    spaces: RunSpaces,
) -> Result<RecReport> {
    spec.validate()?;
    check_requirements(dataset, spec)?;
    let started_at_ms = now_ms();
    let injected = spaces.item.is_some() || spaces.brand.is_some();

    let build: CaseBuild = build_test_cases(&dataset.test, spec.task.case_scheme(), 1);
    log::info!(
        "constructed {} test cases ({} overlap-dropped, {} too short)",
        build.cases.len(),
        build.dropped_overlap,
        build.skipped_short
    );

    let item_space = match spaces.item {
        Some(space) => space,
        None => Arc::new(train_item_space(dataset, spec.seed)?),
    };
    let brand_space = if needs_brand_space(spec) {
        match spaces.brand {
            Some(space) => Some(space),
            None => Some(Arc::new(train_brand_space(dataset, spec.seed)?)),
        }
    } else {
        None
    };

    // One batched prediction call serves every test.
    let queries: Vec<Vec<ItemId>> = build.cases.iter().map(|c| c.query.clone()).collect();
    let predictions = model.predict(&queries, spec.k)?;
    validate_batch(&queries, spec.k, &predictions)
        .map_err(|e| RecError::Data(format!("model contract violation: {e}")))?;
    let empty_predictions = predictions.iter().filter(|p| p.is_empty()).count();

    let pairs: Vec<EvalPair> = build.cases.into_iter().zip(predictions).collect();

    let mut skip_counters: BTreeMap<String, u64> = BTreeMap::new();
    skip_counters.insert("cases.dropped_overlap".into(), build.dropped_overlap as u64);
    skip_counters.insert("cases.skipped_short".into(), build.skipped_short as u64);
    skip_counters.insert("predictions.empty".into(), empty_predictions as u64);

    let ctx = RunContext {
        dataset,
        spec,
        pairs: &pairs,
        item_space: &item_space,
        brand_space: brand_space.as_deref(),
        model,
    };

    let mut results = Vec::with_capacity(spec.tests.len());
    for test in &spec.tests {
        let output = match execute_test(test, &ctx) {
            Ok(output) => output,
            Err(e) => {
                log::warn!("test {:?} failed: {e}", test.name);
                TestOutput::Failure {
                    error: e.to_string(),
                }
            }
        };
        if let Some(skips) = skip_count(&output) {
            skip_counters.insert(format!("{}.skipped", test.name), skips);
        }
        results.push(NamedResult {
            name: test.name.clone(),
            output,
        });
    }

    if model.sanitization_count() > 0 {
        skip_counters.insert("remote.sanitized".into(), model.sanitization_count());
    }

    Ok(RecReport {
        schema_version: SCHEMA_VERSION.into(),
        run_id: format!("{:016x}", rand::rng().random::<u64>()),
        model_name: model.name().to_string(),
        dataset_fingerprint: dataset_fingerprint(dataset)?,
        config_fingerprint: config_fingerprint(spec, &EmbeddingConfig::default())?,
        spec: spec.clone(),
        started_at_ms,
        finished_at_ms: now_ms(),
        deterministic: model.is_deterministic() && (!injected || spaces.reproducible),
        results,
        skip_counters,
    })
}
