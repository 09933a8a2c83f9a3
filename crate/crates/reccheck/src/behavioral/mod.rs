//! Behavioral tests: being-less-wrong distances, brand distances, taxonomy
//! path length, popularity strata, data slices and asymmetry checks.
//!
//! Every case-based test accounts for all of its input pairs: `n_cases`
//! counts the pairs that entered the statistic and `n_skipped` everything
//! else (empty predictions, missing attributes or vocabulary, and — for
//! misses-only distance tests — the hits that were deliberately dropped),
//! so `n_cases + n_skipped` always equals the number of constructed pairs.
//!
//! These tests report, they do not judge: pass/fail thresholds are a
//! deployment concern.

mod asymmetry;
mod distances;
mod slices;
mod strata;
mod taxonomy;

pub use asymmetry::{asymmetry_directional, price_asymmetry, DirectionalAsymmetry, PriceAsymmetry};
pub use distances::{brand_distance, less_wrong_distances, DistanceReport, DistanceScope, HistogramBin};
pub use slices::{
    partition_by_brand, partition_by_cold_start, partition_by_leaf_category, slice_metrics,
    SliceReport, SliceStats,
};
pub use strata::{popularity_strata, StrataBucket, StrataReport, StrataScheme};
pub use taxonomy::{taxonomy_path_length, PathAnchor, PathLengthReport};
