//! `reccheck` — a behavioral testing harness for black-box recommender systems.
//!
//! The crate evaluates any recommender that can answer "given these query
//! items, return a ranked list" with both standard point-wise metrics
//! (hit rate, MRR, coverage, popularity bias) and behavioral tests: graded
//! miss distances over a self-trained item embedding space, brand-level
//! distances, taxonomy path lengths, popularity strata, data slices and
//! asymmetry checks.
//!
//! The pieces compose in a fixed pipeline:
//!
//! 1. [`dataset`] ingests interaction logs and item catalogs, builds
//!    sessions, splits them temporally and constructs test cases.
//! 2. [`embedding`] trains skip-gram item (and feature) vectors from the
//!    training sessions; they serve as the similarity substrate.
//! 3. [`models`] defines the black-box model contract plus reference
//!    baselines and a remote HTTP client.
//! 4. [`metrics`] and [`behavioral`] grade aligned (test case, prediction)
//!    pairs.
//! 5. [`harness`] wires everything into a run and emits a versioned,
//!    machine-readable report.
//!
//! [`syngen`] generates synthetic datasets with planted structure so every
//! stage can be verified against a known ground truth.

pub mod behavioral;
pub mod dataset;
pub mod embedding;
pub mod error;
mod guide;
pub mod harness;
pub mod metrics;
pub mod models;
pub mod syngen;

pub use error::{RecError, Result};
