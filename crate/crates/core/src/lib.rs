//! Coupled urban water-electricity demand projection under climate change.
//!
//! The library implements a full desk-scale pipeline:
//!
//! 1. [`ingest`] parses and validates the input tables (demand, population,
//!    daily climate, city registry, analog maps, future normals, SSP
//!    populations).
//! 2. [`preprocess`] turns raw records into model-ready tables: per-capita
//!    normalization, ratio de-trending, 17-feature monthly climate
//!    aggregation, and 12-variable seasonal normals.
//! 3. [`mvtb`] fits a joint two-outcome boosted-tree model where each
//!    iteration updates the outcome whose candidate tree explains the most
//!    cross-outcome residual covariance.
//! 4. [`analog`] ranks candidate climate analogs by sigma dissimilarity.
//! 5. [`pipeline`] orchestrates cross-validation metrics, regional variable
//!    selection, analog-substitution projections, SSP-scaled totals and
//!    emissions equivalences, and writes the report files.
//! 6. [`synth`] generates seeded synthetic bundles with known ground truth
//!    and hosts the independent numeric oracles used by the test suite.

pub mod analog;
pub mod config;
pub mod error;
pub mod ingest;
pub mod mvtb;
pub mod pipeline;
pub mod preprocess;
pub mod rng;
pub mod special;
pub mod synth;

pub use error::{Error, Result};
