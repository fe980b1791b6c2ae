//! Measures of how national place-based activity tracked government policy
//! stringency in early 2020: cosine similarity, thresholded cross-correlation
//! lag and subregional variability, with rank statistics, geographic
//! comparisons, embeddings and index correlations built on top.
//!
//! Every collection keyed by country is a `BTreeMap` on the alpha-2 code, so
//! iteration order and therefore every output is deterministic.

pub mod analysis;
pub mod codes;
pub mod embed;
pub mod error;
pub mod exec;
pub mod indices;
pub mod ingest;
pub mod measures;
pub mod rankstats;
pub mod series;
pub mod spatial;
pub mod synthetic;

pub use analysis::{analyze, Analysis, AnalysisConfig, Exclusion};
pub use error::{GeometryError, IngestError, MeasureError};
pub use exec::Execution;
pub use series::{ActivityCategory, AnalysisWindow, Continent, CountryRecord, DailySeries};
