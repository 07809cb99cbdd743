//! Clustering and pairing of per-country mortality-rate time series.
//!
//! The crate covers the whole flow from raw CSV to persisted model:
//!
//! * [`dataset`] parses wide or long CSV into a [`DataMatrix`];
//! * [`preprocess`] imputes gaps and scales columns;
//! * [`kmeans`], [`hier`] and [`affinity`] cluster the rows;
//! * [`pairing`] finds statistically similar and opposite country pairs;
//! * [`model_store`] saves fitted models and labels unseen data;
//! * [`projection`] produces 2-D coordinates for plotting.
//!
//! [`pipeline::train`] strings the pieces together the way the `mmr-cluster`
//! binary does.

pub mod affinity;
pub mod cli;
pub mod dataset;
mod distance;
pub mod error;
pub mod hier;
pub mod kmeans;
pub mod metrics;
pub mod model_store;
pub mod pairing;
pub mod pipeline;
pub mod preprocess;
pub mod projection;
pub mod special;

pub use dataset::{parse_long_csv, parse_wide_csv, to_matrix, CountrySeries, DataMatrix, Dataset, MISSING};
pub use error::{Error, Result};
pub use model_store::{ClusterModel, Method};
