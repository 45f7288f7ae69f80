//! Resampling toolkit for imbalanced multiclass tabular data.
//!
//! The centerpiece is neighbor-based displacement ([`nde`]): points whose
//! neighborhood is dominated by other classes are moved toward their class
//! centroid, after which random oversampling balances the classes
//! ([`resample::ndeso`]). Baseline resamplers, G-mean and macro metrics,
//! Friedman/Nemenyi rank statistics and a cross-validation harness with
//! built-in kNN and decision-tree classifiers complete the experiment loop.

pub mod bundled;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod metrics;
pub mod nde;
pub mod resample;
pub mod rng;
pub mod stats;

pub use dataset::{ClassStats, Dataset};
pub use error::{Error, Result};
pub use geometry::{DistanceMetric, NeighborIndex};
pub use rng::DetRng;
