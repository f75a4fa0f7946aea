//! Clustering the running titles of hand-press books into the skeleton
//! formes that printed them.
//!
//! The pipeline: [`imposition`] maps pages to sheet sides, [`profiling`]
//! turns title crops into quantized ink profiles, [`kernel`] compares units
//! with a quantized Levenshtein kernel, [`spectral`] clusters the distance
//! matrix, and [`metrics`] scores the result against gold annotations.
//! [`synth`] generates books with known formes.

pub mod error;
pub mod imposition;
pub mod kernel;
pub mod metrics;
pub mod profiling;
pub mod spectral;
pub mod synth;

pub use error::{Error, ErrorClass, Result};
