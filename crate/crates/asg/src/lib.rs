//! Appearance-based medial axis extraction for color images.
//!
//! The pipeline assigns every disk proposal `(x, r)` a cost measuring how
//! close it is to a maximal homogeneous disk, extracts blob/ribbon seeds at
//! scale maxima that are local cost minima, and greedily grows each seed
//! into connected one-pixel-wide medial branches by attaching short linear
//! fragments, constrained by shock-grammar rules. A final relaxed pass
//! extends branch end points into less salient regions.
//!
//! Modules:
//! - [`imgproc`]: loading, L0 smoothing, CIELAB conversion, tile grid.
//! - [`cost`]: dense disk-cost volume under color or histogram data terms.
//! - [`shock`]: shock typing and seed extraction.
//! - [`growth`]: grammar-constrained branch growth and the full pipeline.
//! - [`synth`]: synthetic fixtures and a brute-force medial-axis oracle.
//! - [`eval`]: tolerant skeleton matching and benchmark protocols.
//! - [`config`]: flat run configuration with paper-default parameters.

pub mod config;
pub mod cost;
mod error;
pub mod eval;
pub mod growth;
pub mod imgproc;
pub mod mask;
pub mod shock;
pub mod synth;

pub use error::{Error, Result};
