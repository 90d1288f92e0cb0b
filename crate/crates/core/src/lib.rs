//! Conformal prediction bands for ROC curves.
//!
//! The crate turns per-instance classifier probabilities into point-wise
//! confidence bands for sensitivity (TPR) and the false positive rate, either
//! calibrating against the whole calibration set (exchangeable mode) or
//! against the K nearest calibration instances under a user supplied distance
//! (conditional mode). For graph data the distance is the Wasserstein distance
//! between sublevel-set persistence diagrams.
//!
//! Module map:
//!
//! - [`graphdata`]: TU benchmark parsing, deterministic splits, score files.
//! - [`topology`]: vertex filtrations, graph persistence, persistence images.
//! - [`similarity`]: diagram Wasserstein distance, distance matrices, KNN.
//! - [`conformal`]: non-conformity scores, quantiles, soft intervals.
//! - [`rocbands`]: ROC curves, CP-ROC bands, band pipeline, multi-label.
//! - [`baseline`]: class-stratified bootstrap ROC bands.
//! - [`synthetic`]: simulated data with known probabilities and coverage runs.
//! - [`cli`]: command implementations behind the `cproc` binary.

pub mod baseline;
pub mod cli;
pub mod conformal;
mod error;
pub mod graphdata;
pub mod rocbands;
pub mod similarity;
pub mod synthetic;
pub mod topology;

pub use error::{Error, Result};
