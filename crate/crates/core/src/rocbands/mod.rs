//! ROC curves and conformal ROC bands.
//!
//! Per-instance intervals for the positive test instances bound the true
//! positive rate at every threshold; those of the negative instances bound
//! the false positive rate. The AUC interval is the area under the two
//! outermost envelopes.

mod band;
mod pipeline;
mod roc;

pub use band::{band_from_intervals, covers, default_grid, envelope_auc, BandMode, RocBand, DEFAULT_GRID_POINTS};
pub use pipeline::{
    multilabel_bands, run_band_pipeline, test_intervals, BandConfig, BandRun, BandSummary, SplitIds,
};
pub use roc::{empirical_rates, empirical_roc, oracle_rates, trapezoid_area, OracleRates, RocCurve};
pub(crate) use roc::{class_counts, fraction_above, fraction_at_least, sorted};
