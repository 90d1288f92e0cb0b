//! Synthetic data with known class probabilities.
//!
//! Covariates are Gaussian, the true probability is logistic in them, and
//! the model probability comes from a logistic fit that may miss covariates.
//! Covariate-space Euclidean distance stands in for the graph similarity, so
//! the conformal and band code runs unchanged and its coverage of the oracle
//! ROC rates can be checked by simulation.

mod experiment;
mod generate;
mod logit;

pub use experiment::{
    bootstrap_comparison, coverage_experiment, modelled_data, run_replicate, BandwidthComparison, CoverageReport,
    ExperimentConfig, ModelledData, ReplicateOutcome,
};
pub use generate::{generate, logistic, logit, Cluster, ModelKind, SyntheticData, SyntheticSpec};
pub use logit::{fit_logistic, FittedLogit};
