use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::band::{band_from_intervals, default_grid, BandMode, RocBand, DEFAULT_GRID_POINTS};
use super::roc::{empirical_roc, RocCurve};
use crate::conformal::{Calibration, NeighborEstimate, SoftInterval, StratumPolicy, DEFAULT_MIN_STRATUM};
use crate::graphdata::ScoredDataset;
use crate::similarity::DistanceSource;
use crate::{Error, Result};

/// Settings for one band construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandConfig {
    /// Neighbourhood size for the local calibration set and, unless
    /// `k_train` is set, for the training-neighbour estimate.
    pub k: usize,
    pub k_train: Option<usize>,
    pub alpha: f64,
    pub mode: BandMode,
    pub min_stratum: usize,
    pub stratum_policy: StratumPolicy,
    pub grid_points: usize,
    #[serde(default)]
    pub estimate: NeighborEstimate,
}

impl Default for BandConfig {
    fn default() -> Self {
        BandConfig {
            k: 20,
            k_train: None,
            alpha: 0.1,
            mode: BandMode::Conditional,
            min_stratum: DEFAULT_MIN_STRATUM,
            stratum_policy: StratumPolicy::Strict,
            grid_points: DEFAULT_GRID_POINTS,
            estimate: NeighborEstimate::ModelMean,
        }
    }
}

impl BandConfig {
    pub fn k_train(&self) -> usize {
        self.k_train.unwrap_or(self.k)
    }
}

/// The split of instance ids used by one band construction.
#[derive(Debug, Clone, Copy)]
pub struct SplitIds<'a> {
    pub train: &'a [usize],
    pub calib: &'a [usize],
    pub test: &'a [usize],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandSummary {
    pub auc: f64,
    pub auc_lo: f64,
    pub auc_up: f64,
    pub mean_bw_sen: f64,
    pub mean_bw_spe: f64,
    pub alpha: f64,
    pub mode: BandMode,
    #[serde(rename = "K")]
    pub k: usize,
    /// Test instances whose local neighbourhood had to grow past K.
    pub expanded: usize,
}

/// Everything produced for one band.
#[derive(Debug, Clone, PartialEq)]
pub struct BandRun {
    pub band: RocBand,
    pub roc: RocCurve,
    /// One interval per test instance, in test order.
    pub intervals: Vec<SoftInterval>,
    pub expanded: usize,
}

impl BandRun {
    pub fn summary(&self, k: usize) -> BandSummary {
        BandSummary {
            auc: self.roc.auc,
            auc_lo: self.band.auc_lo,
            auc_up: self.band.auc_up,
            mean_bw_sen: self.band.mean_bandwidth_sen(),
            mean_bw_spe: self.band.mean_bandwidth_spe(),
            alpha: self.band.alpha,
            mode: self.band.mode.unwrap_or(BandMode::Conditional),
            k,
            expanded: self.expanded,
        }
    }
}

/// Intervals for every test instance, each calibrated on its own label.
///
/// `labels` must be binary (0 negative, 1 positive) and `probs` the model's
/// positive-class probability, both indexed by instance id.
pub fn test_intervals<D: DistanceSource + ?Sized>(
    distances: &D,
    probs: &[f64],
    labels: &[usize],
    split: SplitIds<'_>,
    cfg: &BandConfig,
) -> Result<(Vec<SoftInterval>, usize)> {
    if cfg.k == 0 {
        return Err(Error::Argument("K must be at least 1".into()));
    }
    if !(cfg.alpha > 0.0 && cfg.alpha < 1.0) {
        return Err(Error::Argument(format!("alpha must lie in (0, 1), got {}", cfg.alpha)));
    }
    let cal = Calibration::with_estimate(
        distances,
        probs,
        labels,
        split.train,
        split.calib,
        cfg.k_train(),
        cfg.estimate,
    )?;
    let results = split
        .test
        .par_iter()
        .map(|&g| match cfg.mode {
            BandMode::Exchangeable => Ok((cal.label_conditional_interval(g, labels[g], cfg.alpha)?, false)),
            BandMode::Conditional => {
                let local = cal.local_conditional_interval(
                    g,
                    labels[g],
                    cfg.k,
                    cfg.alpha,
                    cfg.min_stratum,
                    cfg.stratum_policy,
                )?;
                Ok((local.interval, local.expanded))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let expanded = results.iter().filter(|r| r.1).count();
    Ok((results.into_iter().map(|r| r.0).collect(), expanded))
}

/// Full binary pipeline: calibration scores, per-test intervals, band and
/// the empirical ROC of the model on the test part.
pub fn run_band_pipeline<D: DistanceSource + ?Sized>(
    distances: &D,
    probs: &[f64],
    labels: &[usize],
    split: SplitIds<'_>,
    cfg: &BandConfig,
) -> Result<BandRun> {
    if labels.iter().any(|&l| l > 1) {
        return Err(Error::Argument("binary pipeline needs labels in {0, 1}".into()));
    }
    let positive: Vec<bool> = split.test.iter().map(|&g| labels[g] == 1).collect();
    let test_probs: Vec<f64> = split.test.iter().map(|&g| probs[g]).collect();
    let roc = empirical_roc(&test_probs, &positive)?;

    let (intervals, expanded) = test_intervals(distances, probs, labels, split, cfg)?;
    let (pos, neg): (Vec<SoftInterval>, Vec<SoftInterval>) =
        intervals.iter().partition(|iv| labels[iv.graph_id] == 1);
    let grid = default_grid(cfg.grid_points, &intervals);
    let band = band_from_intervals(&pos, &neg, &grid, cfg.alpha, cfg.mode)?;
    Ok(BandRun {
        band,
        roc,
        intervals,
        expanded,
    })
}

/// One-vs-rest bands, one per label: label `k` is the positive class and
/// the model's class-`k` probability is the score.
pub fn multilabel_bands<D: DistanceSource + ?Sized>(
    distances: &D,
    scored: &ScoredDataset,
    split: SplitIds<'_>,
    cfg: &BandConfig,
) -> Result<BTreeMap<usize, BandRun>> {
    let num_classes = scored.num_classes();
    if num_classes < 2 {
        return Err(Error::Argument("need at least two labels".into()));
    }
    for k in 0..num_classes {
        let found = split.test.iter().filter(|&&g| scored.labels[g] == k).count();
        if found == 0 {
            return Err(Error::Stratum {
                label: k,
                found: 0,
                required: 1,
                diagnostics: Some("label absent from the test part".into()),
            });
        }
    }
    (0..num_classes)
        .into_par_iter()
        .map(|k| {
            let probs = scored.class_probs(k);
            let labels: Vec<usize> = scored.binarized(k).into_iter().map(usize::from).collect();
            run_band_pipeline(distances, &probs, &labels, split, cfg).map(|run| (k, run))
        })
        .collect()
}
