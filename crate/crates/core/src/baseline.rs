//! Bootstrap ROC bands, the usual resampling baseline for CP-ROC bands.
//!
//! Test instances are resampled with replacement within each class, so every
//! resample keeps the class counts. Bounds are per-threshold percentiles of
//! the resampled TPR and FPR.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::rocbands::{class_counts, fraction_above, sorted, RocBand};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapBand {
    pub lambda_grid: Vec<f64>,
    pub tpr_lo: Vec<f64>,
    pub tpr_up: Vec<f64>,
    pub fpr_lo: Vec<f64>,
    pub fpr_up: Vec<f64>,
    pub resamples: usize,
    pub level: f64,
}

impl BootstrapBand {
    pub fn mean_bandwidth_tpr(&self) -> f64 {
        mean_gap(&self.tpr_lo, &self.tpr_up)
    }

    pub fn mean_bandwidth_fpr(&self) -> f64 {
        mean_gap(&self.fpr_lo, &self.fpr_up)
    }

    /// The same bounds in the band layout shared with conformal bands.
    pub fn to_roc_band(&self) -> RocBand {
        RocBand::from_envelopes(
            self.lambda_grid.clone(),
            self.tpr_lo.clone(),
            self.tpr_up.clone(),
            self.fpr_lo.clone(),
            self.fpr_up.clone(),
            None,
            1.0 - self.level,
        )
    }
}

fn mean_gap(lo: &[f64], up: &[f64]) -> f64 {
    lo.iter().zip(up).map(|(l, u)| u - l).sum::<f64>() / lo.len().max(1) as f64
}

/// Linear-interpolation percentile of sorted data (the common "type 7"
/// definition).
pub fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn resample(values: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
    sorted((0..values.len()).map(|_| values[rng.random_range(0..values.len())]))
}

/// Percentile bootstrap band for the rule `score > lambda`.
///
/// Resample `b` uses the generator seeded with `seed + b`.
pub fn bootstrap_bands(
    scores: &[f64],
    positive: &[bool],
    lambda_grid: &[f64],
    resamples: usize,
    level: f64,
    seed: u64,
) -> Result<BootstrapBand> {
    assert_eq!(scores.len(), positive.len(), "scores and labels differ in length");
    if resamples == 0 {
        return Err(Error::Argument("at least one bootstrap resample is required".into()));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Argument(format!("level must lie in (0, 1), got {level}")));
    }
    class_counts(positive)?;
    let pos: Vec<f64> = scores.iter().zip(positive).filter(|p| *p.1).map(|p| *p.0).collect();
    let neg: Vec<f64> = scores.iter().zip(positive).filter(|p| !*p.1).map(|p| *p.0).collect();

    let curves: Vec<(Vec<f64>, Vec<f64>)> = (0..resamples as u64)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(b));
            let p = resample(&pos, &mut rng);
            let n = resample(&neg, &mut rng);
            (
                lambda_grid.iter().map(|&l| fraction_above(&p, l)).collect(),
                lambda_grid.iter().map(|&l| fraction_above(&n, l)).collect(),
            )
        })
        .collect();

    let (q_lo, q_up) = ((1.0 - level) / 2.0, 1.0 - (1.0 - level) / 2.0);
    let bounds = |pick: fn(&(Vec<f64>, Vec<f64>)) -> &Vec<f64>| -> (Vec<f64>, Vec<f64>) {
        (0..lambda_grid.len())
            .map(|i| {
                let column = sorted(curves.iter().map(|c| pick(c)[i]));
                (percentile_sorted(&column, q_lo), percentile_sorted(&column, q_up))
            })
            .unzip()
    };
    let (tpr_lo, tpr_up) = bounds(|c| &c.0);
    let (fpr_lo, fpr_up) = bounds(|c| &c.1);
    Ok(BootstrapBand {
        lambda_grid: lambda_grid.to_vec(),
        tpr_lo,
        tpr_up,
        fpr_lo,
        fpr_up,
        resamples,
        level,
    })
}
