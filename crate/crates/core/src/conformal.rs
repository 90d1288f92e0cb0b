//! Soft conformal prediction for the latent class probability.
//!
//! A calibration instance `i` gets the non-conformity score
//! `s_i = pi_tilde(i) - f_hat(i)`, where `pi_tilde` is the mean model
//! probability of its K nearest training instances. For a new instance with
//! model probability `f_hat`, the interval is
//! `[f_hat + q_{alpha/2}(S), f_hat + q_{1 - alpha/2}(S)]`, where `q_gamma` is the
//! `floor(gamma |S|)`-th order statistic and `S` is one of
//!
//! - all calibration scores ([`marginal_interval`]),
//! - calibration scores with label `k` ([`label_conditional_interval`]),
//! - label-`k` scores among the K nearest calibration instances
//!   ([`Calibration::local_conditional_interval`]).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::graphdata::Part;
use crate::similarity::{knn, rank_pool, DistanceSource};
use crate::{Error, Result};

pub const DEFAULT_MIN_STRATUM: usize = 5;

fn order_statistic_index(n: usize, gamma: f64) -> usize {
    ((gamma * n as f64).floor() as usize).clamp(1, n)
}

/// The `floor(gamma * |values|)`-th smallest value (1-based, clamped to
/// `[1, |values|]`).
pub fn quantile(values: &[f64], gamma: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Argument("quantile of an empty set".into()));
    }
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::Argument(format!("quantile level {gamma} outside [0, 1]")));
    }
    let m = order_statistic_index(values.len(), gamma);
    let mut scratch = values.to_vec();
    let (_, nth, _) = scratch.select_nth_unstable_by(m - 1, f64::total_cmp);
    Ok(*nth)
}

fn quantile_sorted(sorted: &[f64], gamma: f64) -> f64 {
    sorted[order_statistic_index(sorted.len(), gamma) - 1]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NonconformityScore {
    pub graph_id: usize,
    pub label: usize,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Conditioning {
    Marginal,
    Label { label: usize },
    Local { label: usize, k: usize },
}

impl std::fmt::Display for Conditioning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Conditioning::Marginal => write!(f, "marginal"),
            Conditioning::Label { label } => write!(f, "label{label}"),
            Conditioning::Local { label, k } => write!(f, "local{label}k{k}"),
        }
    }
}

/// Conformal interval for one instance. `lo` and `up` are raw and may leave
/// `[0, 1]`; use [`SoftInterval::clamped`] for reporting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SoftInterval {
    pub graph_id: usize,
    pub lo: f64,
    pub up: f64,
    pub alpha: f64,
    pub conditioning: Conditioning,
}

impl SoftInterval {
    pub fn clamped(&self) -> (f64, f64) {
        (self.lo.clamp(0.0, 1.0), self.up.clamp(0.0, 1.0))
    }

    pub fn contains(&self, value: f64) -> bool {
        self.lo <= value && value <= self.up
    }

    pub fn width(&self) -> f64 {
        self.up - self.lo
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Argument(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

fn interval_from_sorted(
    graph_id: usize,
    f_hat: f64,
    sorted: &[f64],
    alpha: f64,
    conditioning: Conditioning,
) -> SoftInterval {
    SoftInterval {
        graph_id,
        lo: f_hat + quantile_sorted(sorted, alpha / 2.0),
        up: f_hat + quantile_sorted(sorted, 1.0 - alpha / 2.0),
        alpha,
        conditioning,
    }
}

fn sorted_scores<'a>(scores: impl Iterator<Item = &'a NonconformityScore>) -> Vec<f64> {
    let mut v: Vec<f64> = scores.map(|s| s.score).collect();
    v.sort_unstable_by(f64::total_cmp);
    v
}

/// Interval calibrated on every score.
pub fn marginal_interval(
    graph_id: usize,
    f_hat: f64,
    scores: &[NonconformityScore],
    alpha: f64,
) -> Result<SoftInterval> {
    check_alpha(alpha)?;
    if scores.is_empty() {
        return Err(Error::Argument("no calibration scores".into()));
    }
    let sorted = sorted_scores(scores.iter());
    Ok(interval_from_sorted(graph_id, f_hat, &sorted, alpha, Conditioning::Marginal))
}

/// Interval calibrated on the scores whose label is `label`.
pub fn label_conditional_interval(
    graph_id: usize,
    f_hat: f64,
    label: usize,
    scores: &[NonconformityScore],
    alpha: f64,
) -> Result<SoftInterval> {
    check_alpha(alpha)?;
    let sorted = sorted_scores(scores.iter().filter(|s| s.label == label));
    if sorted.is_empty() {
        return Err(Error::Stratum {
            label,
            found: 0,
            required: 1,
            diagnostics: None,
        });
    }
    Ok(interval_from_sorted(graph_id, f_hat, &sorted, alpha, Conditioning::Label { label }))
}

/// Conformal p-value `(#{j : s_j < pi - f_hat} + 1) / |S|`, a diagnostic only;
/// intervals use the quantile form.
pub fn conformal_p_value(pi: f64, f_hat: f64, scores: &[NonconformityScore]) -> f64 {
    let target = pi - f_hat;
    let below = scores.iter().filter(|s| s.score < target).count();
    (below + 1) as f64 / scores.len() as f64
}

/// Mean model probability of the K nearest members of `train_pool`.
pub fn soft_prob_estimate<D: DistanceSource + ?Sized>(
    graph_id: usize,
    distances: &D,
    train_pool: &[usize],
    probs: &[f64],
    k: usize,
) -> Result<f64> {
    let nn = knn(distances, graph_id, train_pool, k, Part::Train)?;
    Ok(nn.ids().map(|i| probs[i]).sum::<f64>() / nn.len() as f64)
}

/// Quantity averaged over the K nearest training instances to get the
/// non-parametric estimate `pi_tilde`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeighborEstimate {
    /// Model probabilities of the neighbours.
    #[default]
    ModelMean,
    /// Observed labels of the neighbours (fraction with label 1), the usual
    /// K-nearest-neighbour regression estimate of the class probability.
    LabelMean,
}

/// What to do when a neighbourhood has fewer than `min_stratum` members of
/// the requested label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StratumPolicy {
    /// Fail with [`Error::Stratum`].
    #[default]
    Strict,
    /// Extend the neighbourhood outwards, in distance order, until it holds
    /// `min_stratum` members of the label.
    Expand,
}

/// Result of a local interval query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalInterval {
    pub interval: SoftInterval,
    /// Size of the neighbourhood actually used (> K when expanded).
    pub neighbourhood: usize,
    pub expanded: bool,
}

/// Calibration scores for a fixed train/calib split and distance.
///
/// Scores depend only on the calibration instance, so they are computed once
/// and shared by the exchangeable and the local intervals.
pub struct Calibration<'a, D: DistanceSource + ?Sized> {
    distances: &'a D,
    probs: &'a [f64],
    labels: &'a [usize],
    calib: Vec<usize>,
    scores: Vec<NonconformityScore>,
    score_of: Vec<f64>,
    k_train: usize,
}

impl<'a, D: DistanceSource + ?Sized> Calibration<'a, D> {
    /// Computes `s_i` for every calibration instance. `probs` and `labels` are
    /// indexed by instance id; `k_train` is the neighbourhood size for
    /// `pi_tilde`, the mean model probability of the training neighbours.
    pub fn new(
        distances: &'a D,
        probs: &'a [f64],
        labels: &'a [usize],
        train: &[usize],
        calib: &[usize],
        k_train: usize,
    ) -> Result<Self> {
        Self::with_estimate(distances, probs, labels, train, calib, k_train, NeighborEstimate::ModelMean)
    }

    /// As [`Calibration::new`] with a choice of neighbour estimate.
    pub fn with_estimate(
        distances: &'a D,
        probs: &'a [f64],
        labels: &'a [usize],
        train: &[usize],
        calib: &[usize],
        k_train: usize,
        estimate: NeighborEstimate,
    ) -> Result<Self> {
        if calib.is_empty() {
            return Err(Error::Argument("empty calibration set".into()));
        }
        if train.is_empty() {
            return Err(Error::Argument("empty training set".into()));
        }
        let label_values: Vec<f64>;
        let neighbor_values = match estimate {
            NeighborEstimate::ModelMean => probs,
            NeighborEstimate::LabelMean => {
                label_values = labels.iter().map(|&l| f64::from(u8::from(l == 1))).collect();
                &label_values
            }
        };
        let scores = calib
            .par_iter()
            .map(|&i| {
                let pi_tilde = soft_prob_estimate(i, distances, train, neighbor_values, k_train)?;
                Ok(NonconformityScore {
                    graph_id: i,
                    label: labels[i],
                    score: pi_tilde - probs[i],
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut score_of = vec![f64::NAN; probs.len()];
        for s in &scores {
            score_of[s.graph_id] = s.score;
        }
        Ok(Calibration {
            distances,
            probs,
            labels,
            calib: calib.to_vec(),
            scores,
            score_of,
            k_train,
        })
    }

    pub fn scores(&self) -> &[NonconformityScore] {
        &self.scores
    }

    pub fn k_train(&self) -> usize {
        self.k_train
    }

    pub fn calib(&self) -> &[usize] {
        &self.calib
    }

    pub fn marginal_interval(&self, graph_id: usize, alpha: f64) -> Result<SoftInterval> {
        marginal_interval(graph_id, self.probs[graph_id], &self.scores, alpha)
    }

    pub fn label_conditional_interval(&self, graph_id: usize, label: usize, alpha: f64) -> Result<SoftInterval> {
        label_conditional_interval(graph_id, self.probs[graph_id], label, &self.scores, alpha)
    }

    /// Interval calibrated on the label-`label` members of the `k_calib`
    /// nearest calibration instances.
    pub fn local_conditional_interval(
        &self,
        graph_id: usize,
        label: usize,
        k_calib: usize,
        alpha: f64,
        min_stratum: usize,
        policy: StratumPolicy,
    ) -> Result<LocalInterval> {
        check_alpha(alpha)?;
        let required = min_stratum.max(1);
        let nn = knn(self.distances, graph_id, &self.calib, k_calib, Part::Calib)?;
        let mut stratum: Vec<f64> = nn
            .ids()
            .filter(|&i| self.labels[i] == label)
            .map(|i| self.score_of[i])
            .collect();
        let mut neighbourhood = nn.len();
        let mut expanded = false;

        if stratum.len() < required {
            match policy {
                StratumPolicy::Strict => {
                    let diagnostics = format!(
                        "graph {graph_id}: K={k_calib} neighbourhood of {} calibration instances, distances {:.4}..{:.4}",
                        nn.len(),
                        nn.neighbors.first().map_or(f64::NAN, |n| n.1),
                        nn.neighbors.last().map_or(f64::NAN, |n| n.1),
                    );
                    return Err(Error::Stratum {
                        label,
                        found: stratum.len(),
                        required,
                        diagnostics: Some(diagnostics),
                    });
                }
                StratumPolicy::Expand => {
                    let ranked = rank_pool(self.distances, graph_id, &self.calib)?;
                    for &(i, _) in &ranked[nn.len()..] {
                        if stratum.len() >= required {
                            break;
                        }
                        neighbourhood += 1;
                        if self.labels[i] == label {
                            stratum.push(self.score_of[i]);
                        }
                    }
                    expanded = true;
                    if stratum.len() < required {
                        return Err(Error::Stratum {
                            label,
                            found: stratum.len(),
                            required,
                            diagnostics: Some(format!("whole calibration set of {} exhausted", ranked.len())),
                        });
                    }
                }
            }
        }
        stratum.sort_unstable_by(f64::total_cmp);
        Ok(LocalInterval {
            interval: interval_from_sorted(
                graph_id,
                self.probs[graph_id],
                &stratum,
                alpha,
                Conditioning::Local { label, k: k_calib },
            ),
            neighbourhood,
            expanded,
        })
    }
}

/// Writes intervals as `graph_id,label,conditioning,lo,up,alpha`, with the
/// endpoints clamped to `[0, 1]`.
pub fn write_intervals_csv<W: std::io::Write>(mut w: W, intervals: &[SoftInterval]) -> std::io::Result<()> {
    writeln!(w, "graph_id,label,conditioning,lo,up,alpha")?;
    for iv in intervals {
        let label = match iv.conditioning {
            Conditioning::Marginal => String::new(),
            Conditioning::Label { label } | Conditioning::Local { label, .. } => label.to_string(),
        };
        let (lo, up) = iv.clamped();
        writeln!(w, "{},{label},{},{lo},{up},{}", iv.graph_id, iv.conditioning, iv.alpha)?;
    }
    Ok(())
}
