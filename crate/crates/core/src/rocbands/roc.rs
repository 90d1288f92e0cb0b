use serde::Serialize;

use crate::{Error, Result};

/// Empirical ROC staircase as `(fpr, tpr)` points from `(0, 0)` to `(1, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RocCurve {
    pub points: Vec<(f64, f64)>,
    /// Threshold of each point after the first; a point counts scores
    /// `>= threshold` as positive.
    pub thresholds: Vec<f64>,
    pub auc: f64,
}

pub(crate) fn class_counts(positive: &[bool]) -> Result<(usize, usize)> {
    let pos = positive.iter().filter(|&&p| p).count();
    let neg = positive.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::DegenerateTest(format!(
            "{pos} positive and {neg} negative instances; both classes are required"
        )));
    }
    Ok((pos, neg))
}

/// Area under a piecewise linear curve given by points with non-decreasing x.
pub fn trapezoid_area(points: &[(f64, f64)]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0)
        .sum()
}

/// ROC curve of `scores` against the binary truth `positive`, one point per
/// distinct score, with trapezoidal AUC.
pub fn empirical_roc(scores: &[f64], positive: &[bool]) -> Result<RocCurve> {
    assert_eq!(scores.len(), positive.len(), "scores and labels differ in length");
    let (pos, neg) = class_counts(positive)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![(0.0, 0.0)];
    let mut thresholds = Vec::new();
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        while i < order.len() && scores[order[i]] == threshold {
            if positive[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
        thresholds.push(threshold);
    }
    let auc = trapezoid_area(&points);
    Ok(RocCurve { points, thresholds, auc })
}

/// Sorted copy, for repeated threshold counting.
pub(crate) fn sorted(values: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.into_iter().collect();
    v.sort_unstable_by(f64::total_cmp);
    v
}

/// Fraction of `sorted` strictly above `lambda`.
pub(crate) fn fraction_above(sorted: &[f64], lambda: f64) -> f64 {
    let at_most = sorted.partition_point(|&v| v <= lambda);
    (sorted.len() - at_most) as f64 / sorted.len() as f64
}

/// Fraction of `sorted` at or above `lambda`.
pub(crate) fn fraction_at_least(sorted: &[f64], lambda: f64) -> f64 {
    let below = sorted.partition_point(|&v| v < lambda);
    (sorted.len() - below) as f64 / sorted.len() as f64
}

/// TPR and FPR of the rule `score > lambda` at every grid threshold.
pub fn empirical_rates(scores: &[f64], positive: &[bool], grid: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    class_counts(positive)?;
    let pos = sorted(scores.iter().zip(positive).filter(|p| *p.1).map(|p| *p.0));
    let neg = sorted(scores.iter().zip(positive).filter(|p| !*p.1).map(|p| *p.0));
    Ok((
        grid.iter().map(|&l| fraction_above(&pos, l)).collect(),
        grid.iter().map(|&l| fraction_above(&neg, l)).collect(),
    ))
}

/// ROC rates of the true class probabilities, counting `pi >= lambda`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleRates {
    pub lambda_grid: Vec<f64>,
    pub tpr: Vec<f64>,
    pub fpr: Vec<f64>,
}

pub fn oracle_rates(true_pis: &[f64], positive: &[bool], grid: &[f64]) -> Result<OracleRates> {
    assert_eq!(true_pis.len(), positive.len(), "probabilities and labels differ in length");
    class_counts(positive)?;
    let pos = sorted(true_pis.iter().zip(positive).filter(|p| *p.1).map(|p| *p.0));
    let neg = sorted(true_pis.iter().zip(positive).filter(|p| !*p.1).map(|p| *p.0));
    Ok(OracleRates {
        lambda_grid: grid.to_vec(),
        tpr: grid.iter().map(|&l| fraction_at_least(&pos, l)).collect(),
        fpr: grid.iter().map(|&l| fraction_at_least(&neg, l)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    /// Fraction of concordant (positive, negative) pairs, ties counting half.
    fn pair_count_auc(scores: &[f64], positive: &[bool]) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for (i, &a) in scores.iter().enumerate() {
            for (j, &b) in scores.iter().enumerate() {
                if positive[i] && !positive[j] {
                    den += 1.0;
                    if a > b {
                        num += 1.0;
                    } else if a == b {
                        num += 0.5;
                    }
                }
            }
        }
        num / den
    }

    #[test]
    fn four_point_example() {
        let roc = empirical_roc(&[0.9, 0.8, 0.7, 0.6], &[true, false, true, false]).unwrap();
        assert!((roc.auc - 0.75).abs() < 1e-15);
        assert_eq!(roc.points.first(), Some(&(0.0, 0.0)));
        assert_eq!(roc.points.last(), Some(&(1.0, 1.0)));
    }

    #[test]
    fn perfect_separation() {
        let roc = empirical_roc(&[0.1, 0.2, 0.8, 0.9], &[false, false, true, true]).unwrap();
        assert_eq!(roc.auc, 1.0);
    }

    #[test]
    fn single_class_is_degenerate() {
        assert!(matches!(
            empirical_roc(&[0.1, 0.2], &[true, true]),
            Err(Error::DegenerateTest(_))
        ));
        assert!(oracle_rates(&[0.1], &[false], &[0.5]).is_err());
    }

    #[test]
    fn uninformative_scores() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let scores: Vec<f64> = (0..20000).map(|_| rng.random()).collect();
        let labels: Vec<bool> = (0..20000).map(|_| rng.random_bool(0.5)).collect();
        let roc = empirical_roc(&scores, &labels).unwrap();
        assert!((roc.auc - 0.5).abs() < 0.05);
    }

    #[test]
    fn oracle_boundaries() {
        let rates = oracle_rates(&[1.0, 1.0, 0.3], &[true, true, false], &[0.0, 0.5, 1.0]).unwrap();
        assert_eq!(rates.tpr, vec![1.0, 1.0, 1.0]);
        assert_eq!(rates.fpr, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn strict_and_weak_counts_differ_on_ties() {
        let (tpr, _) = empirical_rates(&[0.5, 0.7], &[true, false], &[0.5]).unwrap();
        assert_eq!(tpr, vec![0.0]);
        let o = oracle_rates(&[0.5, 0.7], &[true, false], &[0.5]).unwrap();
        assert_eq!(o.tpr, vec![1.0]);
    }

    proptest! {
        #[test]
        fn auc_equals_pair_count(raw in proptest::collection::vec((0u8..20, any::<bool>()), 2..60)) {
            let scores: Vec<f64> = raw.iter().map(|r| f64::from(r.0) / 20.0).collect();
            let labels: Vec<bool> = raw.iter().map(|r| r.1).collect();
            prop_assume!(labels.iter().any(|&b| b) && labels.iter().any(|&b| !b));
            let roc = empirical_roc(&scores, &labels).unwrap();
            prop_assert!((roc.auc - pair_count_auc(&scores, &labels)).abs() < 1e-12);
            for w in roc.points.windows(2) {
                prop_assert!(w[0].0 <= w[1].0 && w[0].1 <= w[1].1);
            }
        }

        #[test]
        fn oracle_matches_direct_count(raw in proptest::collection::vec((0.0f64..1.0, any::<bool>()), 2..50), lambda in 0.0f64..1.0) {
            let pis: Vec<f64> = raw.iter().map(|r| r.0).collect();
            let labels: Vec<bool> = raw.iter().map(|r| r.1).collect();
            prop_assume!(labels.iter().any(|&b| b) && labels.iter().any(|&b| !b));
            let o = oracle_rates(&pis, &labels, &[lambda]).unwrap();
            let np = labels.iter().filter(|&&b| b).count() as f64;
            let hits = raw.iter().filter(|r| r.1 && r.0 >= lambda).count() as f64;
            prop_assert_eq!(o.tpr[0], hits / np);
            let nn = labels.len() as f64 - np;
            let fhits = raw.iter().filter(|r| !r.1 && r.0 >= lambda).count() as f64;
            prop_assert_eq!(o.fpr[0], fhits / nn);
        }
    }
}
