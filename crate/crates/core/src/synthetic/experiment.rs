use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::generate::{generate, logistic, logit, ModelKind, SyntheticData, SyntheticSpec};
use super::logit::fit_logistic;
use crate::baseline::bootstrap_bands;
use crate::conformal::{NeighborEstimate, SoftInterval, StratumPolicy, DEFAULT_MIN_STRATUM};
use crate::rocbands::{fraction_above, fraction_at_least, run_band_pipeline, sorted, BandConfig, BandMode, BandRun, SplitIds};
use crate::similarity::EuclideanPoints;
use crate::{Error, Result};

/// Settings shared by every replicate of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub alpha: f64,
    pub k: usize,
    pub reps: usize,
    pub mode: BandMode,
    pub grid_points: usize,
    pub min_stratum: usize,
    pub stratum_policy: StratumPolicy,
    pub fit_tol: f64,
    pub fit_max_iter: usize,
    pub estimate: NeighborEstimate,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            alpha: 0.1,
            k: 50,
            reps: 200,
            mode: BandMode::Conditional,
            grid_points: crate::rocbands::DEFAULT_GRID_POINTS,
            min_stratum: DEFAULT_MIN_STRATUM,
            stratum_policy: StratumPolicy::Expand,
            fit_tol: 1e-8,
            fit_max_iter: 500,
            estimate: NeighborEstimate::ModelMean,
        }
    }
}

impl ExperimentConfig {
    pub fn band_config(&self) -> BandConfig {
        BandConfig {
            k: self.k,
            k_train: None,
            alpha: self.alpha,
            mode: self.mode,
            min_stratum: self.min_stratum,
            stratum_policy: self.stratum_policy,
            grid_points: self.grid_points,
            estimate: self.estimate,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Argument(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.reps == 0 {
            return Err(Error::Argument("at least one replicate is required".into()));
        }
        if self.k == 0 {
            return Err(Error::Argument("K must be at least 1".into()));
        }
        Ok(())
    }
}

/// A generated data set together with the model probabilities for it.
#[derive(Debug, Clone)]
pub struct ModelledData {
    pub data: SyntheticData,
    pub f_hat: Vec<f64>,
}

impl ModelledData {
    pub fn distances(&self) -> EuclideanPoints {
        EuclideanPoints::new(self.data.covariates.clone())
    }

    pub fn split(&self) -> SplitIds<'_> {
        SplitIds {
            train: &self.data.train,
            calib: &self.data.calib,
            test: &self.data.test,
        }
    }

    /// Band pipeline on covariate-space Euclidean distance.
    pub fn band(&self, cfg: &BandConfig) -> Result<BandRun> {
        run_band_pipeline(&self.distances(), &self.f_hat, &self.data.labels, self.split(), cfg)
    }
}

/// Generates `spec` and attaches model probabilities for every instance.
pub fn modelled_data(spec: &SyntheticSpec, fit_tol: f64, fit_max_iter: usize) -> Result<ModelledData> {
    let data = generate(spec)?;
    let f_hat = match spec.model {
        ModelKind::Oracle => data.pi.clone(),
        ModelKind::Logistic => {
            let fit = fit_logistic(&data.covariates, &data.labels, &data.train, &spec.missing, fit_tol, fit_max_iter)?;
            data.covariates.iter().map(|x| fit.predict(x)).collect()
        }
        ModelKind::NoisyOracle => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(1);
            data.pi
                .iter()
                .zip(&data.cluster)
                .map(|(&pi, &c)| {
                    let sd = spec.clusters.get(c).map_or(0.0, |cl| cl.noise_sd);
                    let noise = if sd > 0.0 {
                        Normal::new(0.0, sd).expect("finite sd").sample(&mut rng)
                    } else {
                        0.0
                    };
                    logistic(logit(pi) + noise)
                })
                .collect()
        }
    };
    Ok(ModelledData { data, f_hat })
}

/// Outcome of one coverage replicate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicateOutcome {
    pub rep: usize,
    pub seed: u64,
    pub lambda_sen: f64,
    pub tpr_oracle: f64,
    pub sen_lo: f64,
    pub sen_up: f64,
    pub hit_sen: bool,
    pub lambda_spe: f64,
    pub fpr_oracle: f64,
    pub spe_lo: f64,
    pub spe_up: f64,
    pub hit_spe: bool,
    pub mean_bw_sen: f64,
    pub mean_bw_spe: f64,
    pub auc: f64,
    pub auc_lo: f64,
    pub auc_up: f64,
    pub expanded: usize,
}

/// Band values at one threshold together with the oracle rate it targets.
struct JumpCheck {
    lambda: f64,
    oracle: f64,
    lo: f64,
    up: f64,
}

/// Checks the band built from `intervals` at the true probability of a
/// uniformly drawn instance from `members`.
fn check_jump(members: &[usize], intervals: &[&SoftInterval], pi: &[f64], rng: &mut ChaCha8Rng) -> JumpCheck {
    let s = members[rng.random_range(0..members.len())];
    let lambda = pi[s];
    let pis = sorted(members.iter().map(|&i| pi[i]));
    let lo = sorted(intervals.iter().map(|iv| iv.lo));
    let up = sorted(intervals.iter().map(|iv| iv.up));
    JumpCheck {
        lambda,
        oracle: fraction_at_least(&pis, lambda),
        lo: fraction_above(&lo, lambda),
        up: fraction_above(&up, lambda),
    }
}

/// Runs one replicate on `spec` (whose seed is already the replicate seed).
pub fn run_replicate(spec: &SyntheticSpec, rep: usize, cfg: &ExperimentConfig) -> Result<ReplicateOutcome> {
    let md = modelled_data(spec, cfg.fit_tol, cfg.fit_max_iter)?;
    let run = md.band(&cfg.band_config())?;
    let labels = &md.data.labels;
    let (pos_ids, neg_ids): (Vec<usize>, Vec<usize>) = md.data.test.iter().partition(|&&i| labels[i] == 1);
    let (pos_iv, neg_iv): (Vec<&SoftInterval>, Vec<&SoftInterval>) =
        run.intervals.iter().partition(|iv| labels[iv.graph_id] == 1);

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(2);
    let sen = check_jump(&pos_ids, &pos_iv, &md.data.pi, &mut rng);
    let spe = check_jump(&neg_ids, &neg_iv, &md.data.pi, &mut rng);
    Ok(ReplicateOutcome {
        rep,
        seed: spec.seed,
        lambda_sen: sen.lambda,
        tpr_oracle: sen.oracle,
        sen_lo: sen.lo,
        sen_up: sen.up,
        hit_sen: sen.lo <= sen.oracle && sen.oracle <= sen.up,
        lambda_spe: spe.lambda,
        fpr_oracle: spe.oracle,
        spe_lo: spe.lo,
        spe_up: spe.up,
        hit_spe: spe.lo <= spe.oracle && spe.oracle <= spe.up,
        mean_bw_sen: run.band.mean_bandwidth_sen(),
        mean_bw_spe: run.band.mean_bandwidth_spe(),
        auc: run.roc.auc,
        auc_lo: run.band.auc_lo,
        auc_up: run.band.auc_up,
        expanded: run.expanded,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageReport {
    pub mode: BandMode,
    pub alpha: f64,
    #[serde(rename = "K")]
    pub k: usize,
    pub reps: usize,
    pub coverage_sen: f64,
    pub se_sen: f64,
    pub coverage_spe: f64,
    pub se_spe: f64,
    pub mean_bw_sen: f64,
    pub mean_bw_spe: f64,
    #[serde(skip)]
    pub outcomes: Vec<ReplicateOutcome>,
}

impl CoverageReport {
    /// Per-replicate outcomes as CSV, one row per replicate.
    pub fn write_outcomes_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(w);
        for o in &self.outcomes {
            writer
                .serialize(o)
                .map_err(|e| Error::Io(std::io::Error::other(e)))?;
        }
        writer.flush()?;
        Ok(())
    }
}

fn binomial_se(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Monte Carlo check of oracle-rate coverage: replicate `r` regenerates the
/// data with seed `spec.seed + r`, builds the band and checks it at one
/// random jump point per class.
pub fn coverage_experiment(spec: &SyntheticSpec, cfg: &ExperimentConfig) -> Result<CoverageReport> {
    cfg.validate()?;
    spec.validate()?;
    let outcomes = (0..cfg.reps)
        .into_par_iter()
        .map(|r| run_replicate(&spec.with_seed(spec.seed.wrapping_add(r as u64)), r, cfg))
        .collect::<Result<Vec<_>>>()?;
    let n = outcomes.len();
    let frac = |f: fn(&ReplicateOutcome) -> bool| outcomes.iter().filter(|o| f(o)).count() as f64 / n as f64;
    let mean = |f: fn(&ReplicateOutcome) -> f64| outcomes.iter().map(f).sum::<f64>() / n as f64;
    let coverage_sen = frac(|o| o.hit_sen);
    let coverage_spe = frac(|o| o.hit_spe);
    Ok(CoverageReport {
        mode: cfg.mode,
        alpha: cfg.alpha,
        k: cfg.k,
        reps: n,
        coverage_sen,
        se_sen: binomial_se(coverage_sen, n),
        coverage_spe,
        se_spe: binomial_se(coverage_spe, n),
        mean_bw_sen: mean(|o| o.mean_bw_sen),
        mean_bw_spe: mean(|o| o.mean_bw_spe),
        outcomes,
    })
}

/// Conformal and bootstrap bandwidths on the same replicate and grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandwidthComparison {
    pub rep: usize,
    pub seed: u64,
    pub cp_bw_sen: f64,
    pub cp_bw_spe: f64,
    pub boot_bw_tpr: f64,
    pub boot_bw_fpr: f64,
}

impl BandwidthComparison {
    pub fn cp_mean(&self) -> f64 {
        (self.cp_bw_sen + self.cp_bw_spe) / 2.0
    }

    pub fn boot_mean(&self) -> f64 {
        (self.boot_bw_tpr + self.boot_bw_fpr) / 2.0
    }
}

/// Per replicate: conformal band (mode from `cfg`) and a percentile
/// bootstrap band of the model scores on the test part, both evaluated on the
/// conformal band's threshold grid.
pub fn bootstrap_comparison(
    spec: &SyntheticSpec,
    cfg: &ExperimentConfig,
    resamples: usize,
    level: f64,
) -> Result<Vec<BandwidthComparison>> {
    cfg.validate()?;
    (0..cfg.reps)
        .into_par_iter()
        .map(|r| {
            let seed = spec.seed.wrapping_add(r as u64);
            let md = modelled_data(&spec.with_seed(seed), cfg.fit_tol, cfg.fit_max_iter)?;
            let run = md.band(&cfg.band_config())?;
            let scores: Vec<f64> = md.data.test.iter().map(|&i| md.f_hat[i]).collect();
            let positive: Vec<bool> = md.data.test.iter().map(|&i| md.data.labels[i] == 1).collect();
            let boot = bootstrap_bands(&scores, &positive, &run.band.lambda_grid, resamples, level, seed)?;
            Ok(BandwidthComparison {
                rep: r,
                seed,
                cp_bw_sen: run.band.mean_bandwidth_sen(),
                cp_bw_spe: run.band.mean_bandwidth_spe(),
                boot_bw_tpr: boot.mean_bandwidth_tpr(),
                boot_bw_fpr: boot.mean_bandwidth_fpr(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::Cluster;

    fn quick(mode: BandMode, reps: usize, alpha: f64) -> ExperimentConfig {
        ExperimentConfig {
            alpha,
            k: 30,
            reps,
            mode,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn deterministic() {
        let spec = SyntheticSpec::m1(300, 200, 100, 4);
        let cfg = quick(BandMode::Conditional, 3, 0.1);
        let a = coverage_experiment(&spec, &cfg).unwrap();
        let b = coverage_experiment(&spec, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.outcomes.len(), 3);
        assert_eq!(a.outcomes[2].seed, 6);
    }

    #[test]
    fn exchangeable_band_covers_oracle_rates() {
        let spec = SyntheticSpec::m1(1000, 500, 300, 10);
        let report = coverage_experiment(&spec, &quick(BandMode::Exchangeable, 40, 0.1)).unwrap();
        assert!(report.coverage_sen >= 0.85 && report.coverage_spe >= 0.85, "{report:?}");
    }

    #[test]
    fn label_mean_estimate_covers_locally() {
        let spec = SyntheticSpec::m1(1000, 500, 300, 10);
        let cfg = ExperimentConfig {
            estimate: NeighborEstimate::LabelMean,
            ..quick(BandMode::Conditional, 40, 0.1)
        };
        let report = coverage_experiment(&spec, &cfg).unwrap();
        assert!(report.coverage_sen >= 0.85 && report.coverage_spe >= 0.85, "{report:?}");
    }

    #[test]
    fn coverage_grows_with_confidence() {
        let spec = SyntheticSpec::m1(600, 400, 200, 20);
        let cov: Vec<f64> = [0.2, 0.1, 0.05]
            .iter()
            .map(|&a| {
                let r = coverage_experiment(&spec, &quick(BandMode::Exchangeable, 30, a)).unwrap();
                r.coverage_sen + r.coverage_spe
            })
            .collect();
        assert!(cov[0] <= cov[1] && cov[1] <= cov[2], "{cov:?}");
    }

    #[test]
    fn oracle_bands_tighten_with_size() {
        let bw = |n: usize| {
            let spec = SyntheticSpec {
                model: ModelKind::Oracle,
                ..SyntheticSpec::m1(n, n / 2, 200, 30)
            };
            let cfg = ExperimentConfig {
                k: (n / 40).max(5),
                ..quick(BandMode::Exchangeable, 4, 0.1)
            };
            let r = coverage_experiment(&spec, &cfg).unwrap();
            r.mean_bw_sen + r.mean_bw_spe
        };
        assert!(bw(4000) < bw(500));
    }

    #[test]
    fn noisy_cluster_widens_exchangeable_band() {
        let spec = SyntheticSpec {
            clusters: vec![
                Cluster { center: vec![0.0, 0.0, 0.0], pool_weight: 1.0, test_weight: 9.0, noise_sd: 0.05 },
                Cluster { center: vec![8.0, 0.0, 0.0], pool_weight: 1.0, test_weight: 1.0, noise_sd: 1.0 },
            ],
            model: ModelKind::NoisyOracle,
            ..SyntheticSpec::m1(800, 600, 200, 40)
        };
        let exch = coverage_experiment(&spec, &quick(BandMode::Exchangeable, 4, 0.1)).unwrap();
        let cond = coverage_experiment(&spec, &quick(BandMode::Conditional, 4, 0.1)).unwrap();
        for (e, c) in exch.outcomes.iter().zip(&cond.outcomes) {
            assert!(c.mean_bw_sen + c.mean_bw_spe < e.mean_bw_sen + e.mean_bw_spe);
        }
    }

    #[test]
    fn outcomes_csv_has_one_row_per_replicate() {
        let spec = SyntheticSpec::m1(200, 100, 60, 1);
        let report = coverage_experiment(&spec, &quick(BandMode::Exchangeable, 1, 0.1)).unwrap();
        let mut buf = Vec::new();
        report.write_outcomes_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.starts_with("rep,seed,lambda_sen,"));
    }

    #[test]
    fn bootstrap_comparison_runs() {
        let spec = SyntheticSpec::m1(300, 200, 100, 2);
        let rows = bootstrap_comparison(&spec, &quick(BandMode::Conditional, 2, 0.1), 50, 0.95).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.boot_bw_tpr > 0.0 && r.cp_bw_sen > 0.0));
    }

    #[test]
    fn rejects_bad_config() {
        let spec = SyntheticSpec::m1(100, 50, 50, 0);
        assert!(coverage_experiment(&spec, &quick(BandMode::Conditional, 0, 0.1)).is_err());
        assert!(coverage_experiment(&spec, &quick(BandMode::Conditional, 1, 1.5)).is_err());
    }
}
