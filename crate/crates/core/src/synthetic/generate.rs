use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub fn logistic(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Gaussian cloud of covariates with its own sampling weights and model noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub center: Vec<f64>,
    /// Relative weight when drawing train and calibration instances.
    pub pool_weight: f64,
    /// Relative weight when drawing test instances.
    pub test_weight: f64,
    /// Standard deviation of the logit-scale noise of [`ModelKind::NoisyOracle`].
    pub noise_sd: f64,
}

/// Where the model probabilities come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Logistic regression fitted on the training part, without the missing
    /// covariates.
    #[default]
    Logistic,
    /// The true probabilities themselves.
    Oracle,
    /// True probabilities perturbed on the logit scale with per-cluster noise.
    NoisyOracle,
}

/// Data-generating design for one synthetic data set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_train: usize,
    pub n_calib: usize,
    pub n_test: usize,
    /// True coefficients; their count is the covariate dimension.
    pub beta: Vec<f64>,
    pub intercept: f64,
    /// Covariates hidden from the fitted model.
    pub missing: Vec<usize>,
    /// Empty means a single standard normal cloud at the origin.
    pub clusters: Vec<Cluster>,
    /// Mean shift added to the test covariates.
    pub shift: Option<Vec<f64>>,
    pub model: ModelKind,
    pub seed: u64,
}

impl SyntheticSpec {
    /// Well specified design: three covariates, all observed.
    pub fn m1(n_train: usize, n_calib: usize, n_test: usize, seed: u64) -> Self {
        SyntheticSpec {
            n_train,
            n_calib,
            n_test,
            beta: vec![1.0, -1.0, 0.5],
            intercept: 0.0,
            missing: Vec::new(),
            clusters: Vec::new(),
            shift: None,
            model: ModelKind::Logistic,
            seed,
        }
    }

    /// One covariate missing from the fitted model.
    pub fn m2(n_train: usize, n_calib: usize, n_test: usize, seed: u64) -> Self {
        SyntheticSpec {
            missing: vec![2],
            ..Self::m1(n_train, n_calib, n_test, seed)
        }
    }

    /// Two covariates missing from the fitted model.
    pub fn m3(n_train: usize, n_calib: usize, n_test: usize, seed: u64) -> Self {
        SyntheticSpec {
            missing: vec![1, 2],
            ..Self::m1(n_train, n_calib, n_test, seed)
        }
    }

    pub fn dim(&self) -> usize {
        self.beta.len()
    }

    pub fn len(&self) -> usize {
        self.n_train + self.n_calib + self.n_test
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        SyntheticSpec { seed, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if d == 0 {
            return Err(Error::Argument("at least one covariate is required".into()));
        }
        if self.n_train == 0 || self.n_calib == 0 || self.n_test == 0 {
            return Err(Error::Argument("train, calibration and test sizes must be positive".into()));
        }
        if let Some(&m) = self.missing.iter().find(|&&m| m >= d) {
            return Err(Error::Argument(format!("missing covariate {m} out of range for dimension {d}")));
        }
        if self.shift.as_ref().is_some_and(|s| s.len() != d) {
            return Err(Error::Argument("shift length differs from the covariate dimension".into()));
        }
        for c in &self.clusters {
            if c.center.len() != d {
                return Err(Error::Argument("cluster centre length differs from the covariate dimension".into()));
            }
            if !(c.pool_weight >= 0.0 && c.test_weight >= 0.0 && c.noise_sd >= 0.0) {
                return Err(Error::Argument("cluster weights and noise must be non-negative".into()));
            }
        }
        if !self.clusters.is_empty() {
            let pool: f64 = self.clusters.iter().map(|c| c.pool_weight).sum();
            let test: f64 = self.clusters.iter().map(|c| c.test_weight).sum();
            if pool <= 0.0 || test <= 0.0 {
                return Err(Error::Argument("cluster weights must not all be zero".into()));
            }
        }
        Ok(())
    }
}

/// One generated data set. Ids `0..n_train` are training instances, then
/// calibration, then test.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub covariates: Vec<Vec<f64>>,
    /// True class-1 probabilities.
    pub pi: Vec<f64>,
    pub labels: Vec<usize>,
    pub cluster: Vec<usize>,
    pub train: Vec<usize>,
    pub calib: Vec<usize>,
    pub test: Vec<usize>,
}

fn pick_cluster(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if u < w {
            return i;
        }
        u -= w;
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

/// Draws covariates, true probabilities and labels. Deterministic in
/// `spec.seed`.
pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticData> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let d = spec.dim();
    let n = spec.len();
    let mut data = SyntheticData {
        covariates: Vec::with_capacity(n),
        pi: Vec::with_capacity(n),
        labels: Vec::with_capacity(n),
        cluster: Vec::with_capacity(n),
        train: (0..spec.n_train).collect(),
        calib: (spec.n_train..spec.n_train + spec.n_calib).collect(),
        test: (spec.n_train + spec.n_calib..n).collect(),
    };
    let pool_w: Vec<f64> = spec.clusters.iter().map(|c| c.pool_weight).collect();
    let test_w: Vec<f64> = spec.clusters.iter().map(|c| c.test_weight).collect();

    for id in 0..n {
        let is_test = id >= spec.n_train + spec.n_calib;
        let c = if spec.clusters.is_empty() {
            0
        } else {
            pick_cluster(&mut rng, if is_test { &test_w } else { &pool_w })
        };
        let mut x: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
        if let Some(cl) = spec.clusters.get(c) {
            x.iter_mut().zip(&cl.center).for_each(|(v, m)| *v += m);
        }
        if let (true, Some(shift)) = (is_test, &spec.shift) {
            x.iter_mut().zip(shift).for_each(|(v, s)| *v += s);
        }
        let eta = spec.intercept + x.iter().zip(&spec.beta).map(|(a, b)| a * b).sum::<f64>();
        let pi = logistic(eta);
        data.labels.push(usize::from(rng.random::<f64>() < pi));
        data.pi.push(pi);
        data.covariates.push(x);
        data.cluster.push(c);
    }
    Ok(data)
}
