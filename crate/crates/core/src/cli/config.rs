use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use crate::conformal::{NeighborEstimate, StratumPolicy, DEFAULT_MIN_STRATUM};
use crate::graphdata::SplitConfig;
use crate::rocbands::{BandConfig, BandMode, DEFAULT_GRID_POINTS};
use crate::synthetic::{ExperimentConfig, ModelKind, SyntheticSpec};
use crate::topology::{FiltrationKind, HomologyDims};
use crate::{Error, Result};

/// Version string embedded in every output.
pub fn version() -> String {
    option_env!("CPROC_GIT_DESCRIBE")
        .map(str::to_string)
        .unwrap_or_else(|| format!("v{}", env!("CARGO_PKG_VERSION")))
}

/// Settings shared by the commands. Every field is optional so that a config
/// file and the command line can be layered; flags win.
///
/// The config file is TOML with the flag names as keys, dashes replaced by
/// underscores (`knn = 30`, `wasserstein_p = 2.0`, `mode = "exch"`).
#[derive(Debug, Clone, Default, PartialEq, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigArgs {
    /// TOML file of `key = value` settings; flags override it.
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Recompute outputs that already exist.
    #[arg(long)]
    #[serde(skip)]
    pub force: bool,

    /// Directory holding a TU-format dataset.
    #[arg(long, value_name = "DIR")]
    pub dataset: Option<PathBuf>,
    /// Dataset file prefix; defaults to the directory name.
    #[arg(long)]
    pub name: Option<String>,
    /// Comma-separated filtrations (degree, betweenness, closeness,
    /// communicability, eigenvector).
    #[arg(long)]
    pub filtration: Option<String>,
    #[arg(long, value_name = "P")]
    pub wasserstein_p: Option<f64>,
    /// Homology dimensions compared: 0, 1 or both.
    #[arg(long)]
    pub homology: Option<String>,
    /// Neighbourhood size K.
    #[arg(long, value_name = "K")]
    pub knn: Option<usize>,
    /// Training neighbours for the probability estimate; defaults to K.
    #[arg(long, value_name = "K")]
    pub k_train: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of calibration/test re-splits (bands) or replicates (simulate).
    #[arg(long, value_name = "M")]
    pub repeats: Option<usize>,
    /// exch or cond.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub pool_split: Option<f64>,
    #[arg(long)]
    pub calib_split: Option<f64>,
    #[arg(long)]
    pub grid_points: Option<usize>,
    /// What to do when a neighbourhood holds fewer than 5 instances of the
    /// label: error or expand.
    #[arg(long)]
    pub thin_stratum: Option<String>,
    /// Neighbour estimate of the probability: model (mean model score) or
    /// label (share of positive neighbours).
    #[arg(long)]
    pub estimate: Option<String>,
    /// Score CSV `graph_id,label,p0,p1[,...]`.
    #[arg(long, value_name = "FILE")]
    pub scores: Option<PathBuf>,
    /// Split manifest `graph_id,part`; a seeded split is drawn otherwise.
    #[arg(long, value_name = "FILE")]
    pub split: Option<PathBuf>,
    /// Distance matrix CSV used instead of computing one from the dataset.
    #[arg(long, value_name = "FILE")]
    pub matrix: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub image_resolution: Option<usize>,
    /// Bootstrap resamples.
    #[arg(long, value_name = "B")]
    pub resamples: Option<usize>,
    /// Bootstrap confidence level.
    #[arg(long)]
    pub level: Option<f64>,
    /// Synthetic design: m1, m2 or m3.
    #[arg(long)]
    pub design: Option<String>,
    #[arg(long)]
    pub n_train: Option<usize>,
    #[arg(long)]
    pub n_calib: Option<usize>,
    #[arg(long)]
    pub n_test: Option<usize>,
    /// Synthetic model: logistic, oracle or noisy_oracle.
    #[arg(long)]
    pub model: Option<String>,
}

macro_rules! overlay {
    ($base:expr, $top:expr, $($field:ident),*) => {
        ConfigArgs {
            config: $top.config.or($base.config),
            force: $top.force || $base.force,
            $($field: $top.$field.or($base.$field),)*
        }
    };
}

impl ConfigArgs {
    /// Reads a TOML settings file.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::parse(path, None, e.to_string()))?;
        toml::from_str(&text).map_err(|e| Error::parse(path, None, e.to_string()))
    }

    /// Fields set in `self` take precedence over `base`.
    pub fn over(self, base: ConfigArgs) -> ConfigArgs {
        overlay!(
            base,
            self,
            dataset,
            name,
            filtration,
            wasserstein_p,
            homology,
            knn,
            k_train,
            alpha,
            seed,
            repeats,
            mode,
            pool_split,
            calib_split,
            grid_points,
            thin_stratum,
            estimate,
            scores,
            split,
            matrix,
            out,
            image_resolution,
            resamples,
            level,
            design,
            n_train,
            n_calib,
            n_test,
            model
        )
    }

    /// Layers the `--config` file under the flags and validates the result.
    pub fn load(self, defaults: &Defaults) -> Result<RunConfig> {
        let merged = match &self.config {
            Some(path) => {
                let file = ConfigArgs::from_file(path)?;
                self.over(file)
            }
            None => self,
        };
        RunConfig::resolve(merged, defaults)
    }
}

/// Per-command defaults that differ between commands.
#[derive(Debug, Clone, Copy)]
pub struct Defaults {
    pub thin_stratum: StratumPolicy,
    pub repeats: usize,
    pub knn: usize,
}

impl Default for Defaults {
    fn default() -> Self {
        Defaults {
            thin_stratum: StratumPolicy::Strict,
            repeats: 1,
            knn: 20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Design {
    M1,
    M2,
    M3,
}

/// Validated settings of one run, serialised into every output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub dataset: Option<PathBuf>,
    pub name: Option<String>,
    pub filtrations: Vec<FiltrationKind>,
    pub wasserstein_p: f64,
    pub homology: HomologyDims,
    #[serde(rename = "K")]
    pub k: usize,
    pub k_train: Option<usize>,
    pub alpha: f64,
    pub seed: u64,
    pub repeats: usize,
    pub mode: BandMode,
    pub split: SplitConfig,
    pub grid_points: usize,
    pub min_stratum: usize,
    pub thin_stratum: StratumPolicy,
    pub estimate: NeighborEstimate,
    pub scores: Option<PathBuf>,
    pub split_file: Option<PathBuf>,
    pub matrix: Option<PathBuf>,
    pub out: PathBuf,
    pub image_resolution: usize,
    pub resamples: usize,
    pub level: f64,
    pub design: Design,
    pub n_train: usize,
    pub n_calib: usize,
    pub n_test: usize,
    pub model: ModelKind,
}

fn parse_list<T: std::str::FromStr<Err = Error>>(s: &str) -> Result<Vec<T>> {
    s.split(',').map(str::trim).filter(|t| !t.is_empty()).map(str::parse).collect()
}

fn open_unit(name: &str, x: f64) -> Result<f64> {
    if x > 0.0 && x < 1.0 {
        Ok(x)
    } else {
        Err(Error::Argument(format!("{name} must lie in (0, 1), got {x}")))
    }
}

fn positive(name: &str, x: usize) -> Result<usize> {
    if x > 0 {
        Ok(x)
    } else {
        Err(Error::Argument(format!("{name} must be positive")))
    }
}

impl RunConfig {
    pub fn resolve(a: ConfigArgs, defaults: &Defaults) -> Result<Self> {
        let filtrations: Vec<FiltrationKind> = parse_list(a.filtration.as_deref().unwrap_or("degree"))?;
        if filtrations.is_empty() {
            return Err(Error::Argument("at least one filtration is required".into()));
        }
        let mut unique = filtrations.clone();
        unique.sort();
        unique.dedup();
        if unique.len() != filtrations.len() {
            return Err(Error::Argument("filtrations are listed twice".into()));
        }
        let wasserstein_p = a.wasserstein_p.unwrap_or(1.0);
        if !(wasserstein_p >= 1.0 && wasserstein_p.is_finite()) {
            return Err(Error::Argument(format!("Wasserstein order must be a finite p >= 1, got {wasserstein_p}")));
        }
        let thin_stratum = match a.thin_stratum.as_deref() {
            None => defaults.thin_stratum,
            Some("error") => StratumPolicy::Strict,
            Some("expand") => StratumPolicy::Expand,
            Some(other) => return Err(Error::Argument(format!("thin_stratum must be error or expand, got {other:?}"))),
        };
        let estimate = match a.estimate.as_deref() {
            None | Some("model") => NeighborEstimate::ModelMean,
            Some("label") => NeighborEstimate::LabelMean,
            Some(other) => return Err(Error::Argument(format!("estimate must be model or label, got {other:?}"))),
        };
        let design = match a.design.as_deref() {
            None | Some("m1") => Design::M1,
            Some("m2") => Design::M2,
            Some("m3") => Design::M3,
            Some(other) => return Err(Error::Argument(format!("design must be m1, m2 or m3, got {other:?}"))),
        };
        let model = match a.model.as_deref() {
            None | Some("logistic") => ModelKind::Logistic,
            Some("oracle") => ModelKind::Oracle,
            Some("noisy_oracle") => ModelKind::NoisyOracle,
            Some(other) => return Err(Error::Argument(format!("unknown synthetic model {other:?}"))),
        };
        let level = a.level.unwrap_or(0.95);
        let grid_points = a.grid_points.unwrap_or(DEFAULT_GRID_POINTS);
        if grid_points < 2 {
            return Err(Error::Argument("grid_points must be at least 2".into()));
        }
        Ok(RunConfig {
            dataset: a.dataset,
            name: a.name,
            filtrations,
            wasserstein_p,
            homology: a.homology.as_deref().map(str::parse).transpose()?.unwrap_or_default(),
            k: positive("knn", a.knn.unwrap_or(defaults.knn))?,
            k_train: a.k_train.map(|k| positive("k_train", k)).transpose()?,
            alpha: open_unit("alpha", a.alpha.unwrap_or(0.1))?,
            seed: a.seed.unwrap_or(0),
            repeats: positive("repeats", a.repeats.unwrap_or(defaults.repeats))?,
            mode: a.mode.as_deref().map(str::parse).transpose()?.unwrap_or(BandMode::Conditional),
            split: SplitConfig {
                pool_split: open_unit("pool_split", a.pool_split.unwrap_or(0.8))?,
                calib_split: open_unit("calib_split", a.calib_split.unwrap_or(0.5))?,
                valid_split: 0.0,
            },
            grid_points,
            min_stratum: DEFAULT_MIN_STRATUM,
            thin_stratum,
            estimate,
            scores: a.scores,
            split_file: a.split,
            matrix: a.matrix,
            out: a.out.unwrap_or_else(|| PathBuf::from(".")),
            image_resolution: positive("image_resolution", a.image_resolution.unwrap_or(50))?,
            resamples: positive("resamples", a.resamples.unwrap_or(1000))?,
            level: open_unit("level", level)?,
            design,
            n_train: positive("n_train", a.n_train.unwrap_or(2000))?,
            n_calib: positive("n_calib", a.n_calib.unwrap_or(1000))?,
            n_test: positive("n_test", a.n_test.unwrap_or(500))?,
            model,
        })
    }

    pub fn band_config(&self) -> BandConfig {
        BandConfig {
            k: self.k,
            k_train: self.k_train,
            alpha: self.alpha,
            mode: self.mode,
            min_stratum: self.min_stratum,
            stratum_policy: self.thin_stratum,
            grid_points: self.grid_points,
            estimate: self.estimate,
        }
    }

    pub fn experiment_config(&self) -> ExperimentConfig {
        ExperimentConfig {
            alpha: self.alpha,
            k: self.k,
            reps: self.repeats,
            mode: self.mode,
            grid_points: self.grid_points,
            min_stratum: self.min_stratum,
            stratum_policy: self.thin_stratum,
            estimate: self.estimate,
            ..ExperimentConfig::default()
        }
    }

    pub fn synthetic_spec(&self) -> SyntheticSpec {
        let build = match self.design {
            Design::M1 => SyntheticSpec::m1,
            Design::M2 => SyntheticSpec::m2,
            Design::M3 => SyntheticSpec::m3,
        };
        SyntheticSpec {
            model: self.model,
            ..build(self.n_train, self.n_calib, self.n_test, self.seed)
        }
    }

    /// Dataset directory and file prefix.
    pub fn dataset_location(&self) -> Result<(&Path, String)> {
        let dir = self
            .dataset
            .as_deref()
            .ok_or_else(|| Error::Argument("--dataset is required".into()))?;
        let name = match &self.name {
            Some(n) => n.clone(),
            None => dir
                .file_name()
                .and_then(|s| s.to_str())
                .map(str::to_string)
                .ok_or_else(|| Error::Argument(format!("cannot infer a dataset name from {}", dir.display())))?,
        };
        Ok((dir, name))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serialises")
    }

    /// `version` and `config` comment lines for CSV outputs.
    pub fn provenance_lines(&self) -> Vec<String> {
        vec![format!("version {}", version()), format!("config {}", self.to_json())]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_resolve() {
        let cfg = ConfigArgs::default().load(&Defaults::default()).unwrap();
        assert_eq!(cfg.k, 20);
        assert_eq!(cfg.alpha, 0.1);
        assert_eq!(cfg.filtrations, vec![FiltrationKind::Degree]);
        assert_eq!(cfg.wasserstein_p, 1.0);
        assert_eq!(cfg.mode, BandMode::Conditional);
        assert_eq!(cfg.thin_stratum, StratumPolicy::Strict);
        assert_eq!(cfg.image_resolution, 50);
        assert_eq!(cfg.split.pool_split, 0.8);
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        fs::write(&path, "knn = 30\nalpha = 0.2\nmode = \"exch\"\nfiltration = \"degree,closeness\"\n").unwrap();
        let flags = ConfigArgs {
            config: Some(path),
            alpha: Some(0.05),
            ..Default::default()
        };
        let cfg = flags.load(&Defaults::default()).unwrap();
        assert_eq!(cfg.k, 30);
        assert_eq!(cfg.alpha, 0.05);
        assert_eq!(cfg.mode, BandMode::Exchangeable);
        assert_eq!(cfg.filtrations, vec![FiltrationKind::Degree, FiltrationKind::Closeness]);
    }

    #[test]
    fn unknown_file_key_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        fs::write(&path, "neighbours = 3\n").unwrap();
        assert!(matches!(ConfigArgs::from_file(&path), Err(Error::Parse { .. })));
    }

    #[test]
    fn invalid_values_rejected() {
        let bad = [
            ConfigArgs { alpha: Some(1.0), ..Default::default() },
            ConfigArgs { knn: Some(0), ..Default::default() },
            ConfigArgs { mode: Some("both".into()), ..Default::default() },
            ConfigArgs { filtration: Some("degree,degree".into()), ..Default::default() },
            ConfigArgs { wasserstein_p: Some(0.5), ..Default::default() },
            ConfigArgs { thin_stratum: Some("grow".into()), ..Default::default() },
        ];
        for a in bad {
            assert!(matches!(a.load(&Defaults::default()), Err(Error::Argument(_))));
        }
    }

    #[test]
    fn provenance_carries_config() {
        let cfg = ConfigArgs { knn: Some(7), ..Default::default() }.load(&Defaults::default()).unwrap();
        let lines = cfg.provenance_lines();
        assert!(lines[0].starts_with("version v"));
        assert!(lines[1].contains("\"K\":7"));
    }
}
