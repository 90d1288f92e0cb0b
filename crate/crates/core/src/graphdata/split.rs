use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Which of the four disjoint parts an instance belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Part {
    Train,
    Valid,
    Calib,
    Test,
}

impl Part {
    pub fn as_str(self) -> &'static str {
        match self {
            Part::Train => "train",
            Part::Valid => "valid",
            Part::Calib => "calib",
            Part::Test => "test",
        }
    }
}

impl fmt::Display for Part {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Part {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Part::Train),
            "valid" => Ok(Part::Valid),
            "calib" => Ok(Part::Calib),
            "test" => Ok(Part::Test),
            other => Err(Error::Argument(format!("unknown split part {other:?}"))),
        }
    }
}

/// Split ratios.
///
/// `pool_split` is the training share; the remaining pool is divided into
/// calibration (`calib_split`) and test. `valid_split` carves a validation
/// part out of the training share and defaults to zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub pool_split: f64,
    pub calib_split: f64,
    pub valid_split: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            pool_split: 0.8,
            calib_split: 0.5,
            valid_split: 0.0,
        }
    }
}

// Guards floor() against products such as 0.7 * 10 = 6.999999999999999.
const FLOOR_SLACK: f64 = 1e-9;

fn floor_share(n: usize, fraction: f64) -> usize {
    ((n as f64 * fraction) + FLOOR_SLACK).floor() as usize
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitAssignment {
    parts: Vec<Part>,
    pub seed: u64,
    pub config: SplitConfig,
}

impl SplitAssignment {
    /// Wraps an explicit assignment.
    pub fn from_parts(parts: Vec<Part>, seed: u64, config: SplitConfig) -> Self {
        SplitAssignment { parts, seed, config }
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn part(&self, id: usize) -> Part {
        self.parts[id]
    }

    pub fn parts(&self) -> &[Part] {
        &self.parts
    }

    /// Ids of `part` in ascending order.
    pub fn ids(&self, part: Part) -> Vec<usize> {
        self.parts
            .iter()
            .enumerate()
            .filter(|(_, p)| **p == part)
            .map(|(i, _)| i)
            .collect()
    }

    /// Sizes as `(train, valid, calib, test)`.
    pub fn sizes(&self) -> (usize, usize, usize, usize) {
        let mut s = (0, 0, 0, 0);
        for p in &self.parts {
            match p {
                Part::Train => s.0 += 1,
                Part::Valid => s.1 += 1,
                Part::Calib => s.2 += 1,
                Part::Test => s.3 += 1,
            }
        }
        s
    }

    /// Re-divides the calibration+test pool with a new seed, keeping the
    /// training and validation parts fixed.
    pub fn resplit_pool(&self, seed: u64) -> Result<SplitAssignment> {
        let mut pool: Vec<usize> = self
            .parts
            .iter()
            .enumerate()
            .filter(|(_, p)| matches!(p, Part::Calib | Part::Test))
            .map(|(i, _)| i)
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        pool.shuffle(&mut rng);
        let n_calib = floor_share(pool.len(), self.config.calib_split);
        if n_calib == 0 || n_calib == pool.len() {
            return Err(Error::Split(format!(
                "pool of {} cannot be divided with calib_split {}",
                pool.len(),
                self.config.calib_split
            )));
        }
        let mut parts = self.parts.clone();
        for (rank, &id) in pool.iter().enumerate() {
            parts[id] = if rank < n_calib { Part::Calib } else { Part::Test };
        }
        Ok(SplitAssignment {
            parts,
            seed,
            config: self.config,
        })
    }

    /// Reads a `graph_id,part` manifest; ids must cover `0..n` exactly once.
    /// The seed and ratios are not stored and come back as given.
    pub fn read_csv<R: std::io::Read>(r: R, seed: u64, config: SplitConfig) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(r);
        let bad = |line: usize, msg: String| Error::Split(format!("manifest line {line}: {msg}"));
        let mut parts: Vec<Option<Part>> = Vec::new();
        for (i, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| bad(i + 2, e.to_string()))?;
            let line = record.position().map_or(i + 2, |p| p.line() as usize);
            if record.len() != 2 {
                return Err(bad(line, format!("expected 2 fields, got {}", record.len())));
            }
            let id: usize = record[0].parse().map_err(|_| bad(line, format!("bad graph_id {:?}", &record[0])))?;
            let part: Part = record[1].parse()?;
            if id >= parts.len() {
                parts.resize(id + 1, None);
            }
            if parts[id].replace(part).is_some() {
                return Err(bad(line, format!("graph {id} listed twice")));
            }
        }
        let parts = parts
            .into_iter()
            .enumerate()
            .map(|(id, p)| p.ok_or_else(|| Error::Split(format!("graph {id} missing from manifest"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(SplitAssignment { parts, seed, config })
    }

    /// Writes the `graph_id,part` manifest.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "graph_id,part")?;
        for (id, p) in self.parts.iter().enumerate() {
            writeln!(w, "{id},{p}")?;
        }
        Ok(())
    }
}

/// Splits `n` instances with the default validation share of zero.
pub fn split_dataset(n: usize, seed: u64, pool_split: f64, calib_split: f64) -> Result<SplitAssignment> {
    split_dataset_with(
        n,
        seed,
        &SplitConfig {
            pool_split,
            calib_split,
            valid_split: 0.0,
        },
    )
}

/// Seeded split into train/valid/calib/test.
///
/// Sizes: `train = floor(n * pool_split)`, of which `floor(train * valid_split)`
/// become validation; the remainder gives `calib = floor(rest * calib_split)`
/// and the rest is test. Membership is drawn by a ChaCha8 shuffle of `0..n`.
pub fn split_dataset_with(n: usize, seed: u64, config: &SplitConfig) -> Result<SplitAssignment> {
    let open_unit = |x: f64| x > 0.0 && x < 1.0;
    if !open_unit(config.pool_split) || !open_unit(config.calib_split) {
        return Err(Error::Split(format!(
            "fractions must lie in (0, 1), got pool_split={} calib_split={}",
            config.pool_split, config.calib_split
        )));
    }
    if !(0.0..1.0).contains(&config.valid_split) {
        return Err(Error::Split(format!("valid_split must lie in [0, 1), got {}", config.valid_split)));
    }
    if n < 4 {
        return Err(Error::Split(format!("need at least 4 instances, got {n}")));
    }

    let n_train_total = floor_share(n, config.pool_split);
    let n_valid = floor_share(n_train_total, config.valid_split);
    let n_train = n_train_total - n_valid;
    let rest = n - n_train_total;
    let n_calib = floor_share(rest, config.calib_split);
    let n_test = rest - n_calib;
    if n_train == 0 || n_calib == 0 || n_test == 0 || (config.valid_split > 0.0 && n_valid == 0) {
        return Err(Error::Split(format!(
            "empty part: train={n_train} valid={n_valid} calib={n_calib} test={n_test}"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let mut parts = vec![Part::Train; n];
    for (rank, &id) in order.iter().enumerate() {
        parts[id] = if rank < n_valid {
            Part::Valid
        } else if rank < n_train_total {
            Part::Train
        } else if rank < n_train_total + n_calib {
            Part::Calib
        } else {
            Part::Test
        };
    }
    Ok(SplitAssignment {
        parts,
        seed,
        config: *config,
    })
}
