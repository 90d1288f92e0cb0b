use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::roc::{fraction_above, sorted, trapezoid_area};
use crate::conformal::SoftInterval;
use crate::{Error, Result};

pub const DEFAULT_GRID_POINTS: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BandMode {
    /// Every test instance calibrated on the whole label stratum.
    Exchangeable,
    /// Every test instance calibrated on its K nearest calibration instances.
    Conditional,
}

impl BandMode {
    pub fn as_str(self) -> &'static str {
        match self {
            BandMode::Exchangeable => "exchangeable",
            BandMode::Conditional => "conditional",
        }
    }
}

impl std::fmt::Display for BandMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BandMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exch" | "exchangeable" => Ok(BandMode::Exchangeable),
            "cond" | "conditional" => Ok(BandMode::Conditional),
            _ => Err(Error::Argument(format!("unknown band mode '{s}' (expected exch or cond)"))),
        }
    }
}

/// Point-wise ROC band on a threshold grid.
///
/// `sen_*` bound the true positive rate and `spe_*` bound the false positive
/// rate (the rate among negatives), both as functions of the threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RocBand {
    pub lambda_grid: Vec<f64>,
    pub sen_lo: Vec<f64>,
    pub sen_up: Vec<f64>,
    pub spe_lo: Vec<f64>,
    pub spe_up: Vec<f64>,
    pub mode: Option<BandMode>,
    pub alpha: f64,
    pub auc_lo: f64,
    pub auc_up: f64,
}

impl RocBand {
    /// Builds a band from its four envelopes and derives the AUC interval.
    pub fn from_envelopes(
        lambda_grid: Vec<f64>,
        sen_lo: Vec<f64>,
        sen_up: Vec<f64>,
        spe_lo: Vec<f64>,
        spe_up: Vec<f64>,
        mode: Option<BandMode>,
        alpha: f64,
    ) -> Self {
        let auc_lo = envelope_auc(&spe_up, &sen_lo);
        let auc_up = envelope_auc(&spe_lo, &sen_up);
        RocBand {
            lambda_grid,
            sen_lo,
            sen_up,
            spe_lo,
            spe_up,
            mode,
            alpha,
            auc_lo,
            auc_up,
        }
    }

    pub fn len(&self) -> usize {
        self.lambda_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda_grid.is_empty()
    }

    pub fn mean_bandwidth_sen(&self) -> f64 {
        mean_gap(&self.sen_lo, &self.sen_up)
    }

    pub fn mean_bandwidth_spe(&self) -> f64 {
        mean_gap(&self.spe_lo, &self.spe_up)
    }

    /// Checks ordering, range and monotonicity of the envelopes.
    pub fn validate(&self) -> Result<()> {
        let n = self.lambda_grid.len();
        for (name, v) in [
            ("sen_lo", &self.sen_lo),
            ("sen_up", &self.sen_up),
            ("spe_lo", &self.spe_lo),
            ("spe_up", &self.spe_up),
        ] {
            if v.len() != n {
                return Err(Error::Argument(format!("{name} has {} values for {n} thresholds", v.len())));
            }
            if v.iter().any(|x| !(0.0..=1.0).contains(x)) {
                return Err(Error::Argument(format!("{name} leaves [0, 1]")));
            }
            if v.windows(2).any(|w| w[1] > w[0]) {
                return Err(Error::Argument(format!("{name} increases with the threshold")));
            }
        }
        if self.lambda_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Argument("threshold grid is not strictly ascending".into()));
        }
        for i in 0..n {
            if self.sen_lo[i] > self.sen_up[i] || self.spe_lo[i] > self.spe_up[i] {
                return Err(Error::Argument(format!(
                    "lower envelope above upper at threshold {}",
                    self.lambda_grid[i]
                )));
            }
        }
        Ok(())
    }

    /// `lambda,sen_lo,sen_up,spe_lo,spe_up`, preceded by `# ` comment lines.
    pub fn write_csv<W: Write>(&self, mut w: W, comments: &[String]) -> std::io::Result<()> {
        for c in comments {
            writeln!(w, "# {c}")?;
        }
        writeln!(w, "lambda,sen_lo,sen_up,spe_lo,spe_up")?;
        for i in 0..self.len() {
            writeln!(
                w,
                "{},{},{},{},{}",
                self.lambda_grid[i], self.sen_lo[i], self.sen_up[i], self.spe_lo[i], self.spe_up[i]
            )?;
        }
        Ok(())
    }

    /// Reads the CSV layout of [`RocBand::write_csv`]; mode and alpha are not
    /// stored in the table and come back as `None` and NaN.
    pub fn read_csv<R: BufRead>(r: R) -> Result<RocBand> {
        let file = std::path::PathBuf::from("<band>");
        let mut cols: [Vec<f64>; 5] = Default::default();
        let mut seen_header = false;
        for (idx, line) in r.lines().enumerate() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            if !seen_header {
                if t != "lambda,sen_lo,sen_up,spe_lo,spe_up" {
                    return Err(Error::parse(file, Some(idx + 1), format!("unexpected header '{t}'")));
                }
                seen_header = true;
                continue;
            }
            let fields: Vec<&str> = t.split(',').collect();
            if fields.len() != 5 {
                return Err(Error::parse(file, Some(idx + 1), "expected 5 fields"));
            }
            for (col, f) in cols.iter_mut().zip(&fields) {
                col.push(
                    f.trim()
                        .parse()
                        .map_err(|_| Error::parse(file.clone(), Some(idx + 1), format!("bad number '{f}'")))?,
                );
            }
        }
        if cols[0].is_empty() {
            return Err(Error::parse(file, None, "band file has no rows"));
        }
        let [grid, sen_lo, sen_up, spe_lo, spe_up] = cols;
        Ok(RocBand::from_envelopes(grid, sen_lo, sen_up, spe_lo, spe_up, None, f64::NAN))
    }
}

fn mean_gap(lo: &[f64], up: &[f64]) -> f64 {
    if lo.is_empty() {
        return 0.0;
    }
    lo.iter().zip(up).map(|(l, u)| u - l).sum::<f64>() / lo.len() as f64
}

/// Trapezoidal area under the curve traced by `(fpr[i], tpr[i])` as the
/// threshold decreases, anchored at `(0, 0)` and `(1, 1)`.
pub fn envelope_auc(fpr: &[f64], tpr: &[f64]) -> f64 {
    let mut points = Vec::with_capacity(fpr.len() + 2);
    points.push((0.0, 0.0));
    points.extend(fpr.iter().zip(tpr).rev().map(|(&x, &y)| (x, y)));
    points.push((1.0, 1.0));
    trapezoid_area(&points)
}

/// `points` evenly spaced thresholds on `[0, 1]` plus every interval endpoint
/// inside `[0, 1]`, sorted and deduplicated.
pub fn default_grid(points: usize, intervals: &[SoftInterval]) -> Vec<f64> {
    let mut grid: Vec<f64> = match points {
        0 => Vec::new(),
        1 => vec![0.5],
        _ => (0..points).map(|i| i as f64 / (points - 1) as f64).collect(),
    };
    for iv in intervals {
        for v in [iv.lo, iv.up] {
            if (0.0..=1.0).contains(&v) {
                grid.push(v);
            }
        }
    }
    grid.sort_unstable_by(f64::total_cmp);
    grid.dedup();
    grid
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Argument("empty threshold grid".into()));
    }
    if grid.iter().any(|l| !(0.0..=1.0).contains(l)) {
        return Err(Error::Argument("threshold grid leaves [0, 1]".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Argument("threshold grid is not strictly ascending".into()));
    }
    Ok(())
}

/// Assembles the band from per-instance intervals of the positive and the
/// negative test instances.
///
/// At threshold `lambda`, `sen_lo` is the fraction of positive intervals whose
/// lower end exceeds `lambda` and `sen_up` the fraction whose upper end does;
/// `spe_lo`/`spe_up` do the same over negatives.
pub fn band_from_intervals(
    intervals_pos: &[SoftInterval],
    intervals_neg: &[SoftInterval],
    lambda_grid: &[f64],
    alpha: f64,
    mode: BandMode,
) -> Result<RocBand> {
    if intervals_pos.is_empty() || intervals_neg.is_empty() {
        return Err(Error::DegenerateTest(format!(
            "{} positive and {} negative test intervals; both classes are required",
            intervals_pos.len(),
            intervals_neg.len()
        )));
    }
    check_grid(lambda_grid)?;
    let envelope = |ivs: &[SoftInterval], upper: bool| -> Vec<f64> {
        let ends = sorted(ivs.iter().map(|iv| if upper { iv.up } else { iv.lo }));
        lambda_grid.iter().map(|&l| fraction_above(&ends, l)).collect()
    };
    Ok(RocBand::from_envelopes(
        lambda_grid.to_vec(),
        envelope(intervals_pos, false),
        envelope(intervals_pos, true),
        envelope(intervals_neg, false),
        envelope(intervals_neg, true),
        Some(mode),
        alpha,
    ))
}

/// Whether `value` lies in the band's envelope pair at grid index `i`.
pub fn covers(lo: &[f64], up: &[f64], i: usize, value: f64) -> bool {
    lo[i] <= value && value <= up[i]
}
