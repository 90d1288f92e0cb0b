//! Classifier scores supplied as CSV: `graph_id,label,p0,p1[,p2...]`.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use super::{Graph, Part, SplitAssignment};
use crate::{Error, Result};

const ROW_SUM_TOL: f64 = 1e-6;

/// Per-instance labels and class probability vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredDataset {
    pub labels: Vec<usize>,
    pub probs: Vec<Vec<f64>>,
    pub parts: Option<Vec<Part>>,
}

impl ScoredDataset {
    pub fn new(labels: Vec<usize>, probs: Vec<Vec<f64>>) -> Self {
        assert_eq!(labels.len(), probs.len());
        ScoredDataset {
            labels,
            probs,
            parts: None,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.probs.first().map_or(0, Vec::len)
    }

    /// Probability assigned to class `k` for every instance.
    pub fn class_probs(&self, k: usize) -> Vec<f64> {
        self.probs.iter().map(|p| p[k]).collect()
    }

    /// Binary score: the probability of class 1.
    pub fn positive_probs(&self) -> Vec<f64> {
        self.class_probs(1)
    }

    /// One-vs-rest outcome `1(y == k)`.
    pub fn binarized(&self, k: usize) -> Vec<bool> {
        self.labels.iter().map(|&y| y == k).collect()
    }

    pub fn with_split(mut self, split: &SplitAssignment) -> Self {
        assert_eq!(split.len(), self.len(), "split size does not match dataset");
        self.parts = Some(split.parts().to_vec());
        self
    }
}

/// Loads a score file and checks it against the parsed dataset.
pub fn load_scores(path: impl AsRef<Path>, dataset: &[Graph]) -> Result<ScoredDataset> {
    let file = File::open(path.as_ref())?;
    read_scores(file, Some(dataset))
}

/// Loads a score file without a graph dataset; ids must be exactly `0..n`.
pub fn load_scores_unchecked(path: impl AsRef<Path>) -> Result<ScoredDataset> {
    let file = File::open(path.as_ref())?;
    read_scores(file, None)
}

/// Parses score CSV. `row` in errors is the 1-based line number in the file,
/// the header being line 1.
pub fn read_scores<R: Read>(reader: R, dataset: Option<&[Graph]>) -> Result<ScoredDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| Error::ScoreIngest { row: 1, msg: e.to_string() })?
        .clone();
    let num_classes = header.len().saturating_sub(2);
    let header_ok = header.get(0) == Some("graph_id")
        && header.get(1) == Some("label")
        && num_classes >= 2
        && (0..num_classes).all(|k| header.get(k + 2) == Some(format!("p{k}").as_str()));
    if !header_ok {
        return Err(Error::ScoreIngest {
            row: 1,
            msg: format!("expected header graph_id,label,p0,p1[,p2...], got {:?}", header.iter().collect::<Vec<_>>()),
        });
    }

    let mut rows: Vec<Option<(usize, Vec<f64>)>> = match dataset {
        Some(d) => vec![None; d.len()],
        None => Vec::new(),
    };
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::ScoreIngest {
            row: e.position().map_or(i + 2, |p| p.line() as usize),
            msg: e.to_string(),
        })?;
        let row = record.position().map_or(i + 2, |p| p.line() as usize);
        let bad = |msg: String| Error::ScoreIngest { row, msg };
        if record.len() != num_classes + 2 {
            return Err(bad(format!("expected {} fields, got {}", num_classes + 2, record.len())));
        }
        let id: usize = record[0].parse().map_err(|_| bad(format!("bad graph_id {:?}", &record[0])))?;
        let label: usize = record[1].parse().map_err(|_| bad(format!("bad label {:?}", &record[1])))?;
        if label >= num_classes {
            return Err(bad(format!("label {label} has no probability column")));
        }
        let probs = (0..num_classes)
            .map(|k| {
                record[k + 2]
                    .parse::<f64>()
                    .map_err(|_| bad(format!("bad probability {:?}", &record[k + 2])))
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(bad(format!("probability {p} outside [0, 1]")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOL {
            return Err(bad(format!("probabilities sum to {sum}, expected 1")));
        }
        match dataset {
            Some(d) => {
                let graph = d.get(id).ok_or_else(|| bad(format!("unknown graph_id {id}")))?;
                if graph.label != label {
                    return Err(bad(format!("label {label} does not match dataset label {}", graph.label)));
                }
            }
            None => {
                if id >= rows.len() {
                    rows.resize(id + 1, None);
                }
            }
        }
        if rows[id].is_some() {
            return Err(bad(format!("duplicate graph_id {id}")));
        }
        rows[id] = Some((label, probs));
    }

    if rows.is_empty() {
        return Err(Error::ScoreIngest { row: 1, msg: "no score rows".into() });
    }
    if let Some(missing) = rows.iter().position(Option::is_none) {
        return Err(Error::ScoreIngest {
            row: 0,
            msg: format!("graph_id {missing} has no score row"),
        });
    }
    let (labels, probs) = rows.into_iter().map(Option::unwrap).unzip();
    Ok(ScoredDataset {
        labels,
        probs,
        parts: None,
    })
}
