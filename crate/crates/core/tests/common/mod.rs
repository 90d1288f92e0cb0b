#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use cproc::graphdata::{Part, SplitAssignment, SplitConfig};
use cproc::similarity::{DistanceSource, MatrixSource, SimilarityMatrix};
use cproc::synthetic::{modelled_data, ModelledData, SyntheticSpec};
use cproc::topology::Pair;

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/TINY")
}

/// Minimum of `sum cost^p` over every bijection of the diagonal-augmented
/// point sets, by enumerating all permutations.
pub fn exhaustive_matching_cost(a: &[Pair], b: &[Pair], p: f64) -> f64 {
    let (m, n) = (a.len(), b.len());
    let size = m + n;
    let diag = |x: Pair| (x.1 - x.0) / 2.0;
    let cost = |i: usize, j: usize| -> f64 {
        let c = match (i < m, j < n) {
            (true, true) => (a[i].0 - b[j].0).abs().max((a[i].1 - b[j].1).abs()),
            (true, false) => diag(a[i]),
            (false, true) => diag(b[j]),
            (false, false) => 0.0,
        };
        c.powf(p)
    };
    let mut perm: Vec<usize> = (0..size).collect();
    let mut best = f64::INFINITY;
    permute(&mut perm, 0, &mut |perm| {
        let total: f64 = perm.iter().enumerate().map(|(i, &j)| cost(i, j)).sum();
        best = best.min(total);
    });
    if size == 0 {
        0.0
    } else {
        best
    }
}

fn permute(perm: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == perm.len() {
        visit(perm);
        return;
    }
    for i in k..perm.len() {
        perm.swap(k, i);
        permute(perm, k + 1, visit);
        perm.swap(k, i);
    }
}

pub struct SyntheticFiles {
    pub scores: PathBuf,
    pub matrix: PathBuf,
    pub split: PathBuf,
    pub data: ModelledData,
}

/// Writes a synthetic data set as the three inputs of the `bands` command:
/// score CSV, Euclidean distance matrix CSV and split manifest.
pub fn write_synthetic_inputs(dir: &Path, spec: &SyntheticSpec) -> SyntheticFiles {
    let data = modelled_data(spec, 1e-8, 500).unwrap();
    let scores = dir.join("scores.csv");
    let mut text = String::from("graph_id,label,p0,p1\n");
    for (i, (&y, &p)) in data.data.labels.iter().zip(&data.f_hat).enumerate() {
        text.push_str(&format!("{i},{y},{},{p}\n", 1.0 - p));
    }
    fs::write(&scores, text).unwrap();

    let points = data.distances();
    let m = SimilarityMatrix::from_source(&points, MatrixSource::Euclidean);
    assert_eq!(m.len(), data.data.labels.len());
    let matrix = dir.join("matrix.csv");
    let mut buf = Vec::new();
    m.write_csv(&mut buf).unwrap();
    fs::write(&matrix, buf).unwrap();

    let mut parts = vec![Part::Train; data.data.labels.len()];
    for &i in &data.data.calib {
        parts[i] = Part::Calib;
    }
    for &i in &data.data.test {
        parts[i] = Part::Test;
    }
    let split = dir.join("split.csv");
    let mut buf = Vec::new();
    SplitAssignment::from_parts(parts, 0, SplitConfig::default())
        .write_csv(&mut buf)
        .unwrap();
    fs::write(&split, buf).unwrap();
    SyntheticFiles {
        scores,
        matrix,
        split,
        data,
    }
}
