//! Dense symmetric distance matrices and their on-disk cache format.
//!
//! Binary layout, little endian:
//!
//! | bytes      | content                                             |
//! |------------|-----------------------------------------------------|
//! | 8          | magic `CPROCSM1`                                    |
//! | 8          | `n` as u64                                          |
//! | 8          | `p` as f64                                          |
//! | 32         | SHA-256 of `key ‖ payload`                          |
//! | 8 * n * n  | payload, row-major f64                              |
//! | 8          | trailer length `t` as u64                           |
//! | t          | trailer, UTF-8 JSON (`meta` plus run provenance)    |

use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::wasserstein::diagram_cost;
use super::DistanceSource;
use crate::topology::{FiltrationKind, HomologyDims, PersistenceDiagram};
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"CPROCSM1";
const HEADER_LEN: usize = 8 + 8 + 8 + 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MatrixSource {
    Wasserstein {
        p: f64,
        filtrations: Vec<FiltrationKind>,
        cap: f64,
        dims: HomologyDims,
    },
    Euclidean,
    Custom,
}

impl MatrixSource {
    fn order(&self) -> f64 {
        match self {
            MatrixSource::Wasserstein { p, .. } => *p,
            MatrixSource::Euclidean => 2.0,
            MatrixSource::Custom => f64::NAN,
        }
    }
}

/// Symmetric, non-negative, zero-diagonal distance table.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    n: usize,
    values: Vec<f64>,
    pub source: MatrixSource,
}

impl DistanceSource for SimilarityMatrix {
    fn len(&self) -> usize {
        self.n
    }

    fn distance(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }
}

impl SimilarityMatrix {
    /// Fills the upper triangle from `f` and mirrors it.
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let v = f(i, j);
                values[i * n + j] = v;
                values[j * n + i] = v;
            }
        }
        SimilarityMatrix {
            n,
            values,
            source: MatrixSource::Custom,
        }
    }

    /// Materialises any distance source.
    pub fn from_source<D: DistanceSource + ?Sized>(d: &D, source: MatrixSource) -> Self {
        let mut m = Self::from_fn(d.len(), |i, j| d.distance(i, j));
        m.source = source;
        m
    }

    pub fn from_row_major(n: usize, values: Vec<f64>, source: MatrixSource) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::Argument(format!("{} values for a {n}x{n} matrix", values.len())));
        }
        let m = SimilarityMatrix { n, values, source };
        m.validate()?;
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    /// Checks symmetry, zero diagonal, finiteness and non-negativity.
    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        for i in 0..n {
            if self.values[i * n + i] != 0.0 {
                return Err(Error::Argument(format!("non-zero diagonal at {i}")));
            }
            for j in (i + 1)..n {
                let v = self.values[i * n + j];
                if !v.is_finite() || v < 0.0 || v != self.values[j * n + i] {
                    return Err(Error::Argument(format!("invalid or asymmetric entry at ({i}, {j})")));
                }
            }
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for i in 0..self.n {
            let row: Vec<String> = self.row(i).iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    /// Reads the square CSV layout of [`SimilarityMatrix::write_csv`]; blank
    /// lines and lines starting with `#` are skipped.
    pub fn read_csv<R: std::io::BufRead>(r: R) -> Result<Self> {
        let file = std::path::PathBuf::from("<matrix>");
        let mut values = Vec::new();
        let mut rows = 0;
        let mut width = None;
        for (idx, line) in r.lines().enumerate() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let row = t
                .split(',')
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::parse(file.clone(), Some(idx + 1), e.to_string()))?;
            if *width.get_or_insert(row.len()) != row.len() {
                return Err(Error::parse(file, Some(idx + 1), "rows differ in length"));
            }
            values.extend(row);
            rows += 1;
        }
        if rows == 0 || width != Some(rows) {
            return Err(Error::parse(file, None, format!("expected a non-empty square matrix, got {rows} rows")));
        }
        Self::from_row_major(rows, values, MatrixSource::Custom)
    }

    fn payload(&self) -> Vec<u8> {
        self.values.iter().flat_map(|v| v.to_le_bytes()).collect()
    }

    /// Serialises to the binary cache format. `key` identifies the inputs the
    /// matrix was computed from; `provenance` is embedded in the trailer.
    pub fn to_bytes(&self, key: &[u8], provenance: &serde_json::Value) -> Vec<u8> {
        let payload = self.payload();
        let mut hasher = Sha256::new();
        hasher.update(key);
        hasher.update(&payload);
        let hash = hasher.finalize();
        let trailer = serde_json::to_vec(&serde_json::json!({
            "meta": self.source,
            "provenance": provenance,
        }))
        .expect("trailer serialises");

        let mut out = Vec::with_capacity(HEADER_LEN + payload.len() + 8 + trailer.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.n as u64).to_le_bytes());
        out.extend_from_slice(&self.source.order().to_le_bytes());
        out.extend_from_slice(&hash);
        out.extend_from_slice(&payload);
        out.extend_from_slice(&(trailer.len() as u64).to_le_bytes());
        out.extend_from_slice(&trailer);
        out
    }

    /// Parses the binary format. `key` must match the one used when writing;
    /// any mismatch or truncation is reported as [`CacheStatus::Corrupt`].
    pub fn from_bytes(bytes: &[u8], key: &[u8]) -> CacheStatus {
        let corrupt = |why: &str| CacheStatus::Corrupt(why.to_string());
        if bytes.len() < HEADER_LEN || &bytes[..8] != MAGIC {
            return corrupt("bad magic or short header");
        }
        let u64_at = |off: usize| u64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
        let n = u64_at(8) as usize;
        let Some(payload_len) = n.checked_mul(n).and_then(|x| x.checked_mul(8)) else {
            return corrupt("bad size");
        };
        let payload_end = HEADER_LEN + payload_len;
        if bytes.len() < payload_end + 8 {
            return corrupt("truncated payload");
        }
        let payload = &bytes[HEADER_LEN..payload_end];
        let mut hasher = Sha256::new();
        hasher.update(key);
        hasher.update(payload);
        if hasher.finalize().as_slice() != &bytes[24..56] {
            return corrupt("hash mismatch");
        }
        let trailer_len = u64_at(payload_end) as usize;
        let Some(trailer) = bytes.get(payload_end + 8..payload_end + 8 + trailer_len) else {
            return corrupt("truncated trailer");
        };
        let source = match serde_json::from_slice::<serde_json::Value>(trailer)
            .ok()
            .and_then(|v| serde_json::from_value::<MatrixSource>(v["meta"].clone()).ok())
        {
            Some(s) => s,
            None => return corrupt("unreadable trailer"),
        };
        let values = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        match SimilarityMatrix::from_row_major(n, values, source) {
            Ok(m) => CacheStatus::Hit(m),
            Err(e) => CacheStatus::Corrupt(e.to_string()),
        }
    }

    pub fn write_file(&self, path: impl AsRef<Path>, key: &[u8], provenance: &serde_json::Value) -> Result<()> {
        fs::write(path, self.to_bytes(key, provenance))?;
        Ok(())
    }

    pub fn read_file(path: impl AsRef<Path>, key: &[u8]) -> Result<CacheStatus> {
        match fs::read(path) {
            Ok(bytes) => Ok(Self::from_bytes(&bytes, key)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(CacheStatus::Missing),
            Err(e) => Err(e.into()),
        }
    }
}

#[derive(Debug)]
pub enum CacheStatus {
    Hit(SimilarityMatrix),
    Missing,
    Corrupt(String),
}

/// Pairwise Wasserstein matrix over one set of prepared diagrams.
pub fn build_similarity_matrix(diagrams: &[PersistenceDiagram], p: f64) -> SimilarityMatrix {
    build_combined_matrix(&[diagrams], p)
}

/// Pairwise distances over several diagram sets (one per filtration),
/// `D[i][j] = (sum_f W_p(f)^p)^(1/p)`. With one set this is exactly
/// [`super::wasserstein_distance`].
pub fn build_combined_matrix(sets: &[&[PersistenceDiagram]], p: f64) -> SimilarityMatrix {
    let n = sets.first().map_or(0, |s| s.len());
    assert!(sets.iter().all(|s| s.len() == n), "diagram sets differ in length");
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            ((i + 1)..n)
                .map(|j| {
                    let cost = sets.iter().fold(0.0, |acc, s| acc + diagram_cost(&s[i], &s[j], p));
                    cost.powf(1.0 / p)
                })
                .collect()
        })
        .collect();
    let mut values = vec![0.0; n * n];
    for (i, row) in upper.iter().enumerate() {
        for (off, &v) in row.iter().enumerate() {
            let j = i + 1 + off;
            values[i * n + j] = v;
            values[j * n + i] = v;
        }
    }
    SimilarityMatrix {
        n,
        values,
        source: MatrixSource::Custom,
    }
}
