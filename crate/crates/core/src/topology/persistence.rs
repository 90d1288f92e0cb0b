//! Sublevel-set persistent homology of graphs in dimensions 0 and 1.

use std::cmp::Ordering;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::graphdata::Graph;
use crate::{Error, Result};

/// A (birth, death) pair; essential classes have `death == f64::INFINITY`.
pub type Pair = (f64, f64);

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PersistenceDiagram {
    pub graph_id: usize,
    pub dim0: Vec<Pair>,
    pub dim1: Vec<Pair>,
}

/// Which homology dimensions enter distances and images.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HomologyDims {
    Zero,
    One,
    #[default]
    Both,
}

impl FromStr for HomologyDims {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "0" | "zero" => Ok(HomologyDims::Zero),
            "1" | "one" => Ok(HomologyDims::One),
            "both" | "01" => Ok(HomologyDims::Both),
            other => Err(Error::Argument(format!("unknown homology selection {other:?}"))),
        }
    }
}

impl fmt::Display for HomologyDims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HomologyDims::Zero => "0",
            HomologyDims::One => "1",
            HomologyDims::Both => "both",
        })
    }
}

fn pair_order(a: &Pair, b: &Pair) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1))
}

impl PersistenceDiagram {
    /// Sorts both dimensions by (birth, death).
    pub fn canonicalize(&mut self) {
        self.dim0.sort_by(pair_order);
        self.dim1.sort_by(pair_order);
    }

    pub fn is_empty(&self) -> bool {
        self.dim0.is_empty() && self.dim1.is_empty()
    }

    /// Largest finite birth or death value, if any.
    pub fn max_finite_value(&self) -> Option<f64> {
        self.dim0
            .iter()
            .chain(&self.dim1)
            .flat_map(|&(b, d)| [b, d])
            .filter(|x| x.is_finite())
            .reduce(f64::max)
    }

    /// The finite diagram compared between graphs: the finite dimension-0
    /// pairs and the dimension-1 pairs with infinite deaths replaced by `cap`,
    /// restricted to `dims`. Essential dimension-0 classes are dropped.
    pub fn prepared(&self, dims: HomologyDims, cap: f64) -> PersistenceDiagram {
        let dim0 = if dims == HomologyDims::One {
            Vec::new()
        } else {
            self.dim0.iter().copied().filter(|p| p.1.is_finite()).collect()
        };
        let dim1 = if dims == HomologyDims::Zero {
            Vec::new()
        } else {
            self.dim1
                .iter()
                .map(|&(b, d)| (b, if d.is_finite() { d } else { cap.max(b) }))
                .collect()
        };
        PersistenceDiagram {
            graph_id: self.graph_id,
            dim0,
            dim1,
        }
    }
}

/// Union-find keyed by vertex with the oldest vertex of each component kept
/// at the root: (value, id) ascending decides age.
struct ElderForest<'a> {
    parent: Vec<usize>,
    values: &'a [f64],
}

impl<'a> ElderForest<'a> {
    fn new(values: &'a [f64]) -> Self {
        ElderForest {
            parent: (0..values.len()).collect(),
            values,
        }
    }

    fn find(&mut self, mut v: usize) -> usize {
        let mut root = v;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[v] != root {
            let next = self.parent[v];
            self.parent[v] = root;
            v = next;
        }
        root
    }

    fn older(&self, a: usize, b: usize) -> bool {
        match self.values[a].total_cmp(&self.values[b]) {
            Ordering::Less => true,
            Ordering::Greater => false,
            Ordering::Equal => a < b,
        }
    }

    /// Merges two roots, returning the root that dies.
    fn merge(&mut self, a: usize, b: usize) -> usize {
        let (survivor, dying) = if self.older(a, b) { (a, b) } else { (b, a) };
        self.parent[dying] = survivor;
        dying
    }
}

/// Persistence of the sublevel filtration induced by `values`.
///
/// Vertex `v` enters at `values[v]`, edge `(u, v)` at `max(values[u], values[v])`.
/// Every vertex yields one dimension-0 pair: either `(birth, merge value)` when
/// its component is absorbed by an older one, or `(birth, inf)` if it remains
/// the oldest vertex of its component. Every edge closing a cycle yields a
/// dimension-1 pair `(edge value, inf)`. Zero-persistence pairs are kept.
pub fn sublevel_persistence(g: &Graph, values: &[f64]) -> Result<PersistenceDiagram> {
    if values.len() != g.num_nodes {
        return Err(Error::Argument(format!(
            "{} filtration values for {} vertices",
            values.len(),
            g.num_nodes
        )));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::Argument(format!("non-finite filtration value {v}")));
    }

    let mut edges: Vec<(f64, usize, usize)> = g
        .edges
        .iter()
        .map(|&(u, v)| (values[u].max(values[v]), u, v))
        .collect();
    edges.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2))));

    let mut forest = ElderForest::new(values);
    let mut diagram = PersistenceDiagram {
        graph_id: g.id,
        dim0: Vec::with_capacity(g.num_nodes),
        dim1: Vec::new(),
    };
    for (value, u, v) in edges {
        let (ru, rv) = (forest.find(u), forest.find(v));
        if ru == rv {
            diagram.dim1.push((value, f64::INFINITY));
        } else {
            let dying = forest.merge(ru, rv);
            diagram.dim0.push((values[dying], value));
        }
    }
    for v in 0..g.num_nodes {
        if forest.find(v) == v {
            diagram.dim0.push((values[v], f64::INFINITY));
        }
    }
    diagram.canonicalize();
    Ok(diagram)
}

fn fmt_value(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".to_string()
    } else {
        x.to_string()
    }
}

/// Writes diagrams as `graph_id,dim,birth,death` rows, `inf` for essential deaths.
pub fn write_diagrams_csv<W: Write>(mut w: W, diagrams: &[PersistenceDiagram]) -> std::io::Result<()> {
    writeln!(w, "graph_id,dim,birth,death")?;
    for d in diagrams {
        for (dim, pairs) in [(0, &d.dim0), (1, &d.dim1)] {
            for &(b, death) in pairs {
                writeln!(w, "{},{dim},{},{}", d.graph_id, fmt_value(b), fmt_value(death))?;
            }
        }
    }
    Ok(())
}

/// Reads diagrams written by [`write_diagrams_csv`] for graphs `0..num_graphs`.
/// Lines starting with `#` are skipped.
pub fn read_diagrams_csv<R: BufRead>(r: R, num_graphs: usize) -> Result<Vec<PersistenceDiagram>> {
    let mut out: Vec<PersistenceDiagram> = (0..num_graphs)
        .map(|graph_id| PersistenceDiagram {
            graph_id,
            ..Default::default()
        })
        .collect();
    let mut seen_header = false;
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !seen_header {
            seen_header = true;
            if line != "graph_id,dim,birth,death" {
                return Err(Error::parse("diagrams", Some(i + 1), "bad header"));
            }
            continue;
        }
        let bad = |msg: &str| Error::parse("diagrams", Some(i + 1), msg.to_string());
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(bad("expected 4 fields"));
        }
        let id: usize = fields[0].parse().map_err(|_| bad("bad graph_id"))?;
        let dim: usize = fields[1].parse().map_err(|_| bad("bad dim"))?;
        let b: f64 = fields[2].parse().map_err(|_| bad("bad birth"))?;
        let d: f64 = fields[3].parse().map_err(|_| bad("bad death"))?;
        let diagram = out.get_mut(id).ok_or_else(|| bad("graph_id out of range"))?;
        match dim {
            0 => diagram.dim0.push((b, d)),
            1 => diagram.dim1.push((b, d)),
            _ => return Err(bad("dimension must be 0 or 1")),
        }
    }
    for d in &mut out {
        d.canonicalize();
    }
    Ok(out)
}
