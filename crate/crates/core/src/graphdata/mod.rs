//! Graph datasets: the in-memory graph type, TU benchmark IO, deterministic
//! train/valid/calib/test splits and externally produced classifier scores.

mod scores;
mod split;
mod tu;

pub use scores::{load_scores, load_scores_unchecked, read_scores, ScoredDataset};
pub use split::{split_dataset, split_dataset_with, Part, SplitAssignment, SplitConfig};
pub use tu::{parse_tu_dataset, write_tu_dataset, TuDataset};

use std::collections::VecDeque;

/// Simple undirected graph with an integer class label.
///
/// Node indices are 0-based. Edges are stored once as `(u, v)` with `u < v`,
/// sorted, without duplicates or self-loops.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    pub id: usize,
    pub num_nodes: usize,
    pub edges: Vec<(usize, usize)>,
    pub node_labels: Option<Vec<i64>>,
    pub node_attributes: Option<Vec<Vec<f64>>>,
    pub label: usize,
}

impl Graph {
    /// Builds a graph from an arbitrary edge list.
    ///
    /// Reversed and repeated edges collapse into one undirected edge and
    /// self-loops are dropped. Panics if an endpoint is out of range.
    pub fn new(id: usize, num_nodes: usize, edges: impl IntoIterator<Item = (usize, usize)>, label: usize) -> Self {
        let (edges, _) = normalize_edges(num_nodes, edges);
        Graph {
            id,
            num_nodes,
            edges,
            node_labels: None,
            node_attributes: None,
            label,
        }
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Adjacency lists, neighbours in ascending order.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.num_nodes];
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    /// Connected component id per node; ids are assigned in order of the
    /// smallest node in each component.
    pub fn components(&self) -> (usize, Vec<usize>) {
        let adj = self.adjacency();
        let mut comp = vec![usize::MAX; self.num_nodes];
        let mut count = 0;
        let mut queue = VecDeque::new();
        for start in 0..self.num_nodes {
            if comp[start] != usize::MAX {
                continue;
            }
            comp[start] = count;
            queue.push_back(start);
            while let Some(u) = queue.pop_front() {
                for &v in &adj[u] {
                    if comp[v] == usize::MAX {
                        comp[v] = count;
                        queue.push_back(v);
                    }
                }
            }
            count += 1;
        }
        (count, comp)
    }

    pub fn num_components(&self) -> usize {
        self.components().0
    }
}

/// Canonicalises an undirected edge list, returning it with the number of
/// self-loops that were dropped.
pub(crate) fn normalize_edges(
    num_nodes: usize,
    edges: impl IntoIterator<Item = (usize, usize)>,
) -> (Vec<(usize, usize)>, usize) {
    let mut self_loops = 0;
    let mut out: Vec<(usize, usize)> = edges
        .into_iter()
        .filter_map(|(u, v)| {
            assert!(u < num_nodes && v < num_nodes, "edge ({u}, {v}) out of range for {num_nodes} nodes");
            if u == v {
                self_loops += 1;
                None
            } else {
                Some((u.min(v), u.max(v)))
            }
        })
        .collect();
    out.sort_unstable();
    out.dedup();
    (out, self_loops)
}
