//! Vertex functions used to filter a graph.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::graphdata::Graph;
use crate::{Error, Result};

const POWER_TOL: f64 = 1e-10;
const POWER_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FiltrationKind {
    Degree,
    Betweenness,
    Closeness,
    Communicability,
    Eigenvector,
}

impl FiltrationKind {
    pub const ALL: [FiltrationKind; 5] = [
        FiltrationKind::Degree,
        FiltrationKind::Betweenness,
        FiltrationKind::Closeness,
        FiltrationKind::Communicability,
        FiltrationKind::Eigenvector,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FiltrationKind::Degree => "degree",
            FiltrationKind::Betweenness => "betweenness",
            FiltrationKind::Closeness => "closeness",
            FiltrationKind::Communicability => "communicability",
            FiltrationKind::Eigenvector => "eigenvector",
        }
    }
}

impl fmt::Display for FiltrationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FiltrationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FiltrationKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Argument(format!("unknown filtration {s:?}")))
    }
}

/// Evaluates the filtration function `kind` on every vertex of `g`.
///
/// - degree: number of incident edges;
/// - betweenness: unnormalised shortest-path betweenness, each unordered pair
///   of endpoints counted once and split evenly among its shortest paths;
/// - closeness: harmonic closeness `sum_{u != v} 1 / d(u, v)`;
/// - communicability: subgraph centrality `exp(A)[v][v]`;
/// - eigenvector: principal eigenvector of each component, unit L2 norm per
///   component, isolated vertices 0.
pub fn compute_filtration(g: &Graph, kind: FiltrationKind) -> Result<Vec<f64>> {
    if g.num_nodes == 0 {
        return Err(Error::Argument(format!("graph {} has no vertices", g.id)));
    }
    let adj = g.adjacency();
    Ok(match kind {
        FiltrationKind::Degree => adj.iter().map(|n| n.len() as f64).collect(),
        FiltrationKind::Betweenness => betweenness(&adj),
        FiltrationKind::Closeness => harmonic_closeness(&adj),
        FiltrationKind::Communicability => subgraph_centrality(g, &adj),
        FiltrationKind::Eigenvector => eigenvector(g, &adj)?,
    })
}

fn bfs_distances(adj: &[Vec<usize>], source: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; adj.len()];
    dist[source] = 0;
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    dist
}

fn harmonic_closeness(adj: &[Vec<usize>]) -> Vec<f64> {
    (0..adj.len())
        .map(|v| {
            bfs_distances(adj, v)
                .into_iter()
                .filter(|&d| d != 0 && d != usize::MAX)
                .map(|d| 1.0 / d as f64)
                .sum()
        })
        .collect()
}

// Brandes' accumulation over unit-weight BFS trees.
fn betweenness(adj: &[Vec<usize>]) -> Vec<f64> {
    let n = adj.len();
    let mut centrality = vec![0.0; n];
    let mut stack = Vec::with_capacity(n);
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut sigma = vec![0.0f64; n];
    let mut dist = vec![usize::MAX; n];
    let mut delta = vec![0.0f64; n];
    let mut queue = VecDeque::new();
    for s in 0..n {
        stack.clear();
        for p in preds.iter_mut() {
            p.clear();
        }
        sigma.fill(0.0);
        dist.fill(usize::MAX);
        delta.fill(0.0);
        sigma[s] = 1.0;
        dist[s] = 0;
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            stack.push(u);
            for &v in &adj[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
                if dist[v] == dist[u] + 1 {
                    sigma[v] += sigma[u];
                    preds[v].push(u);
                }
            }
        }
        while let Some(w) = stack.pop() {
            for &u in &preds[w] {
                delta[u] += sigma[u] / sigma[w] * (1.0 + delta[w]);
            }
            if w != s {
                centrality[w] += delta[w];
            }
        }
    }
    // Every unordered pair was visited from both ends.
    centrality.iter_mut().for_each(|c| *c /= 2.0);
    centrality
}

fn component_members(g: &Graph) -> Vec<Vec<usize>> {
    let (count, comp) = g.components();
    let mut members = vec![Vec::new(); count];
    for (v, &c) in comp.iter().enumerate() {
        members[c].push(v);
    }
    members
}

fn dense_adjacency(members: &[usize], adj: &[Vec<usize>]) -> DMatrix<f64> {
    let m = members.len();
    let mut local = vec![usize::MAX; adj.len()];
    for (i, &v) in members.iter().enumerate() {
        local[v] = i;
    }
    let mut a = DMatrix::zeros(m, m);
    for (i, &v) in members.iter().enumerate() {
        for &u in &adj[v] {
            a[(i, local[u])] = 1.0;
        }
    }
    a
}

// exp(A) is block diagonal over components, so each block is diagonalised
// separately: exp(A)[v][v] = sum_k V[v][k]^2 exp(lambda_k).
fn subgraph_centrality(g: &Graph, adj: &[Vec<usize>]) -> Vec<f64> {
    let mut out = vec![1.0; g.num_nodes];
    for members in component_members(g) {
        if members.len() == 1 {
            continue;
        }
        let eig = SymmetricEigen::new(dense_adjacency(&members, adj));
        for (i, &v) in members.iter().enumerate() {
            out[v] = eig
                .eigenvalues
                .iter()
                .enumerate()
                .map(|(k, &lambda)| eig.eigenvectors[(i, k)].powi(2) * lambda.exp())
                .sum();
        }
    }
    out
}

// Power iteration on A + I: the shift keeps the spectrum positive so
// bipartite components (two dominant eigenvalues of equal modulus in A)
// still converge.
fn eigenvector(g: &Graph, adj: &[Vec<usize>]) -> Result<Vec<f64>> {
    let mut out = vec![0.0; g.num_nodes];
    for members in component_members(g) {
        let m = members.len();
        if m == 1 {
            continue;
        }
        let mut local = vec![usize::MAX; g.num_nodes];
        for (i, &v) in members.iter().enumerate() {
            local[v] = i;
        }
        let mut x = vec![1.0 / (m as f64).sqrt(); m];
        let mut next = vec![0.0; m];
        let mut converged = false;
        for _ in 0..POWER_MAX_ITER {
            for (i, &v) in members.iter().enumerate() {
                next[i] = x[i] + adj[v].iter().map(|&u| x[local[u]]).sum::<f64>();
            }
            let norm = next.iter().map(|y| y * y).sum::<f64>().sqrt();
            next.iter_mut().for_each(|y| *y /= norm);
            let change = x.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            std::mem::swap(&mut x, &mut next);
            if change < POWER_TOL {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::numerical(
                "eigenvector",
                format!(
                    "power iteration did not converge in {POWER_MAX_ITER} iterations (graph {}, component of {m} vertices)",
                    g.id
                ),
            ));
        }
        for (i, &v) in members.iter().enumerate() {
            out[v] = x[i];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> Graph {
        Graph::new(0, 3, [(0, 1), (1, 2)], 0)
    }

    fn triangle() -> Graph {
        Graph::new(0, 3, [(0, 1), (1, 2), (0, 2)], 0)
    }

    /// Counts, for every vertex, the fraction of shortest paths through it,
    /// summed over unordered endpoint pairs, by enumerating every path.
    fn brute_force_betweenness(g: &Graph) -> Vec<f64> {
        let adj = g.adjacency();
        let n = g.num_nodes;
        let mut out = vec![0.0; n];
        for s in 0..n {
            let dist = bfs_distances(&adj, s);
            for t in (s + 1)..n {
                if dist[t] == usize::MAX {
                    continue;
                }
                let mut paths = Vec::new();
                let mut current = vec![s];
                fn walk(adj: &[Vec<usize>], t: usize, len: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
                    let last = *cur.last().unwrap();
                    if cur.len() - 1 == len {
                        if last == t {
                            out.push(cur.clone());
                        }
                        return;
                    }
                    for &v in &adj[last] {
                        if !cur.contains(&v) {
                            cur.push(v);
                            walk(adj, t, len, cur, out);
                            cur.pop();
                        }
                    }
                }
                walk(&adj, t, dist[t], &mut current, &mut paths);
                for path in &paths {
                    for &v in &path[1..path.len() - 1] {
                        out[v] += 1.0 / paths.len() as f64;
                    }
                }
            }
        }
        out
    }

    #[test]
    fn degree_of_path() {
        assert_eq!(compute_filtration(&path3(), FiltrationKind::Degree).unwrap(), vec![1.0, 2.0, 1.0]);
    }

    #[test]
    fn betweenness_of_path() {
        assert_eq!(compute_filtration(&path3(), FiltrationKind::Betweenness).unwrap(), vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn betweenness_matches_path_enumeration() {
        let graphs = [
            Graph::new(0, 6, [(0, 1), (1, 2), (2, 3), (3, 0), (2, 4), (4, 5), (3, 5)], 0),
            Graph::new(1, 7, [(0, 1), (0, 2), (1, 3), (2, 3), (3, 4), (5, 6)], 0),
            Graph::new(2, 5, [(0, 1), (0, 2), (0, 3), (0, 4), (1, 2), (3, 4)], 0),
        ];
        for g in &graphs {
            let fast = compute_filtration(g, FiltrationKind::Betweenness).unwrap();
            let slow = brute_force_betweenness(g);
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).abs() < 1e-12, "{fast:?} vs {slow:?}");
            }
        }
    }

    #[test]
    fn harmonic_closeness_disconnected() {
        let g = Graph::new(0, 4, [(0, 1), (1, 2)], 0);
        let c = compute_filtration(&g, FiltrationKind::Closeness).unwrap();
        assert_eq!(c, vec![1.5, 2.0, 1.5, 0.0]);
    }

    #[test]
    fn eigenvector_of_triangle() {
        let e = compute_filtration(&triangle(), FiltrationKind::Eigenvector).unwrap();
        for x in e {
            assert!((x - 1.0 / 3f64.sqrt()).abs() < 1e-9);
        }
    }

    #[test]
    fn eigenvector_bipartite_and_isolated() {
        // Star K_{1,3} plus an isolated vertex. Principal eigenvector of the
        // star is (sqrt(3), 1, 1, 1) / sqrt(6).
        let g = Graph::new(0, 5, [(0, 1), (0, 2), (0, 3)], 0);
        let e = compute_filtration(&g, FiltrationKind::Eigenvector).unwrap();
        let s6 = 6f64.sqrt();
        let expected = [3f64.sqrt() / s6, 1.0 / s6, 1.0 / s6, 1.0 / s6, 0.0];
        for (a, b) in e.iter().zip(expected) {
            assert!((a - b).abs() < 1e-8, "{e:?}");
        }
    }

    #[test]
    fn communicability_of_single_edge() {
        // exp([[0,1],[1,0]]) has diagonal cosh(1).
        let g = Graph::new(0, 3, [(0, 1)], 0);
        let c = compute_filtration(&g, FiltrationKind::Communicability).unwrap();
        assert!((c[0] - 1f64.cosh()).abs() < 1e-12);
        assert!((c[1] - 1f64.cosh()).abs() < 1e-12);
        assert_eq!(c[2], 1.0);
    }

    #[test]
    fn communicability_matches_series() {
        let g = Graph::new(0, 5, [(0, 1), (1, 2), (2, 3), (3, 0), (0, 2), (3, 4)], 0);
        let c = compute_filtration(&g, FiltrationKind::Communicability).unwrap();
        let a = dense_adjacency(&(0..5).collect::<Vec<_>>(), &g.adjacency());
        let mut term = DMatrix::<f64>::identity(5, 5);
        let mut sum = term.clone();
        for k in 1..60 {
            term = &term * &a / k as f64;
            sum += &term;
        }
        for v in 0..5 {
            assert!((c[v] - sum[(v, v)]).abs() < 1e-8);
        }
    }

    #[test]
    fn kind_round_trips_through_str() {
        for k in FiltrationKind::ALL {
            assert_eq!(k.as_str().parse::<FiltrationKind>().unwrap(), k);
        }
        assert!("pagerank".parse::<FiltrationKind>().is_err());
    }
}
