//! Reader and writer for the TU graph benchmark layout.
//!
//! A dataset `NAME` is a directory holding
//!
//! - `NAME_A.txt`: one edge per line, `row, col`, 1-based global node ids;
//! - `NAME_graph_indicator.txt`: line `i` holds the 1-based graph id of node `i`;
//! - `NAME_graph_labels.txt`: line `g` holds the class label of graph `g`;
//! - optionally `NAME_node_labels.txt` and `NAME_node_attributes.txt`.
//!
//! Node ids are rebased to 0-based indices local to each graph. Class labels
//! are remapped to `0..L` following the ascending order of the original values.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use log::warn;

use super::{normalize_edges, Graph};
use crate::{Error, Result};

/// A parsed TU dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct TuDataset {
    pub name: String,
    pub graphs: Vec<Graph>,
    /// Original label value for each remapped class index.
    pub class_labels: Vec<i64>,
    /// Self-loops removed while parsing.
    pub self_loops_dropped: usize,
}

impl TuDataset {
    pub fn num_classes(&self) -> usize {
        self.class_labels.len()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.graphs.iter().map(|g| g.label).collect()
    }
}

fn dataset_file(dir: &Path, name: &str, suffix: &str) -> PathBuf {
    dir.join(format!("{name}_{suffix}.txt"))
}

/// Reads a file into `(1-based line number, line)` pairs, skipping blank lines.
fn read_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::parse(path, None, e.to_string()))?;
    Ok(text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l.to_string()))
        .collect())
}

fn read_optional_lines(path: &Path) -> Result<Option<Vec<(usize, String)>>> {
    if path.exists() {
        read_lines(path).map(Some)
    } else {
        Ok(None)
    }
}

fn tokens(line: &str) -> impl Iterator<Item = &str> {
    line.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty())
}

fn parse_ints(path: &Path, lineno: usize, line: &str) -> Result<Vec<i64>> {
    tokens(line)
        .map(|t| {
            t.parse::<i64>()
                .map_err(|_| Error::parse(path, Some(lineno), format!("expected integer, got {t:?}")))
        })
        .collect()
}

fn parse_single_int(path: &Path, lineno: usize, line: &str) -> Result<i64> {
    match parse_ints(path, lineno, line)?.as_slice() {
        [v, ..] => Ok(*v),
        [] => Err(Error::parse(path, Some(lineno), "empty line")),
    }
}

/// Parses the dataset `name` stored in `dir`.
pub fn parse_tu_dataset(dir: impl AsRef<Path>, name: &str) -> Result<TuDataset> {
    let dir = dir.as_ref();
    let a_path = dataset_file(dir, name, "A");
    let ind_path = dataset_file(dir, name, "graph_indicator");
    let lab_path = dataset_file(dir, name, "graph_labels");
    for p in [&a_path, &ind_path, &lab_path] {
        if !p.is_file() {
            return Err(Error::parse(p, None, "missing mandatory dataset file"));
        }
    }

    let raw_labels = read_lines(&lab_path)?
        .iter()
        .map(|(n, l)| parse_single_int(&lab_path, *n, l))
        .collect::<Result<Vec<_>>>()?;
    if raw_labels.is_empty() {
        return Err(Error::parse(&lab_path, None, "dataset contains no graphs"));
    }
    let num_graphs = raw_labels.len();

    let mut class_labels = raw_labels.clone();
    class_labels.sort_unstable();
    class_labels.dedup();

    // node -> (graph, local index)
    let indicator_lines = read_lines(&ind_path)?;
    let mut node_graph = Vec::with_capacity(indicator_lines.len());
    let mut node_local = Vec::with_capacity(indicator_lines.len());
    let mut nodes_per_graph = vec![0usize; num_graphs];
    for (lineno, line) in &indicator_lines {
        let g = parse_single_int(&ind_path, *lineno, line)?;
        if g < 1 || g as usize > num_graphs {
            return Err(Error::parse(
                &ind_path,
                Some(*lineno),
                format!("graph id {g} outside 1..={num_graphs}"),
            ));
        }
        let g = g as usize - 1;
        node_graph.push(g);
        node_local.push(nodes_per_graph[g]);
        nodes_per_graph[g] += 1;
    }
    let total_nodes = node_graph.len();

    let mut raw_edges: Vec<Vec<(usize, usize)>> = vec![Vec::new(); num_graphs];
    for (lineno, line) in read_lines(&a_path)? {
        let ends = parse_ints(&a_path, lineno, &line)?;
        if ends.len() != 2 {
            return Err(Error::parse(&a_path, Some(lineno), "expected two node ids"));
        }
        let mut local = [0usize; 2];
        let mut graph = [0usize; 2];
        for (k, &node) in ends.iter().enumerate() {
            if node < 1 || node as usize > total_nodes {
                return Err(Error::parse(
                    &a_path,
                    Some(lineno),
                    format!("node {node} outside 1..={total_nodes}"),
                ));
            }
            graph[k] = node_graph[node as usize - 1];
            local[k] = node_local[node as usize - 1];
        }
        if graph[0] != graph[1] {
            return Err(Error::parse(
                &a_path,
                Some(lineno),
                format!("edge joins graphs {} and {}", graph[0] + 1, graph[1] + 1),
            ));
        }
        raw_edges[graph[0]].push((local[0], local[1]));
    }

    let node_labels = match read_optional_lines(&dataset_file(dir, name, "node_labels"))? {
        Some(lines) => {
            let path = dataset_file(dir, name, "node_labels");
            if lines.len() != total_nodes {
                return Err(Error::parse(
                    &path,
                    None,
                    format!("{} node labels for {total_nodes} nodes", lines.len()),
                ));
            }
            Some(
                lines
                    .iter()
                    .map(|(n, l)| parse_single_int(&path, *n, l))
                    .collect::<Result<Vec<_>>>()?,
            )
        }
        None => None,
    };

    let node_attributes = match read_optional_lines(&dataset_file(dir, name, "node_attributes"))? {
        Some(lines) => {
            let path = dataset_file(dir, name, "node_attributes");
            if lines.len() != total_nodes {
                return Err(Error::parse(
                    &path,
                    None,
                    format!("{} attribute rows for {total_nodes} nodes", lines.len()),
                ));
            }
            let rows = lines
                .iter()
                .map(|(n, l)| {
                    tokens(l)
                        .map(|t| {
                            t.parse::<f64>()
                                .map_err(|_| Error::parse(&path, Some(*n), format!("expected float, got {t:?}")))
                        })
                        .collect::<Result<Vec<f64>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            Some(rows)
        }
        None => None,
    };

    // Per-graph node payloads, in local index order.
    let mut per_graph_labels: Vec<Vec<i64>> = vec![Vec::new(); num_graphs];
    let mut per_graph_attrs: Vec<Vec<Vec<f64>>> = vec![Vec::new(); num_graphs];
    for node in 0..total_nodes {
        let g = node_graph[node];
        if let Some(labels) = &node_labels {
            per_graph_labels[g].push(labels[node]);
        }
        if let Some(attrs) = &node_attributes {
            per_graph_attrs[g].push(attrs[node].clone());
        }
    }

    let mut self_loops_dropped = 0;
    let graphs = raw_edges
        .into_iter()
        .enumerate()
        .map(|(id, edges)| {
            let (edges, loops) = normalize_edges(nodes_per_graph[id], edges);
            self_loops_dropped += loops;
            let label = class_labels.binary_search(&raw_labels[id]).expect("label present");
            Graph {
                id,
                num_nodes: nodes_per_graph[id],
                edges,
                node_labels: node_labels.as_ref().map(|_| std::mem::take(&mut per_graph_labels[id])),
                node_attributes: node_attributes.as_ref().map(|_| std::mem::take(&mut per_graph_attrs[id])),
                label,
            }
        })
        .collect();

    if self_loops_dropped > 0 {
        warn!("{name}: dropped {self_loops_dropped} self-loop(s)");
    }

    Ok(TuDataset {
        name: name.to_string(),
        graphs,
        class_labels,
        self_loops_dropped,
    })
}

/// Writes `dataset` in TU layout under `dir` (created if needed).
///
/// Each undirected edge is written in both directions, as the published
/// benchmark files do. Class labels are written with their original values.
pub fn write_tu_dataset(dir: impl AsRef<Path>, dataset: &TuDataset) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let name = &dataset.name;
    let mut a = BufWriter::new(fs::File::create(dataset_file(dir, name, "A"))?);
    let mut ind = BufWriter::new(fs::File::create(dataset_file(dir, name, "graph_indicator"))?);
    let mut lab = BufWriter::new(fs::File::create(dataset_file(dir, name, "graph_labels"))?);

    let has_node_labels = dataset.graphs.iter().any(|g| g.node_labels.is_some());
    let has_attrs = dataset.graphs.iter().any(|g| g.node_attributes.is_some());
    let mut nl = if has_node_labels {
        Some(BufWriter::new(fs::File::create(dataset_file(dir, name, "node_labels"))?))
    } else {
        None
    };
    let mut na = if has_attrs {
        Some(BufWriter::new(fs::File::create(dataset_file(dir, name, "node_attributes"))?))
    } else {
        None
    };

    let mut offset = 0usize;
    for g in &dataset.graphs {
        for &(u, v) in &g.edges {
            writeln!(a, "{}, {}", offset + u + 1, offset + v + 1)?;
            writeln!(a, "{}, {}", offset + v + 1, offset + u + 1)?;
        }
        for node in 0..g.num_nodes {
            writeln!(ind, "{}", g.id + 1)?;
            if let Some(w) = nl.as_mut() {
                let value = g.node_labels.as_ref().map(|l| l[node]).unwrap_or(0);
                writeln!(w, "{value}")?;
            }
            if let Some(w) = na.as_mut() {
                let row = g
                    .node_attributes
                    .as_ref()
                    .map(|rows| rows[node].iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", "))
                    .unwrap_or_default();
                writeln!(w, "{row}")?;
            }
        }
        writeln!(lab, "{}", dataset.class_labels[g.label])?;
        offset += g.num_nodes;
    }
    a.flush()?;
    ind.flush()?;
    lab.flush()?;
    if let Some(w) = nl.as_mut() {
        w.flush()?;
    }
    if let Some(w) = na.as_mut() {
        w.flush()?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, suffix: &str, body: &str) {
        fs::write(dataset_file(dir, name, suffix), body).unwrap();
    }

    /// Triangle labelled 1 followed by a single edge labelled -1.
    fn fixture(dir: &Path) {
        write(dir, "FIX", "A", "1, 2\n2, 1\n2, 3\n3, 2\n1, 3\n3, 1\n4, 5\n5, 4\n");
        write(dir, "FIX", "graph_indicator", "1\n1\n1\n2\n2\n");
        write(dir, "FIX", "graph_labels", "1\n-1\n");
    }

    #[test]
    fn parses_fixture_and_remaps_labels() {
        let tmp = tempfile::tempdir().unwrap();
        fixture(tmp.path());
        let ds = parse_tu_dataset(tmp.path(), "FIX").unwrap();
        assert_eq!(ds.graphs.len(), 2);
        assert_eq!(ds.class_labels, vec![-1, 1]);
        assert_eq!(ds.graphs[0].label, 1);
        assert_eq!(ds.graphs[1].label, 0);
        assert_eq!(ds.graphs[0].edges, vec![(0, 1), (0, 2), (1, 2)]);
        assert_eq!(ds.graphs[1].num_nodes, 2);
        assert_eq!(ds.graphs[1].edges, vec![(0, 1)]);
    }

    #[test]
    fn missing_file_is_parse_error() {
        let tmp = tempfile::tempdir().unwrap();
        fixture(tmp.path());
        fs::remove_file(dataset_file(tmp.path(), "FIX", "graph_labels")).unwrap();
        match parse_tu_dataset(tmp.path(), "FIX") {
            Err(Error::Parse { file, .. }) => assert!(file.ends_with("FIX_graph_labels.txt")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn cross_graph_edge_reports_line() {
        let tmp = tempfile::tempdir().unwrap();
        fixture(tmp.path());
        write(tmp.path(), "FIX", "A", "1, 2\n3, 4\n");
        match parse_tu_dataset(tmp.path(), "FIX") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, Some(2)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn out_of_range_node_reports_line() {
        let tmp = tempfile::tempdir().unwrap();
        fixture(tmp.path());
        write(tmp.path(), "FIX", "A", "1, 2\n\n4, 9\n");
        match parse_tu_dataset(tmp.path(), "FIX") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, Some(3)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_dataset_rejected() {
        let tmp = tempfile::tempdir().unwrap();
        fixture(tmp.path());
        write(tmp.path(), "FIX", "graph_labels", "\n");
        assert!(matches!(parse_tu_dataset(tmp.path(), "FIX"), Err(Error::Parse { .. })));
    }

    #[test]
    fn self_loops_and_duplicates_collapse() {
        let tmp = tempfile::tempdir().unwrap();
        fixture(tmp.path());
        write(tmp.path(), "FIX", "A", "1 1\n1 2\n2 1\n1,2\n4\t5\n");
        let ds = parse_tu_dataset(tmp.path(), "FIX").unwrap();
        assert_eq!(ds.self_loops_dropped, 1);
        assert_eq!(ds.graphs[0].edges, vec![(0, 1)]);
    }

    #[test]
    fn optional_node_files() {
        let tmp = tempfile::tempdir().unwrap();
        fixture(tmp.path());
        write(tmp.path(), "FIX", "node_labels", "0\n1\n0\n2\n2\n");
        write(tmp.path(), "FIX", "node_attributes", "0.5, 1\n1,2\n3, 4\n-1.25, 0\n0, 0\n");
        let ds = parse_tu_dataset(tmp.path(), "FIX").unwrap();
        assert_eq!(ds.graphs[1].node_labels.as_deref(), Some(&[2, 2][..]));
        assert_eq!(ds.graphs[1].node_attributes.as_ref().unwrap()[0], vec![-1.25, 0.0]);

        let out = tempfile::tempdir().unwrap();
        write_tu_dataset(out.path(), &ds).unwrap();
        assert_eq!(parse_tu_dataset(out.path(), "FIX").unwrap(), ds);
    }
}
