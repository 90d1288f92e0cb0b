//! Topological signatures of graphs: vertex filtrations, sublevel-set
//! persistence diagrams (dimensions 0 and 1) and persistence images.
//!
//! Everything here is a pure per-graph function, so datasets are processed
//! with a parallel map.

mod filtration;
mod image;
mod persistence;

pub use filtration::{compute_filtration, FiltrationKind};
pub use image::{persistence_image, write_images_csv, ImageParams, PersistenceImage, WeightRule};
pub use persistence::{
    read_diagrams_csv, sublevel_persistence, write_diagrams_csv, HomologyDims, Pair, PersistenceDiagram,
};

use rayon::prelude::*;

use crate::graphdata::Graph;
use crate::Result;

/// Filtration plus persistence for every graph, in dataset order.
pub fn dataset_diagrams(graphs: &[Graph], kind: FiltrationKind) -> Result<Vec<PersistenceDiagram>> {
    graphs
        .par_iter()
        .map(|g| {
            let values = compute_filtration(g, kind)?;
            sublevel_persistence(g, &values)
        })
        .collect()
}

/// Largest finite value over all diagrams; falls back to 1 when every value is
/// zero or the diagrams are empty.
pub fn dataset_cap(diagrams: &[PersistenceDiagram]) -> f64 {
    let cap = diagrams
        .iter()
        .filter_map(PersistenceDiagram::max_finite_value)
        .fold(0.0, f64::max);
    if cap > 0.0 {
        cap
    } else {
        1.0
    }
}
