//! Distances between instances: Wasserstein distance of persistence
//! diagrams, the pairwise matrix built from it, and K-nearest-neighbour
//! queries restricted to a split part.
//!
//! Conformal code only sees the [`DistanceSource`] trait, so graph data uses a
//! Wasserstein [`SimilarityMatrix`] while simulated data plugs in
//! [`EuclideanPoints`].

mod hungarian;
mod knn;
mod matrix;
mod wasserstein;

pub use hungarian::solve_assignment;
pub use knn::{knn, rank_pool, NeighborSet};
pub use matrix::{build_combined_matrix, build_similarity_matrix, CacheStatus, MatrixSource, SimilarityMatrix};
pub use wasserstein::{matching_cost, wasserstein_distance, wasserstein_points};

/// Symmetric distance between instances `0..len()`.
pub trait DistanceSource: Sync {
    fn len(&self) -> usize;
    fn distance(&self, i: usize, j: usize) -> f64;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Euclidean distance between stored feature vectors, evaluated on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct EuclideanPoints {
    pub points: Vec<Vec<f64>>,
}

impl EuclideanPoints {
    pub fn new(points: Vec<Vec<f64>>) -> Self {
        EuclideanPoints { points }
    }
}

impl DistanceSource for EuclideanPoints {
    fn len(&self) -> usize {
        self.points.len()
    }

    fn distance(&self, i: usize, j: usize) -> f64 {
        self.points[i]
            .iter()
            .zip(&self.points[j])
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}
