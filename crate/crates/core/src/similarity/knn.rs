use super::DistanceSource;
use crate::graphdata::Part;
use crate::{Error, Result};

/// The K nearest members of a pool, ascending by distance then id.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborSet {
    pub query: usize,
    pub pool: Part,
    pub neighbors: Vec<(usize, f64)>,
}

impl NeighborSet {
    pub fn ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.neighbors.iter().map(|n| n.0)
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }
}

fn by_distance_then_id(a: &(usize, f64), b: &(usize, f64)) -> std::cmp::Ordering {
    a.1.total_cmp(&b.1).then(a.0.cmp(&b.0))
}

fn candidates<D: DistanceSource + ?Sized>(d: &D, query: usize, pool: &[usize]) -> Result<Vec<(usize, f64)>> {
    let out: Vec<(usize, f64)> = pool
        .iter()
        .filter(|&&id| id != query)
        .map(|&id| (id, d.distance(query, id)))
        .collect();
    if out.is_empty() {
        return Err(Error::Argument(format!("empty neighbour pool for query {query}")));
    }
    Ok(out)
}

/// K nearest members of `pool` to `query`; the query itself is skipped.
pub fn knn<D: DistanceSource + ?Sized>(
    d: &D,
    query: usize,
    pool: &[usize],
    k: usize,
    pool_tag: Part,
) -> Result<NeighborSet> {
    if k == 0 {
        return Err(Error::Argument("K must be at least 1".into()));
    }
    let mut all = candidates(d, query, pool)?;
    if k < all.len() {
        all.select_nth_unstable_by(k - 1, by_distance_then_id);
        all.truncate(k);
    }
    all.sort_unstable_by(by_distance_then_id);
    Ok(NeighborSet {
        query,
        pool: pool_tag,
        neighbors: all,
    })
}

/// The whole pool ranked by distance to `query` (ties by id).
pub fn rank_pool<D: DistanceSource + ?Sized>(d: &D, query: usize, pool: &[usize]) -> Result<Vec<(usize, f64)>> {
    let mut all = candidates(d, query, pool)?;
    all.sort_unstable_by(by_distance_then_id);
    Ok(all)
}
