//! p-Wasserstein distance between persistence diagrams with L-infinity
//! ground cost.
//!
//! The two point sets are matched on the augmented square problem of size
//! `n1 + n2`: a real point may be matched to a real point of the other diagram
//! or to the diagonal, at cost equal to its L-infinity distance to the
//! diagonal, `(death - birth) / 2`. Diagonal-to-diagonal slots cost nothing.

use std::cmp::Ordering;

use super::hungarian::solve_assignment;
use crate::topology::{Pair, PersistenceDiagram};

fn linf(a: Pair, b: Pair) -> f64 {
    (a.0 - b.0).abs().max((a.1 - b.1).abs())
}

fn to_diagonal(a: Pair) -> f64 {
    (a.1 - a.0) / 2.0
}

fn canonical_points(points: &[Pair]) -> Vec<Pair> {
    // Points on the diagonal never improve a matching: pairing one with a
    // real point y costs at least y's own distance to the diagonal.
    let mut out: Vec<Pair> = points.iter().copied().filter(|p| p.1 != p.0).collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    out
}

fn lexicographic(a: &[Pair], b: &[Pair]) -> Ordering {
    a.len().cmp(&b.len()).then_with(|| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    })
}

/// Optimal total `sum cost^p` for matching two finite point sets.
///
/// Inputs are put in a canonical order first so the result is independent of
/// point order and exactly symmetric in its arguments.
pub fn matching_cost(a: &[Pair], b: &[Pair], p: f64) -> f64 {
    assert!(p >= 1.0, "Wasserstein order must be >= 1");
    assert!(
        a.iter().chain(b).all(|x| x.0.is_finite() && x.1.is_finite()),
        "diagram points must be finite; cap essential classes first"
    );
    let a = canonical_points(a);
    let b = canonical_points(b);
    let (a, b) = if lexicographic(&a, &b) == Ordering::Greater {
        (b, a)
    } else {
        (a, b)
    };
    let pow = |x: f64| if p == 1.0 { x } else { x.powf(p) };
    match (a.len(), b.len()) {
        (0, 0) => return 0.0,
        (0, _) => return b.iter().map(|&y| pow(to_diagonal(y))).sum(),
        (_, 0) => return a.iter().map(|&x| pow(to_diagonal(x))).sum(),
        _ => {}
    }

    let (n1, n2) = (a.len(), b.len());
    let n = n1 + n2;
    let mut cost = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            cost[i * n + j] = match (i < n1, j < n2) {
                (true, true) => pow(linf(a[i], b[j])),
                (true, false) => pow(to_diagonal(a[i])),
                (false, true) => pow(to_diagonal(b[j])),
                (false, false) => 0.0,
            };
        }
    }
    solve_assignment(&cost, n).1
}

/// `W_p` between two finite point sets.
pub fn wasserstein_points(a: &[Pair], b: &[Pair], p: f64) -> f64 {
    matching_cost(a, b, p).powf(1.0 / p)
}

/// `W_p` between diagrams: dimensions are matched separately and combined as
/// `(W_p(dim0)^p + W_p(dim1)^p)^(1/p)`. Deaths must already be finite (see
/// [`PersistenceDiagram::prepared`]).
pub fn wasserstein_distance(d1: &PersistenceDiagram, d2: &PersistenceDiagram, p: f64) -> f64 {
    diagram_cost(d1, d2, p).powf(1.0 / p)
}

/// `W_p^p` between diagrams, the additive quantity combined across
/// dimensions and filtrations.
pub(crate) fn diagram_cost(d1: &PersistenceDiagram, d2: &PersistenceDiagram, p: f64) -> f64 {
    matching_cost(&d1.dim0, &d2.dim0, p) + matching_cost(&d1.dim1, &d2.dim1, p)
}
