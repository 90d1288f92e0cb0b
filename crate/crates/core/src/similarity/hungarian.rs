//! Exact minimum-cost assignment on a dense square matrix.
//!
//! Shortest augmenting path formulation with dual potentials (Kuhn-Munkres
//! in the Jonker-Volgenant style), O(n^3).

/// Solves the assignment problem for the `n x n` row-major matrix `cost`.
///
/// Returns `assignment[row] = column` and the minimal total cost, summed in
/// row order.
pub fn solve_assignment(cost: &[f64], n: usize) -> (Vec<usize>, f64) {
    assert_eq!(cost.len(), n * n, "cost matrix must be n x n");
    if n == 0 {
        return (Vec::new(), 0.0);
    }
    let at = |i: usize, j: usize| cost[(i - 1) * n + (j - 1)];

    // 1-based; column 0 is a virtual start column.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut matched_row = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut min_slack = vec![f64::INFINITY; n + 1];
    let mut used = vec![false; n + 1];

    for row in 1..=n {
        matched_row[0] = row;
        let mut col0 = 0usize;
        min_slack.fill(f64::INFINITY);
        used.fill(false);
        loop {
            used[col0] = true;
            let i0 = matched_row[col0];
            let mut delta = f64::INFINITY;
            let mut col1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let reduced = at(i0, j) - u[i0] - v[j];
                if reduced < min_slack[j] {
                    min_slack[j] = reduced;
                    way[j] = col0;
                }
                if min_slack[j] < delta {
                    delta = min_slack[j];
                    col1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_slack[j] -= delta;
                }
            }
            col0 = col1;
            if matched_row[col0] == 0 {
                break;
            }
        }
        loop {
            let col1 = way[col0];
            matched_row[col0] = matched_row[col1];
            col0 = col1;
            if col0 == 0 {
                break;
            }
        }
    }

    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        assignment[matched_row[j] - 1] = j - 1;
    }
    let total = assignment.iter().enumerate().map(|(i, &j)| cost[i * n + j]).sum();
    (assignment, total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(n - 1) {
            for pos in 0..=p.len() {
                let mut q = p.clone();
                q.insert(pos, n - 1);
                out.push(q);
            }
        }
        out
    }

    #[test]
    fn classic_example() {
        let cost = [4.0, 1.0, 3.0, 2.0, 0.0, 5.0, 3.0, 2.0, 2.0];
        let (assign, total) = solve_assignment(&cost, 3);
        assert_eq!(total, 5.0);
        assert_eq!(assign, vec![1, 0, 2]);
    }

    #[test]
    fn empty_matrix() {
        assert_eq!(solve_assignment(&[], 0), (vec![], 0.0));
    }

    proptest! {
        #[test]
        fn matches_brute_force(n in 1usize..6, raw in proptest::collection::vec(0u32..50, 36)) {
            let cost: Vec<f64> = raw[..n * n].iter().map(|&c| f64::from(c) / 4.0).collect();
            let (assign, total) = solve_assignment(&cost, n);
            let mut cols = assign.clone();
            cols.sort_unstable();
            prop_assert_eq!(cols, (0..n).collect::<Vec<_>>());
            let best = permutations(n)
                .into_iter()
                .map(|p| p.iter().enumerate().map(|(i, &j)| cost[i * n + j]).sum::<f64>())
                .fold(f64::INFINITY, f64::min);
            prop_assert!((total - best).abs() < 1e-12);
        }
    }
}
