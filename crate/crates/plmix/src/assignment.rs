//! Minimum-cost perfect assignment on a square matrix (Hungarian algorithm,
//! potentials formulation, O(n^3)). Costs may be negative.

use nalgebra::DMatrix;

/// Returns `(assign, total)` where `assign[i]` is the column matched to row
/// `i` and `total` the summed cost. Panics on a non-square or empty matrix.
pub fn min_cost_assignment(cost: &DMatrix<f64>) -> (Vec<usize>, f64) {
    let n = cost.nrows();
    assert!(n > 0 && cost.ncols() == n, "cost matrix must be square");

    // 1-based arrays; row 0 / column 0 are sentinels.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut matched = vec![0usize; n + 1]; // matched[j] = row assigned to column j
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        matched[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[matched[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if matched[j0] == 0 {
                break;
            }
        }
        // Augment along the alternating path back to the sentinel.
        while j0 != 0 {
            let j1 = way[j0];
            matched[j0] = matched[j1];
            j0 = j1;
        }
    }

    let mut assign = vec![0usize; n];
    for j in 1..=n {
        assign[matched[j] - 1] = j - 1;
    }
    let total = (0..n).map(|i| cost[(i, assign[i])]).sum();
    (assign, total)
}
