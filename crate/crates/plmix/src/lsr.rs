//! Weighted Luce spectral ranking: a Markov-chain fixed-point solver for the
//! weighted Plackett-Luce maximum likelihood problem.
//!
//! Every choice event (winner `j` out of set `A`) deposits transition mass
//! `w / sum_{k in A} exp(theta_k)` on the edges `i -> j`, `i in A`. The
//! stationary distribution of the resulting row-stochastic chain, re-read as
//! utilities through a log, is the next iterate; at the fixed point it is the
//! maximizer of the weighted log-likelihood.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{pl_log_likelihood, PLParams};
use crate::ranking::{choice_breaking, ChoiceBreaking, RankingDataset};

/// Inner stationary solves run to this residual.
pub const STATIONARY_TOL: f64 = 1e-12;

/// Inner stationary solves get `STATIONARY_ITER_FACTOR * n` iterations, but
/// never fewer than [`STATIONARY_MIN_ITERS`].
pub const STATIONARY_ITER_FACTOR: usize = 100;

/// Iteration floor for the inner stationary solves. Low-weight rankings can
/// leave the chain with a conductance bottleneck whose mixing time dwarfs
/// `100 * n` at small `n`; iterations cost only `n^2`, so the floor buys
/// that robustness cheaply.
pub const STATIONARY_MIN_ITERS: usize = 100_000;

/// Per-ranking weights below `CONNECTIVITY_EPS * max(q)` are ignored when
/// deciding connectivity (but still enter the chain masses).
pub const CONNECTIVITY_EPS: f64 = 1e-12;

/// Repeats each per-ranking weight once per choice event of that ranking
/// (`s_l - 1` events for a ranking of length `s_l`), in choice-breaking
/// order.
pub fn expand_weights(q: &[f64], lengths: &[usize]) -> Result<Vec<f64>> {
    if q.len() != lengths.len() {
        return Err(Error::DimensionMismatch {
            expected: lengths.len(),
            found: q.len(),
        });
    }
    for &w in q {
        if !w.is_finite() || w < 0.0 {
            return Err(Error::param(
                "q",
                format!("weight {w} not a nonnegative real"),
            ));
        }
    }
    let total: usize = lengths.iter().map(|&s| s.saturating_sub(1)).sum();
    let mut w = Vec::with_capacity(total);
    for (&ql, &s) in q.iter().zip(lengths) {
        for _ in 0..s.saturating_sub(1) {
            w.push(ql);
        }
    }
    Ok(w)
}

/// Row-stochastic comparison chain together with the normalizer that made it
/// stochastic.
#[derive(Debug, Clone)]
pub struct WeightedMarkovChain {
    matrix: DMatrix<f64>,
    d: f64,
}

impl WeightedMarkovChain {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Normalization constant: slightly above the largest off-diagonal mass
    /// row sum, so every diagonal stays positive.
    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Accumulates the weighted choice-event masses into a row-stochastic chain.
/// Mass flows into the winner of each event from every other member of its
/// choice set.
pub fn build_chain(
    breaking: &ChoiceBreaking,
    w: &[f64],
    theta: &PLParams,
) -> Result<WeightedMarkovChain> {
    let n = breaking.n();
    if w.len() != breaking.enumerations().len() {
        return Err(Error::DimensionMismatch {
            expected: breaking.enumerations().len(),
            found: w.len(),
        });
    }
    if theta.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: theta.len(),
        });
    }
    let exp_theta: Vec<f64> = theta.theta().iter().map(|t| t.exp()).collect();
    let mut mass = DMatrix::<f64>::zeros(n, n);
    for (e, &we) in breaking.enumerations().iter().zip(w) {
        if we == 0.0 {
            continue;
        }
        let denom: f64 = e.choice_set.iter().map(|&k| exp_theta[k]).sum();
        let inc = we / denom;
        for &i in &e.choice_set {
            if i != e.winner {
                mass[(i, e.winner)] += inc;
            }
        }
    }
    let max_row = (0..n).map(|i| mass.row(i).sum()).fold(0.0f64, f64::max);
    let d = if max_row > 0.0 {
        max_row * (1.0 + 1e-12)
    } else {
        1.0
    };
    let mut matrix = mass / d;
    for i in 0..n {
        let off: f64 = matrix.row(i).sum();
        matrix[(i, i)] = 1.0 - off;
    }
    Ok(WeightedMarkovChain { matrix, d })
}

fn linf_diff(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Strong connectivity of `edges` (adjacency as an edge-presence closure)
/// over `n` states: one forward and one backward reachability pass from
/// state 0.
fn strongly_connected(n: usize, edge: impl Fn(usize, usize) -> bool) -> bool {
    let reach = |transposed: bool| -> usize {
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for (v, s) in seen.iter_mut().enumerate() {
                let present = if transposed { edge(v, u) } else { edge(u, v) };
                if present && !*s {
                    *s = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count
    };
    reach(false) == n && reach(true) == n
}

/// Stationary distribution of the chain by damping-free power iteration from
/// the uniform vector. A chain that degenerated to the identity (no observed
/// comparisons) returns the uniform distribution outright; otherwise the
/// positive-entry graph must be strongly connected or the distribution is
/// not unique.
///
/// Bipartite-like chains make the iterates oscillate with period two: the
/// one-step difference stalls while the two-step difference collapses. When
/// that signature appears, the two phases are averaged, which nearly cancels
/// the oscillating mode, and iteration resumes from the midpoint. The
/// midpoint is returned only after its own residual verifies.
pub fn stationary_distribution(
    chain: &WeightedMarkovChain,
    tol: f64,
    max_iter: usize,
) -> Result<DVector<f64>> {
    let n = chain.n();
    let m = chain.matrix();
    let off_diag_zero = (0..n).all(|i| (0..n).all(|j| i == j || m[(i, j)] == 0.0));
    if off_diag_zero {
        return Ok(DVector::from_element(n, 1.0 / n as f64));
    }
    if !strongly_connected(n, |i, j| i != j && m[(i, j)] > 0.0) {
        return Err(Error::Disconnected);
    }
    let normalize = |mut v: DVector<f64>| {
        let s = v.sum();
        v /= s;
        v
    };
    let mut p = DVector::from_element(n, 1.0 / n as f64);
    let mut q = normalize(m.tr_mul(&p));
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        let r = normalize(m.tr_mul(&q));
        residual = linf_diff(&r, &q);
        if residual <= tol {
            return Ok(q);
        }
        // Two-step difference far below the one-step one means the dominant
        // error mode has an eigenvalue near -1; stepping on loses |1 + Λ| per
        // pass while the phase midpoint loses the same factor at once.
        if linf_diff(&r, &p) <= 0.25 * linf_diff(&q, &p) {
            let mid = normalize((&p + &q) * 0.5);
            let next = normalize(m.tr_mul(&mid));
            if linf_diff(&next, &mid) <= tol {
                return Ok(mid);
            }
            p = mid;
            q = next;
            continue;
        }
        p = q;
        q = r;
    }
    Err(Error::NonConvergence {
        what: "stationary distribution",
        iters: max_iter,
        residual,
    })
}

/// Weighted Plackett-Luce maximum likelihood by spectral fixed-point
/// iteration. `q` holds one nonnegative weight per ranking; dataset
/// multiplicities multiply into them. `theta0` warm-starts the iteration
/// (zeros otherwise); convergence is `tol` in the sup norm on theta.
pub fn weighted_lsr(
    dataset: &RankingDataset,
    q: &[f64],
    theta0: Option<&PLParams>,
    tol: f64,
    max_iter: usize,
) -> Result<PLParams> {
    let n = dataset.n();
    if q.len() != dataset.len() {
        return Err(Error::DimensionMismatch {
            expected: dataset.len(),
            found: q.len(),
        });
    }
    for &w in q {
        if !w.is_finite() || w < 0.0 {
            return Err(Error::param(
                "q",
                format!("weight {w} not a nonnegative real"),
            ));
        }
    }
    let q_eff: Vec<f64> = q
        .iter()
        .zip(dataset.multiplicities())
        .map(|(a, b)| a * b)
        .collect();
    let q_max = q_eff.iter().cloned().fold(0.0f64, f64::max);
    if q_max <= 0.0 {
        return Err(Error::param("q", "all ranking weights vanish"));
    }
    // Connectivity on the rankings that carry non-negligible weight; tiny
    // weights still contribute mass later but cannot certify a connection.
    let floor = CONNECTIVITY_EPS * q_max;
    let mut adjacent = vec![false; n * n];
    for (l, ranking) in dataset.rankings().iter().enumerate() {
        if q_eff[l] < floor {
            continue;
        }
        let items = ranking.items();
        for i in 0..items.len() {
            for j in i + 1..items.len() {
                // winner items[i] over the suffix: edges into it, and the
                // reverse edges from later events share pairs transitively;
                // recording both directions of each observed pair is exactly
                // the edge set the chain realizes across its events.
                adjacent[items[j] * n + items[i]] = true;
            }
        }
    }
    if !strongly_connected(n, |i, j| adjacent[i * n + j]) {
        return Err(Error::Disconnected);
    }
    let breaking = choice_breaking(dataset);
    let lengths: Vec<usize> = dataset.rankings().iter().map(|r| r.len()).collect();
    let w = expand_weights(&q_eff, &lengths)?;
    let mut theta = match theta0 {
        Some(t) => {
            if t.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: t.len(),
                });
            }
            t.clone()
        }
        None => PLParams::new(vec![0.0; n])?,
    };
    let mut delta = f64::INFINITY;
    for _ in 0..max_iter {
        let chain = build_chain(&breaking, &w, &theta)?;
        let p = stationary_distribution(
            &chain,
            STATIONARY_TOL,
            (STATIONARY_ITER_FACTOR * n).max(STATIONARY_MIN_ITERS),
        )?;
        let logs: Vec<f64> = p.iter().map(|&x| x.max(1e-300).ln()).collect();
        let next = PLParams::new(logs)?;
        delta = theta
            .theta()
            .iter()
            .zip(next.theta())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        theta = next;
        if delta <= tol {
            return Ok(theta);
        }
    }
    Err(Error::NonConvergence {
        what: "weighted LSR fixed point",
        iters: max_iter,
        residual: delta,
    })
}

/// Weighted data log-likelihood `sum_l q_l * mult_l * loglik(pi_l; theta)`.
pub fn weighted_log_likelihood(
    dataset: &RankingDataset,
    q: &[f64],
    theta: &PLParams,
) -> Result<f64> {
    if q.len() != dataset.len() {
        return Err(Error::DimensionMismatch {
            expected: dataset.len(),
            found: q.len(),
        });
    }
    if theta.len() != dataset.n() {
        return Err(Error::DimensionMismatch {
            expected: dataset.n(),
            found: theta.len(),
        });
    }
    let mut acc = 0.0;
    for ((ranking, &ql), &mult) in dataset
        .rankings()
        .iter()
        .zip(q)
        .zip(dataset.multiplicities())
    {
        if ql == 0.0 || mult == 0.0 {
            continue;
        }
        acc += ql * mult * pl_log_likelihood(ranking, theta);
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ranking::Ranking;
    use approx::assert_abs_diff_eq;

    fn dataset(n: usize, orders: &[&[usize]]) -> RankingDataset {
        let rankings = orders
            .iter()
            .map(|o| Ranking::new(o.to_vec()).unwrap())
            .collect();
        RankingDataset::new(n, rankings).unwrap()
    }

    #[test]
    fn expand_weights_patterns() {
        assert_eq!(expand_weights(&[1.0, 1.0], &[3, 3]).unwrap(), vec![1.0; 4]);
        assert_eq!(expand_weights(&[0.5], &[2]).unwrap(), vec![0.5]);
        assert_eq!(
            expand_weights(&[2.0, 3.0], &[2, 2]).unwrap(),
            vec![2.0, 3.0]
        );
        assert!(expand_weights(&[1.0], &[2, 2]).is_err());
        assert!(expand_weights(&[-1.0], &[2]).is_err());
    }

    #[test]
    fn chain_for_opposite_pair() {
        // Two opposite rankings at theta = 0: each event deposits 1/2, the
        // minimal normalizer sends essentially all mass across.
        let ds = dataset(2, &[&[0, 1], &[1, 0]]);
        let breaking = choice_breaking(&ds);
        let theta = PLParams::new(vec![0.0, 0.0]).unwrap();
        let chain = build_chain(&breaking, &[1.0, 1.0], &theta).unwrap();
        assert_abs_diff_eq!(chain.d(), 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(chain.matrix()[(0, 1)], 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(chain.matrix()[(1, 0)], 1.0, epsilon = 1e-9);
        for i in 0..2 {
            assert_abs_diff_eq!(chain.matrix().row(i).sum(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn only_winners_receive_mass() {
        let ds = dataset(3, &[&[0, 1, 2]]);
        let breaking = choice_breaking(&ds);
        let theta = PLParams::new(vec![0.0; 3]).unwrap();
        // Weight only the first event (winner 0 over {0,1,2}).
        let chain = build_chain(&breaking, &[1.0, 0.0], &theta).unwrap();
        let m = chain.matrix();
        assert!(m[(1, 0)] > 0.0 && m[(2, 0)] > 0.0);
        assert_eq!(m[(0, 1)], 0.0);
        assert_eq!(m[(0, 2)], 0.0);
        assert_eq!(m[(1, 2)], 0.0);
        assert_eq!(m[(2, 1)], 0.0);
    }

    #[test]
    fn rows_sum_to_one() {
        let ds = dataset(4, &[&[0, 1, 2, 3], &[3, 1, 0, 2], &[2, 0, 3, 1]]);
        let breaking = choice_breaking(&ds);
        let theta = PLParams::new(vec![0.8, -0.2, 0.1, -0.7]).unwrap();
        let chain = build_chain(
            &breaking,
            &[1.0, 0.3, 2.5, 0.0, 1.0, 1.0, 0.2, 0.9, 1.1],
            &theta,
        )
        .unwrap();
        for i in 0..4 {
            assert_abs_diff_eq!(chain.matrix().row(i).sum(), 1.0, epsilon = 1e-12);
            for j in 0..4 {
                assert!(chain.matrix()[(i, j)] >= 0.0);
            }
        }
    }

    fn chain_from_matrix(matrix: DMatrix<f64>) -> WeightedMarkovChain {
        WeightedMarkovChain { matrix, d: 1.0 }
    }

    #[test]
    fn stationary_of_flip_chain_is_uniform() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let p = stationary_distribution(&chain_from_matrix(m), 1e-12, 200).unwrap();
        assert_abs_diff_eq!(p[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(p[1], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn identity_chain_returns_uniform() {
        let p = stationary_distribution(&chain_from_matrix(DMatrix::identity(4, 4)), 1e-12, 10)
            .unwrap();
        for i in 0..4 {
            assert_abs_diff_eq!(p[i], 0.25, epsilon = 1e-15);
        }
    }

    #[test]
    fn stationary_two_state_balance() {
        // Balance equations of [[1/2,1/2],[1/4,3/4]] solve to (1/3, 2/3).
        let m = DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.25, 0.75]);
        let p = stationary_distribution(&chain_from_matrix(m), 1e-12, 200).unwrap();
        assert_abs_diff_eq!(p[0], 1.0 / 3.0, epsilon = 1e-10);
        assert_abs_diff_eq!(p[1], 2.0 / 3.0, epsilon = 1e-10);
    }

    #[test]
    fn periodic_chain_resolved_by_phase_averaging() {
        // Bipartite chain {0,2} <-> {1}: iterates from uniform oscillate
        // forever, the phase average is the stationary point (1/4,1/2,1/4).
        let m = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 0.5, 0.0, 0.5, 0.0, 1.0, 0.0]);
        let p = stationary_distribution(&chain_from_matrix(m.clone()), 1e-12, 300).unwrap();
        assert_abs_diff_eq!(p[0], 0.25, epsilon = 1e-10);
        assert_abs_diff_eq!(p[1], 0.5, epsilon = 1e-10);
        assert_abs_diff_eq!(p[2], 0.25, epsilon = 1e-10);
        let res = linf_diff(&m.tr_mul(&p), &p);
        assert!(res <= 1e-12, "residual {res} above the solve tolerance");
    }

    #[test]
    fn disconnected_chain_rejected() {
        // States 0 and 1 communicate, state 2 only self-loops.
        let m = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        let err = stationary_distribution(&chain_from_matrix(m), 1e-12, 100).unwrap_err();
        assert!(matches!(err, Error::Disconnected));
    }

    #[test]
    fn stationary_sums_to_one_and_nonnegative() {
        let ds = dataset(5, &[&[0, 1, 2, 3, 4], &[4, 3, 2, 1, 0], &[2, 4, 0, 1, 3]]);
        let breaking = choice_breaking(&ds);
        let theta = PLParams::new(vec![0.4, -0.3, 0.9, -0.6, -0.4]).unwrap();
        let w = vec![1.0; breaking.enumerations().len()];
        let chain = build_chain(&breaking, &w, &theta).unwrap();
        let p = stationary_distribution(&chain, 1e-12, 500).unwrap();
        assert_abs_diff_eq!(p.sum(), 1.0, epsilon = 1e-12);
        assert!(p.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn symmetric_pair_gives_zero_utilities() {
        let ds = dataset(2, &[&[0, 1], &[1, 0]]);
        let fit = weighted_lsr(&ds, &[1.0, 1.0], None, 1e-8, 100).unwrap();
        assert_abs_diff_eq!(fit.theta()[0], 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(fit.theta()[1], 0.0, epsilon = 1e-9);
    }

    #[test]
    fn two_to_one_wins_give_half_log_two() {
        // Two-item MLE with win ratio 2:1 is theta = (ln2/2, -ln2/2).
        let ds = dataset(2, &[&[0, 1], &[0, 1], &[1, 0]]);
        let fit = weighted_lsr(&ds, &[1.0; 3], None, 1e-10, 100).unwrap();
        assert_abs_diff_eq!(fit.theta()[0], 2f64.ln() / 2.0, epsilon = 1e-8);
        assert_abs_diff_eq!(fit.theta()[1], -(2f64.ln()) / 2.0, epsilon = 1e-8);
    }

    #[test]
    fn weight_scaling_is_invisible() {
        let ds = dataset(3, &[&[0, 1, 2], &[1, 2, 0], &[2, 0, 1], &[0, 2, 1]]);
        let base = weighted_lsr(&ds, &[1.0; 4], None, 1e-10, 100).unwrap();
        for c in [0.1, 7.0] {
            let scaled = weighted_lsr(&ds, &[c; 4], None, 1e-10, 100).unwrap();
            for i in 0..3 {
                assert_abs_diff_eq!(scaled.theta()[i], base.theta()[i], epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn duplication_equals_doubled_weight() {
        let dup = dataset(3, &[&[0, 1, 2], &[0, 1, 2], &[2, 1, 0]]);
        let merged = dataset(3, &[&[0, 1, 2], &[2, 1, 0]]);
        let a = weighted_lsr(&dup, &[1.0, 1.0, 1.0], None, 1e-10, 100).unwrap();
        let b = weighted_lsr(&merged, &[2.0, 1.0], None, 1e-10, 100).unwrap();
        for i in 0..3 {
            assert_abs_diff_eq!(a.theta()[i], b.theta()[i], epsilon = 1e-8);
        }
    }

    #[test]
    fn multiplicities_fold_into_weights() {
        let rankings = vec![
            Ranking::new(vec![0, 1, 2]).unwrap(),
            Ranking::new(vec![2, 1, 0]).unwrap(),
        ];
        let weighted = RankingDataset::with_multiplicities(3, rankings, vec![2.0, 1.0]).unwrap();
        let merged = dataset(3, &[&[0, 1, 2], &[2, 1, 0]]);
        let a = weighted_lsr(&weighted, &[1.0, 1.0], None, 1e-10, 100).unwrap();
        let b = weighted_lsr(&merged, &[2.0, 1.0], None, 1e-10, 100).unwrap();
        for i in 0..3 {
            assert_abs_diff_eq!(a.theta()[i], b.theta()[i], epsilon = 1e-8);
        }
    }

    #[test]
    fn unseen_item_disconnects() {
        // A two-item partial ranking in a three-item universe: item 2 joins
        // no choice set, so the chain cannot identify it.
        let ds = dataset(3, &[&[0, 1]]);
        let err = weighted_lsr(&ds, &[1.0], None, 1e-8, 100).unwrap_err();
        assert!(matches!(err, Error::Disconnected));
    }

    #[test]
    fn one_sided_pair_disconnects() {
        // Item 1 never wins over item 0: backward reachability fails.
        let ds = dataset(2, &[&[0, 1], &[0, 1]]);
        let err = weighted_lsr(&ds, &[1.0, 1.0], None, 1e-8, 100).unwrap_err();
        assert!(matches!(err, Error::Disconnected));
    }

    #[test]
    fn zero_weights_disconnect_even_with_data() {
        let ds = dataset(2, &[&[0, 1], &[1, 0]]);
        assert!(weighted_lsr(&ds, &[0.0, 0.0], None, 1e-8, 100).is_err());
        // One direction weighted to zero behaves like missing data.
        let err = weighted_lsr(&ds, &[1.0, 0.0], None, 1e-8, 100).unwrap_err();
        assert!(matches!(err, Error::Disconnected));
    }

    #[test]
    fn warm_start_agrees_with_cold_start() {
        let ds = dataset(
            3,
            &[&[0, 1, 2], &[1, 2, 0], &[2, 0, 1], &[0, 2, 1], &[1, 0, 2]],
        );
        let cold = weighted_lsr(&ds, &[1.0; 5], None, 1e-10, 100).unwrap();
        let start = PLParams::new(vec![1.5, -0.5, -1.0]).unwrap();
        let warm = weighted_lsr(&ds, &[1.0; 5], Some(&start), 1e-10, 100).unwrap();
        for i in 0..3 {
            assert_abs_diff_eq!(cold.theta()[i], warm.theta()[i], epsilon = 1e-8);
        }
    }

    #[test]
    fn fixed_point_stationarity_residual() {
        let ds = dataset(
            3,
            &[&[0, 1, 2], &[1, 2, 0], &[2, 0, 1], &[0, 2, 1], &[0, 1, 2]],
        );
        let q = [0.9, 0.4, 1.3, 0.7, 0.2];
        let fit = weighted_lsr(&ds, &q, None, 1e-10, 200).unwrap();
        let q_eff: Vec<f64> = q.to_vec();
        let lengths: Vec<usize> = ds.rankings().iter().map(|r| r.len()).collect();
        let w = expand_weights(&q_eff, &lengths).unwrap();
        let breaking = choice_breaking(&ds);
        let chain = build_chain(&breaking, &w, &fit).unwrap();
        let z: f64 = fit.theta().iter().map(|t| t.exp()).sum();
        let p = DVector::from_iterator(3, fit.theta().iter().map(|t| t.exp() / z));
        let res = linf_diff(&chain.matrix().tr_mul(&p), &p);
        assert!(res <= 1e-8, "fixed-point residual {res}");
    }

    #[test]
    fn non_convergence_is_reported() {
        let ds = dataset(2, &[&[0, 1], &[0, 1], &[1, 0]]);
        let err = weighted_lsr(&ds, &[1.0; 3], None, 1e-16, 1).unwrap_err();
        assert!(matches!(err, Error::NonConvergence { .. }));
    }

    #[test]
    fn log_likelihood_values() {
        let ds = dataset(3, &[&[0, 1, 2], &[2, 1, 0], &[1, 0, 2], &[0, 2, 1]]);
        let theta = PLParams::new(vec![0.0; 3]).unwrap();
        let ll = weighted_log_likelihood(&ds, &[1.0; 4], &theta).unwrap();
        assert_abs_diff_eq!(ll, -4.0 * 6f64.ln(), epsilon = 1e-12);

        let single = weighted_log_likelihood(&ds, &[1.0, 0.0, 0.0, 0.0], &theta).unwrap();
        assert_abs_diff_eq!(
            single,
            pl_log_likelihood(ds.ranking(0), &theta),
            epsilon = 1e-15
        );

        let scaled = weighted_log_likelihood(&ds, &[2.0; 4], &theta).unwrap();
        assert_abs_diff_eq!(scaled, 2.0 * ll, epsilon = 1e-12);
    }

    #[test]
    fn log_likelihood_counts_multiplicities() {
        let rankings = vec![
            Ranking::new(vec![0, 1]).unwrap(),
            Ranking::new(vec![1, 0]).unwrap(),
        ];
        let ds = RankingDataset::with_multiplicities(2, rankings, vec![3.0, 1.0]).unwrap();
        let theta = PLParams::new(vec![0.5, -0.5]).unwrap();
        let ll = weighted_log_likelihood(&ds, &[1.0, 1.0], &theta).unwrap();
        let expect = 3.0 * pl_log_likelihood(ds.ranking(0), &theta)
            + pl_log_likelihood(ds.ranking(1), &theta);
        assert_abs_diff_eq!(ll, expect, epsilon = 1e-12);
    }

    #[test]
    fn solution_maximizes_the_weighted_objective() {
        // Coordinate bumps around the fixed point never raise the objective.
        let ds = dataset(
            3,
            &[&[0, 1, 2], &[1, 2, 0], &[2, 0, 1], &[0, 2, 1], &[0, 1, 2]],
        );
        let q = [1.0, 0.5, 0.8, 1.2, 0.6];
        let fit = weighted_lsr(&ds, &q, None, 1e-12, 300).unwrap();
        let base = weighted_log_likelihood(&ds, &q, &fit).unwrap();
        for c in 0..3 {
            for delta in [1e-4, -1e-4] {
                let mut bumped = fit.theta().to_vec();
                bumped[c] += delta;
                let params = PLParams::new(bumped).unwrap();
                let ll = weighted_log_likelihood(&ds, &q, &params).unwrap();
                assert!(ll <= base + 1e-10, "bump improved objective: {ll} > {base}");
            }
        }
    }
}
