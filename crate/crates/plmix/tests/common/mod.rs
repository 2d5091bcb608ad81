//! Shared helpers for the integration suites. The likelihood oracle here is
//! deliberately written from the objective's definition (sequential-choice
//! sums plus gradient ascent), sharing no code path with the solver under
//! test.

#![allow(dead_code)]

use plmix::{Ranking, RankingDataset};

/// Weighted sequential-choice log-likelihood, straight from the definition.
pub fn oracle_objective(dataset: &RankingDataset, q: &[f64], theta: &[f64]) -> f64 {
    let mut total = 0.0;
    for (l, r) in dataset.rankings().iter().enumerate() {
        let w = q[l] * dataset.multiplicities()[l];
        if w == 0.0 {
            continue;
        }
        let items = r.items();
        for t in 0..items.len().saturating_sub(1) {
            let denom: f64 = items[t..].iter().map(|&k| theta[k].exp()).sum();
            total += w * (theta[items[t]] - denom.ln());
        }
    }
    total
}

fn oracle_gradient(dataset: &RankingDataset, q: &[f64], theta: &[f64]) -> Vec<f64> {
    let exp_theta: Vec<f64> = theta.iter().map(|t| t.exp()).collect();
    let mut g = vec![0.0; theta.len()];
    for (l, r) in dataset.rankings().iter().enumerate() {
        let w = q[l] * dataset.multiplicities()[l];
        if w == 0.0 {
            continue;
        }
        let items = r.items();
        // Walk the stages backward so each suffix sum extends the previous
        // one instead of being rebuilt.
        let mut denom = exp_theta[*items.last().unwrap()];
        for t in (0..items.len() - 1).rev() {
            denom += exp_theta[items[t]];
            g[items[t]] += w;
            for &k in &items[t..] {
                g[k] -= w * exp_theta[k] / denom;
            }
        }
    }
    g
}

/// Fixed-step gradient ascent run until the gradient's Euclidean norm drops
/// below `grad_tol`. The objective is concave with curvature bounded by the
/// total event weight (each choice event contributes a Hessian of norm at
/// most its own weight), so the reciprocal of that total is a safe step and
/// no line search is needed; function values never enter, which avoids
/// stalling on their round-off plateau. Panics rather than returning a
/// half-converged answer.
pub fn oracle_mle(dataset: &RankingDataset, q: &[f64], grad_tol: f64) -> Vec<f64> {
    let n = dataset.n();
    let total_event_weight: f64 = dataset
        .rankings()
        .iter()
        .enumerate()
        .map(|(l, r)| q[l] * dataset.multiplicities()[l] * (r.len().saturating_sub(1)) as f64)
        .sum();
    let step = 1.0 / total_event_weight.max(1e-12);
    let mut theta = vec![0.0; n];
    for _ in 0..5_000_000u64 {
        let g = oracle_gradient(dataset, q, &theta);
        let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm <= grad_tol {
            let mean = theta.iter().sum::<f64>() / n as f64;
            return theta.iter().map(|t| t - mean).collect();
        }
        for (t, gi) in theta.iter_mut().zip(&g) {
            *t += step * gi;
        }
    }
    panic!("oracle did not reach gradient norm {grad_tol}");
}

/// Strong connectivity of the beaten-by graph (an edge from each loser to
/// each item it lost to, across all positive-weight rankings), checked with
/// a plain double BFS.
pub fn oracle_connected(dataset: &RankingDataset, q: &[f64]) -> bool {
    let n = dataset.n();
    let mut edge = vec![false; n * n];
    for (l, r) in dataset.rankings().iter().enumerate() {
        if q[l] * dataset.multiplicities()[l] <= 0.0 {
            continue;
        }
        let items = r.items();
        for u in 0..items.len() {
            for v in (u + 1)..items.len() {
                edge[items[v] * n + items[u]] = true;
            }
        }
    }
    let reaches_all = |forward: bool| {
        let mut seen = vec![false; n];
        let mut queue = vec![0usize];
        seen[0] = true;
        while let Some(a) = queue.pop() {
            for b in 0..n {
                let present = if forward {
                    edge[a * n + b]
                } else {
                    edge[b * n + a]
                };
                if present && !seen[b] {
                    seen[b] = true;
                    queue.push(b);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    reaches_all(true) && reaches_all(false)
}

/// All permutations of `0..n`, in lexicographic order.
pub fn all_rankings(n: usize) -> Vec<Ranking> {
    fn recurse(prefix: &mut Vec<usize>, rest: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest.is_empty() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..rest.len() {
            let x = rest.remove(i);
            prefix.push(x);
            recurse(prefix, rest, out);
            prefix.pop();
            rest.insert(i, x);
        }
    }
    let mut out = Vec::new();
    recurse(&mut Vec::new(), &mut (0..n).collect(), &mut out);
    out.into_iter()
        .map(|items| Ranking::new(items).expect("permutation"))
        .collect()
}
