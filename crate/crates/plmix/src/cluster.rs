//! Spectral clustering of embedded rankings with adaptive dimension
//! reduction.
//!
//! The pipeline: take the binary pairwise embedding, compute its leading
//! singular structure, pick a projection rank from the singular-value gaps
//! (clusters separated in preference space push signal above the noise
//! level), project rows onto the leading right singular vectors, and run
//! k-means in the reduced space. The gap threshold defaults to
//! `sqrt(n) * sqrt(m + n) * sqrt(ln n)`, the scale of the noise operator
//! norm; when no gap clears it the projection falls back to rank `K`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::assignment::min_cost_assignment;
use crate::error::{Error, Result};

/// Leading singular structure of an embedded dataset.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    /// Leading singular values, descending; values below `1e-10 * s1` are
    /// zeroed as numerical noise.
    pub singular_values: Vec<f64>,
    /// Matching right singular vectors as orthonormal columns, `d x r`.
    pub right_vectors: DMatrix<f64>,
}

/// Columns of `X` beyond this count make the thin SVD the expensive side, and
/// the Gram matrix `X X^T` is decomposed instead.
const DIRECT_SVD_MAX_COLS: usize = 4096;

/// Computes up to `max_rank` leading singular pairs of `x`. Small embeddings
/// go through a thin SVD; wide ones through the symmetric eigendecomposition
/// of the Gram matrix, which only costs the observation dimension.
pub fn svd_embedding(x: &DMatrix<f64>, max_rank: usize) -> Result<SvdFactors> {
    let (m, d) = x.shape();
    if m == 0 || d == 0 {
        return Err(Error::param("x", "empty matrix"));
    }
    if max_rank == 0 {
        return Err(Error::param("max_rank", "must be at least 1"));
    }
    let want = max_rank.min(m).min(d);

    let (mut values, mut vectors) = if d <= DIRECT_SVD_MAX_COLS {
        let svd = x.clone().svd(false, true);
        let v_t = svd.v_t.expect("right vectors requested");
        let mut values: Vec<f64> = svd.singular_values.iter().copied().collect();
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap());
        values.sort_by(|a, b| b.partial_cmp(a).unwrap());
        values.truncate(want);
        let mut vectors = DMatrix::<f64>::zeros(d, want);
        for (c, &src) in order.iter().take(want).enumerate() {
            for r in 0..d {
                vectors[(r, c)] = v_t[(src, r)];
            }
        }
        (values, vectors)
    } else {
        let gram = x * x.transpose();
        let eig = gram.symmetric_eigen();
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
        let values: Vec<f64> = order
            .iter()
            .take(want)
            .map(|&i| eig.eigenvalues[i].max(0.0).sqrt())
            .collect();
        let mut vectors = DMatrix::<f64>::zeros(d, want);
        for (c, &src) in order.iter().take(want).enumerate() {
            if values[c] > 0.0 {
                let u = eig.eigenvectors.column(src);
                let v = x.transpose() * u / values[c];
                vectors.set_column(c, &v);
            }
        }
        (values, vectors)
    };

    // Zero out numerically-rank-deficient directions and replace their
    // vectors with an orthonormal completion so the projection stays well
    // defined.
    let s1 = values.first().copied().unwrap_or(0.0);
    let cut = 1e-10 * s1;
    for v in values.iter_mut() {
        if *v < cut {
            *v = 0.0;
        }
    }
    for (c, value) in values.iter_mut().enumerate().take(want) {
        if *value == 0.0 || vectors.column(c).norm() < 0.5 {
            *value = 0.0;
            let fill = orthonormal_completion(&vectors, c, d);
            vectors.set_column(c, &fill);
        }
    }

    Ok(SvdFactors {
        singular_values: values,
        right_vectors: vectors,
    })
}

/// First standard basis vector with a substantial component orthogonal to
/// columns `0..upto`, normalized after projection.
fn orthonormal_completion(vectors: &DMatrix<f64>, upto: usize, d: usize) -> DVector<f64> {
    for e in 0..d {
        let mut v = DVector::<f64>::zeros(d);
        v[e] = 1.0;
        for c in 0..upto {
            let col = vectors.column(c);
            let dot = col.dot(&v);
            v -= col * dot;
        }
        let norm = v.norm();
        if norm > 0.5 {
            return v / norm;
        }
    }
    // Unreachable for d > upto; fall back to the last basis vector.
    let mut v = DVector::<f64>::zeros(d);
    v[d - 1] = 1.0;
    v
}

/// Picks the projection rank: the largest `a` in `1..=k` whose singular-value
/// gap `s_a - s_{a+1}` is at least `threshold`; rank `k` when no gap
/// qualifies. Missing values count as zero.
pub fn select_rank(singular_values: &[f64], k: usize, threshold: f64) -> Result<usize> {
    if k == 0 {
        return Err(Error::param("k", "need at least one cluster"));
    }
    if !threshold.is_finite() || threshold < 0.0 {
        return Err(Error::param("threshold", "must be finite and nonnegative"));
    }
    let s = |i: usize| singular_values.get(i).copied().unwrap_or(0.0);
    let mut r_hat = k;
    for a in (1..=k).rev() {
        if s(a - 1) - s(a) >= threshold {
            r_hat = a;
            break;
        }
    }
    Ok(r_hat)
}

/// Default gap threshold `sqrt(n) * sqrt(m + n) * sqrt(ln n)` for `m`
/// embedded rankings over `n` items.
pub fn default_threshold(n: usize, m: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::param("n", format!("need at least 2 items, got {n}")));
    }
    if m == 0 {
        return Err(Error::param("m", "need at least one ranking"));
    }
    Ok(((n * (m + n)) as f64 * (n as f64).ln()).sqrt())
}

/// K-means output on the projected points.
#[derive(Debug, Clone)]
pub struct KmeansResult {
    pub labels: Vec<usize>,
    /// `k x r` matrix of cluster centers.
    pub centers: DMatrix<f64>,
    /// Sum of squared distances to assigned centers.
    pub objective: f64,
}

/// Lloyd's algorithm with greedy k-means++ seeding, multiple restarts, and
/// empty-cluster repair. The best restart by objective wins; ties keep the
/// earliest restart.
pub fn kmeans<R: Rng + ?Sized>(
    points: &DMatrix<f64>,
    k: usize,
    restarts: usize,
    max_iter: usize,
    rng: &mut R,
) -> Result<KmeansResult> {
    let p = points.nrows();
    if k == 0 {
        return Err(Error::param("k", "need at least one cluster"));
    }
    if p < k {
        return Err(Error::param(
            "points",
            format!("{p} points cannot form {k} clusters"),
        ));
    }
    if restarts == 0 {
        return Err(Error::param("restarts", "must be at least 1"));
    }
    let mut best: Option<KmeansResult> = None;
    for _ in 0..restarts {
        let run = kmeans_single(points, k, max_iter, rng);
        if best.as_ref().is_none_or(|b| run.objective < b.objective) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn dist2(points: &DMatrix<f64>, row: usize, center: &DMatrix<f64>, c: usize) -> f64 {
    let r = points.ncols();
    let mut acc = 0.0;
    for j in 0..r {
        let d = points[(row, j)] - center[(c, j)];
        acc += d * d;
    }
    acc
}

fn kmeans_single<R: Rng + ?Sized>(
    points: &DMatrix<f64>,
    k: usize,
    max_iter: usize,
    rng: &mut R,
) -> KmeansResult {
    let (run, _trace) = kmeans_single_traced(points, k, max_iter, rng);
    run
}

/// Single restart returning the per-iteration objective trace (used to check
/// Lloyd monotonicity).
fn kmeans_single_traced<R: Rng + ?Sized>(
    points: &DMatrix<f64>,
    k: usize,
    max_iter: usize,
    rng: &mut R,
) -> (KmeansResult, Vec<f64>) {
    let p = points.nrows();
    let r = points.ncols();
    let mut centers = DMatrix::<f64>::zeros(k, r);

    // Greedy k-means++: sample several candidates by squared distance, keep
    // the one that lowers the potential most.
    let first = rng.gen_range(0..p);
    centers.row_mut(0).copy_from(&points.row(first));
    let mut d2: Vec<f64> = (0..p).map(|i| dist2(points, i, &centers, 0)).collect();
    let candidates = 2 + (k as f64).ln().floor() as usize;
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let mut best_idx = 0usize;
        let mut best_pot = f64::INFINITY;
        for _ in 0..candidates {
            let idx = if total > 0.0 {
                let mut target = rng.gen::<f64>() * total;
                let mut chosen = p - 1;
                for (i, &w) in d2.iter().enumerate() {
                    target -= w;
                    if target <= 0.0 {
                        chosen = i;
                        break;
                    }
                }
                chosen
            } else {
                rng.gen_range(0..p)
            };
            let mut pot = 0.0;
            for i in 0..p {
                let mut dd = 0.0;
                for j in 0..r {
                    let d = points[(i, j)] - points[(idx, j)];
                    dd += d * d;
                }
                pot += d2[i].min(dd);
            }
            if pot < best_pot {
                best_pot = pot;
                best_idx = idx;
            }
        }
        centers.row_mut(c).copy_from(&points.row(best_idx));
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(dist2(points, i, &centers, c));
        }
    }

    let mut labels = vec![0usize; p];
    let mut trace = Vec::new();
    let mut objective = f64::INFINITY;
    for _ in 0..max_iter.max(1) {
        // Assignment; ties go to the lowest center index.
        let mut changed = false;
        let mut counts = vec![0usize; k];
        for (i, label) in labels.iter_mut().enumerate() {
            let mut best_c = 0usize;
            let mut best_d = dist2(points, i, &centers, 0);
            for c in 1..k {
                let d = dist2(points, i, &centers, c);
                if d < best_d {
                    best_d = d;
                    best_c = c;
                }
            }
            if *label != best_c {
                *label = best_c;
                changed = true;
            }
            counts[best_c] += 1;
        }
        // Repair: hand each empty cluster the point farthest from its center,
        // taken from a cluster that can spare one.
        for e in 0..k {
            if counts[e] > 0 {
                continue;
            }
            let mut donor: Option<(usize, f64)> = None;
            for i in 0..p {
                if counts[labels[i]] < 2 {
                    continue;
                }
                let d = dist2(points, i, &centers, labels[i]);
                if donor.is_none_or(|(_, dd)| d > dd) {
                    donor = Some((i, d));
                }
            }
            if let Some((i, _)) = donor {
                counts[labels[i]] -= 1;
                labels[i] = e;
                counts[e] += 1;
                changed = true;
            }
        }
        // Center update.
        centers.fill(0.0);
        for i in 0..p {
            for j in 0..r {
                centers[(labels[i], j)] += points[(i, j)];
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                for j in 0..r {
                    centers[(c, j)] /= counts[c] as f64;
                }
            }
        }
        objective = (0..p).map(|i| dist2(points, i, &centers, labels[i])).sum();
        trace.push(objective);
        if !changed {
            break;
        }
    }
    (
        KmeansResult {
            labels,
            centers,
            objective,
        },
        trace,
    )
}

/// Cluster labels with the projection they were computed in.
#[derive(Debug, Clone)]
pub struct ClusterAssignment {
    pub labels: Vec<usize>,
    /// `k x r_hat` centers in the projected space.
    pub centers: DMatrix<f64>,
    /// Projection rank actually used.
    pub r_hat: usize,
}

const KMEANS_RESTARTS: usize = 10;
const KMEANS_MAX_ITER: usize = 100;

/// Clusters embedded rankings: leading SVD, gap-based rank selection,
/// projection onto the chosen right singular vectors, then k-means.
pub fn spectral_cluster<R: Rng + ?Sized>(
    x: &DMatrix<f64>,
    k: usize,
    threshold: f64,
    rng: &mut R,
) -> Result<ClusterAssignment> {
    if k == 0 {
        return Err(Error::param("k", "need at least one cluster"));
    }
    if x.nrows() < k {
        return Err(Error::param(
            "x",
            format!("{} rankings cannot form {k} clusters", x.nrows()),
        ));
    }
    let factors = svd_embedding(x, k + 1)?;
    let r_hat =
        select_rank(&factors.singular_values, k, threshold)?.min(factors.right_vectors.ncols());
    let projected = x * factors.right_vectors.columns(0, r_hat);
    let km = kmeans(&projected, k, KMEANS_RESTARTS, KMEANS_MAX_ITER, rng)?;
    Ok(ClusterAssignment {
        labels: km.labels,
        centers: km.centers,
        r_hat,
    })
}

/// Fraction of disagreeing labels under the best bijective relabeling of the
/// `k` cluster ids.
pub fn misclustering_rate(labels: &[usize], truth: &[usize], k: usize) -> Result<f64> {
    if labels.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            found: labels.len(),
        });
    }
    if labels.is_empty() {
        return Err(Error::param("labels", "empty label vector"));
    }
    if k == 0 {
        return Err(Error::param("k", "need at least one cluster"));
    }
    if let Some(&bad) = labels.iter().chain(truth.iter()).find(|&&z| z >= k) {
        return Err(Error::param(
            "labels",
            format!("label {bad} outside 0..{k}"),
        ));
    }
    let mut agree = DMatrix::<f64>::zeros(k, k);
    for (&a, &b) in labels.iter().zip(truth.iter()) {
        agree[(a, b)] += 1.0;
    }
    // Maximum agreement assignment = minimum of the negated counts.
    let (_, neg_best) = min_cost_assignment(&(-&agree));
    Ok(1.0 + neg_best / labels.len() as f64)
}
