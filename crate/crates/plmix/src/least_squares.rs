//! Pairwise preference estimation and the closed-form least-squares utility
//! fit.
//!
//! For a set of full rankings, the empirical probability that `i` beats `j`
//! is link-transformed into an additive margin `phi_ij ~ theta_i - theta_j`
//! and the utilities are read off as the minimizer of
//! `sum_{i != j} (phi_ij - (theta_i - theta_j))^2` over mean-zero vectors.
//! The normal equations have the closed form `theta_i = mean_j phi_ij`: the
//! design Gram matrix is `2n (I - J/n)`, invertible on the mean-zero
//! subspace with eigenvalue `2n`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::model::PLParams;
use crate::ranking::RankingDataset;

/// Margin link for pairwise probabilities.
///
/// `Logit` inverts the PL/BTL pairwise law `P_ij = 1/(1 + exp(-(t_i - t_j)))`.
/// `Probit` inverts the Thurstone law: per-item noise has variance one half,
/// utility differences are standard normal, so `P_ij = Phi(t_i - t_j)` and
/// the margin is the plain inverse normal CDF.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Link {
    Logit,
    Probit,
}

impl std::fmt::Display for Link {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Link::Logit => write!(f, "logit"),
            Link::Probit => write!(f, "probit"),
        }
    }
}

/// Empirical pairwise win probabilities of a (sub)population of rankings.
#[derive(Debug, Clone)]
pub struct PairwisePreferenceMatrix {
    probs: DMatrix<f64>,
    count: f64,
}

impl PairwisePreferenceMatrix {
    /// `n x n` matrix with `probs[(i, j)] = P(i beats j)`; complementary
    /// off-diagonal entries, diagonal fixed at 1/2.
    pub fn probs(&self) -> &DMatrix<f64> {
        &self.probs
    }

    /// Total ranking weight the estimate is based on.
    pub fn count(&self) -> f64 {
        self.count
    }

    pub fn n(&self) -> usize {
        self.probs.nrows()
    }
}

/// Estimates pairwise win probabilities from the selected rankings,
/// multiplicity-weighted. Members must be full rankings so every pair is
/// observed by every member.
pub fn estimate_pairwise(
    dataset: &RankingDataset,
    member_indices: &[usize],
) -> Result<PairwisePreferenceMatrix> {
    if member_indices.is_empty() {
        return Err(Error::param("member_indices", "empty member set"));
    }
    let n = dataset.n();
    let mut wins = DMatrix::<f64>::zeros(n, n);
    let mut total = 0.0;
    let mut pos = vec![0usize; n];
    for &l in member_indices {
        if l >= dataset.len() {
            return Err(Error::param(
                "member_indices",
                format!("index {l} out of range"),
            ));
        }
        let ranking = dataset.ranking(l);
        if ranking.len() != n {
            return Err(Error::PartialRanking {
                index: l,
                len: ranking.len(),
                n,
            });
        }
        let w = dataset.multiplicities()[l];
        total += w;
        for (p, &item) in ranking.items().iter().enumerate() {
            pos[item] = p;
        }
        for i in 0..n {
            for j in i + 1..n {
                if pos[i] < pos[j] {
                    wins[(i, j)] += w;
                } else {
                    wins[(j, i)] += w;
                }
            }
        }
    }
    let mut probs = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        probs[(i, i)] = 0.5;
        for j in i + 1..n {
            let p = wins[(i, j)] / total;
            probs[(i, j)] = p;
            probs[(j, i)] = 1.0 - p;
        }
    }
    Ok(PairwisePreferenceMatrix {
        probs,
        count: total,
    })
}

/// Default clamp for `link_transform`: half a pseudo-count at the estimation
/// resolution, never below 1e-6.
pub fn default_clamp(count: f64) -> f64 {
    (1.0 / (2.0 * count.max(1.0))).max(1e-6)
}

/// Skew-symmetric margin matrix `phi_ij ~ theta_i - theta_j`.
#[derive(Debug, Clone)]
pub struct TransformedMatrix {
    phi: DMatrix<f64>,
}

impl TransformedMatrix {
    pub fn phi(&self) -> &DMatrix<f64> {
        &self.phi
    }

    pub fn n(&self) -> usize {
        self.phi.nrows()
    }

    /// Wraps a margin matrix directly; it must be skew-symmetric and finite.
    pub fn from_matrix(phi: DMatrix<f64>) -> Result<Self> {
        if phi.nrows() != phi.ncols() || phi.nrows() < 2 {
            return Err(Error::param("phi", "need a square matrix over >= 2 items"));
        }
        if phi.iter().any(|x| !x.is_finite()) {
            return Err(Error::param("phi", "non-finite entry"));
        }
        for i in 0..phi.nrows() {
            for j in 0..phi.ncols() {
                if (phi[(i, j)] + phi[(j, i)]).abs() > 1e-10 {
                    return Err(Error::param("phi", "matrix is not skew-symmetric"));
                }
            }
        }
        Ok(TransformedMatrix { phi })
    }
}

/// Maps clipped win probabilities to additive margins. Entries are clipped to
/// `[clamp, 1 - clamp]` first so the transform stays finite; the upper
/// triangle is transformed and the lower triangle negated, making skew
/// symmetry exact.
pub fn link_transform(
    p: &PairwisePreferenceMatrix,
    link: Link,
    clamp: f64,
) -> Result<TransformedMatrix> {
    if !clamp.is_finite() || clamp <= 0.0 || clamp > 0.5 {
        return Err(Error::param("clamp", format!("{clamp} outside (0, 0.5]")));
    }
    let n = p.n();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let mut phi = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let pc = p.probs()[(i, j)].clamp(clamp, 1.0 - clamp);
            let v = match link {
                Link::Logit => (pc / (1.0 - pc)).ln(),
                Link::Probit => normal.inverse_cdf(pc),
            };
            phi[(i, j)] = v;
            phi[(j, i)] = -v;
        }
    }
    Ok(TransformedMatrix { phi })
}

/// Least-squares utilities from a margin matrix, in closed form
/// `theta_i = (1/n) sum_{j != i} phi_ij`, re-centered to mean zero.
pub fn least_squares_fit(phi: &TransformedMatrix) -> Result<PLParams> {
    let n = phi.n();
    let mut theta = vec![0.0f64; n];
    for (i, t) in theta.iter_mut().enumerate() {
        let mut acc = 0.0;
        for j in 0..n {
            if j != i {
                acc += phi.phi()[(i, j)];
            }
        }
        *t = acc / n as f64;
    }
    PLParams::new(theta)
}

/// Full per-cluster fit: pairwise estimation, link transform (clamp defaults
/// to `default_clamp` of the member weight), least squares.
pub fn fit_component(
    dataset: &RankingDataset,
    member_indices: &[usize],
    link: Link,
    clamp: Option<f64>,
) -> Result<PLParams> {
    let p = estimate_pairwise(dataset, member_indices)?;
    let clamp = clamp.unwrap_or_else(|| default_clamp(p.count()));
    let phi = link_transform(&p, link, clamp)?;
    least_squares_fit(&phi)
}
