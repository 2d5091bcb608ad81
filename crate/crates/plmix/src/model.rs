//! Plackett-Luce parameters, mixtures, their log-likelihoods, and
//! random-utility sampling.
//!
//! A PL model over `n` items has a utility vector `theta`; a ranking is built
//! by repeatedly choosing among the remaining items with probability
//! proportional to `exp(theta_i)`. Equivalently (and how sampling is done
//! here), draw independent noise per item, add it to the utilities, and sort
//! descending: standard Gumbel noise gives exactly PL, while normal noise with
//! variance one half gives the Thurstone model whose pairwise margins are
//! `Phi(theta_i - theta_j)`.
//!
//! Utilities are identifiable only up to a common shift, so constructors store
//! the mean-centered representative.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::ranking::{Ranking, RankingDataset};

/// Mean-centered utility vector of a single Plackett-Luce model.
#[derive(Debug, Clone, PartialEq)]
pub struct PLParams {
    theta: Vec<f64>,
}

impl PLParams {
    /// Stores `theta` shifted to mean zero. Requires at least two items and
    /// finite entries.
    pub fn new(mut theta: Vec<f64>) -> Result<Self> {
        if theta.len() < 2 {
            return Err(Error::param(
                "theta",
                format!("need at least 2 items, got {}", theta.len()),
            ));
        }
        if theta.iter().any(|x| !x.is_finite()) {
            return Err(Error::param("theta", "non-finite utility"));
        }
        let mean = theta.iter().sum::<f64>() / theta.len() as f64;
        for x in &mut theta {
            *x -= mean;
        }
        Ok(PLParams { theta })
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// A `K`-component mixture of PL models: utility columns and mixing weights.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureParams {
    thetas: DMatrix<f64>,
    beta: Vec<f64>,
}

impl MixtureParams {
    /// `thetas` is `n x K` (one utility column per component). Columns are
    /// mean-centered on construction; `beta` must be nonnegative with positive
    /// sum and is normalized to the simplex.
    pub fn new(mut thetas: DMatrix<f64>, mut beta: Vec<f64>) -> Result<Self> {
        let (n, k) = thetas.shape();
        if n < 2 {
            return Err(Error::param(
                "thetas",
                format!("need at least 2 items, got {n}"),
            ));
        }
        if k == 0 || beta.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k.max(1),
                found: beta.len(),
            });
        }
        if thetas.iter().any(|x| !x.is_finite()) {
            return Err(Error::param("thetas", "non-finite utility"));
        }
        for c in 0..k {
            let mean = thetas.column(c).sum() / n as f64;
            for r in 0..n {
                thetas[(r, c)] -= mean;
            }
        }
        if beta.iter().any(|b| !b.is_finite() || *b < 0.0) {
            return Err(Error::param("beta", "mixing weights must be nonnegative"));
        }
        let total: f64 = beta.iter().sum();
        if total <= 0.0 {
            return Err(Error::param("beta", "mixing weights sum to zero"));
        }
        for b in &mut beta {
            *b /= total;
        }
        Ok(MixtureParams { thetas, beta })
    }

    /// Single-component mixture.
    pub fn from_single(params: PLParams) -> Self {
        let n = params.len();
        let thetas = DMatrix::from_column_slice(n, 1, params.theta());
        MixtureParams {
            thetas,
            beta: vec![1.0],
        }
    }

    pub fn n(&self) -> usize {
        self.thetas.nrows()
    }

    pub fn k(&self) -> usize {
        self.thetas.ncols()
    }

    /// Utility columns, `n x K`.
    pub fn thetas(&self) -> &DMatrix<f64> {
        &self.thetas
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn component(&self, k: usize) -> PLParams {
        PLParams {
            theta: self.thetas.column(k).iter().copied().collect(),
        }
    }
}

/// Log-likelihood of one (possibly partial) ranking: the item at each position
/// is modeled as the softmax winner among itself and everything ranked below.
/// Unranked items contribute nothing.
pub fn pl_log_likelihood(ranking: &Ranking, params: &PLParams) -> f64 {
    log_likelihood_slice(ranking.items(), params.theta())
}

/// Suffix log-sum-exp accumulation, max-shifted for stability; the caller
/// guarantees ids index into `theta`.
pub(crate) fn log_likelihood_slice(items: &[usize], theta: &[f64]) -> f64 {
    let s = items.len();
    let mut mx = theta[items[s - 1]];
    let mut acc = 1.0f64;
    let mut ll = 0.0;
    for i in (0..s - 1).rev() {
        let t = theta[items[i]];
        if t > mx {
            acc = acc * (mx - t).exp() + 1.0;
            mx = t;
        } else {
            acc += (t - mx).exp();
        }
        ll += t - (mx + acc.ln());
    }
    ll
}

/// Marginal log-likelihood of a dataset under a mixture, multiplicities
/// included: `sum_l mult_l * log sum_k beta_k * P(pi_l | theta_k)`.
pub fn mixture_log_likelihood(dataset: &RankingDataset, mix: &MixtureParams) -> f64 {
    let k = mix.k();
    let log_beta: Vec<f64> = mix.beta().iter().map(|b| b.ln()).collect();
    let mut total = 0.0;
    let mut terms = vec![0.0f64; k];
    for (l, ranking) in dataset.rankings().iter().enumerate() {
        for (c, term) in terms.iter_mut().enumerate() {
            *term = log_beta[c]
                + log_likelihood_slice(ranking.items(), mix.thetas.column(c).as_slice());
        }
        total += dataset.multiplicities()[l] * log_sum_exp(&terms);
    }
    total
}

pub(crate) fn log_sum_exp(xs: &[f64]) -> f64 {
    let mx = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if mx == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    mx + xs.iter().map(|x| (x - mx).exp()).sum::<f64>().ln()
}

/// Gumbel(0,1) via inverse transform; the uniform is clamped away from 0 so
/// the double log stays finite.
fn gumbel<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u: f64 = rng.gen::<f64>().max(1e-300);
    -(-u.ln()).ln()
}

/// Draws a full ranking from the PL model: utilities plus Gumbel noise,
/// sorted descending.
pub fn sample_pl<R: Rng + ?Sized>(params: &PLParams, rng: &mut R) -> Ranking {
    sample_rum(params, NoiseModel::Gumbel, rng)
}

/// Noise law for random-utility sampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseModel {
    /// Standard Gumbel; yields exactly the PL distribution.
    Gumbel,
    /// Normal with variance 1/2, so utility differences have unit variance
    /// and pairwise margins are `Phi(theta_i - theta_j)`.
    NormalHalfVar,
}

/// Draws a full ranking by perturbing utilities with i.i.d. noise and sorting
/// descending.
pub fn sample_rum<R: Rng + ?Sized>(params: &PLParams, noise: NoiseModel, rng: &mut R) -> Ranking {
    let theta = params.theta();
    let mut utilities: Vec<(f64, usize)> = theta
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let eps = match noise {
                NoiseModel::Gumbel => gumbel(rng),
                NoiseModel::NormalHalfVar => {
                    let z: f64 = rng.sample(StandardNormal);
                    z * 0.5f64.sqrt()
                }
            };
            (t + eps, i)
        })
        .collect();
    utilities.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    Ranking::new(utilities.into_iter().map(|(_, i)| i).collect())
        .expect("n >= 2 distinct items always form a ranking")
}

/// Samples `m` full rankings from a mixture. Returns the dataset (unit
/// multiplicities) and the latent component of each draw.
pub fn sample_mixture<R: Rng + ?Sized>(
    mix: &MixtureParams,
    m: usize,
    rng: &mut R,
) -> Result<(RankingDataset, Vec<usize>)> {
    if m == 0 {
        return Err(Error::param("m", "need at least one sample"));
    }
    let components: Vec<PLParams> = (0..mix.k()).map(|c| mix.component(c)).collect();
    let mut rankings = Vec::with_capacity(m);
    let mut labels = Vec::with_capacity(m);
    for _ in 0..m {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut z = mix.k() - 1;
        for (c, &b) in mix.beta().iter().enumerate() {
            acc += b;
            if u < acc {
                z = c;
                break;
            }
        }
        rankings.push(sample_pl(&components[z], rng));
        labels.push(z);
    }
    Ok((RankingDataset::new(mix.n(), rankings)?, labels))
}

/// Synthetic mixture used for recovery experiments: in each component the
/// first `l` utilities are i.i.d. standard normal, the rest are zero
/// (pre-centering), and mixing weights are uniform.
pub fn generate_top_l<R: Rng + ?Sized>(
    n: usize,
    l: usize,
    k: usize,
    rng: &mut R,
) -> Result<MixtureParams> {
    if n < 2 {
        return Err(Error::param("n", format!("need at least 2 items, got {n}")));
    }
    if l == 0 || l > n {
        return Err(Error::param("l", format!("l = {l} must lie in 1..={n}")));
    }
    if k == 0 {
        return Err(Error::param("k", "need at least one component"));
    }
    let mut thetas = DMatrix::<f64>::zeros(n, k);
    for c in 0..k {
        for r in 0..l {
            thetas[(r, c)] = rng.sample(StandardNormal);
        }
    }
    MixtureParams::new(thetas, vec![1.0; k])
}
