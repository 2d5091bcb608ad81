//! Mixture fitting: spectral initialization, the EM loop with an exact
//! weighted-MLE M-step, and BIC model selection.
//!
//! The E-step computes class posteriors in log space; the M-step hands each
//! posterior column to the weighted LSR solver, warm-started at the previous
//! component, so the complete-data objective is maximized exactly and the
//! marginal log-likelihood never decreases (up to inner-solver tolerance).

use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::cluster::{default_threshold, spectral_cluster};
use crate::error::{Error, Result};
use crate::least_squares::{fit_component, Link};
use crate::lsr::weighted_lsr;
use crate::model::{
    log_sum_exp, mixture_log_likelihood, pl_log_likelihood, MixtureParams, PLParams,
};
use crate::ranking::{embed_pairwise, RankingDataset};

/// A posterior column whose multiplicity-weighted mass falls below this
/// fraction of the total is considered starved and gets reseeded.
pub const DEGENERATE_MASS_FRACTION: f64 = 1e-8;

/// Class membership posteriors, one row per ranking, rows on the simplex.
#[derive(Debug, Clone)]
pub struct PosteriorMatrix {
    q: DMatrix<f64>,
}

impl PosteriorMatrix {
    /// `m x k` matrix of membership probabilities.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn len(&self) -> usize {
        self.q.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.q.nrows() == 0
    }

    pub fn k(&self) -> usize {
        self.q.ncols()
    }

    /// Most probable component per ranking, ties to the lowest index.
    pub fn hard_labels(&self) -> Vec<usize> {
        (0..self.q.nrows())
            .map(|l| {
                let mut best = 0;
                for k in 1..self.q.ncols() {
                    if self.q[(l, k)] > self.q[(l, best)] {
                        best = k;
                    }
                }
                best
            })
            .collect()
    }

    fn column_vec(&self, k: usize) -> Vec<f64> {
        self.q.column(k).iter().cloned().collect()
    }
}

/// Membership posteriors `Q_lk` proportional to `beta_k * exp(loglik_k)`,
/// normalized per row in log space.
pub fn e_step(dataset: &RankingDataset, mix: &MixtureParams) -> Result<PosteriorMatrix> {
    if mix.n() != dataset.n() {
        return Err(Error::DimensionMismatch {
            expected: dataset.n(),
            found: mix.n(),
        });
    }
    let m = dataset.len();
    let k = mix.k();
    let components: Vec<PLParams> = (0..k).map(|c| mix.component(c)).collect();
    let log_beta: Vec<f64> = mix
        .beta()
        .iter()
        .map(|&b| if b > 0.0 { b.ln() } else { f64::NEG_INFINITY })
        .collect();
    let mut q = DMatrix::<f64>::zeros(m, k);
    let mut row = vec![0.0f64; k];
    for l in 0..m {
        let ranking = dataset.ranking(l);
        for c in 0..k {
            row[c] = log_beta[c] + pl_log_likelihood(ranking, &components[c]);
        }
        let lse = log_sum_exp(&row);
        let mut sum = 0.0;
        for c in 0..k {
            let v = (row[c] - lse).exp();
            q[(l, c)] = v;
            sum += v;
        }
        for c in 0..k {
            q[(l, c)] /= sum;
        }
    }
    Ok(PosteriorMatrix { q })
}

/// Mixing weights as the multiplicity-weighted column means of the
/// posterior.
pub fn update_mixing(q: &PosteriorMatrix, multiplicities: &[f64]) -> Result<Vec<f64>> {
    if multiplicities.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: q.len(),
            found: multiplicities.len(),
        });
    }
    let total: f64 = multiplicities.iter().sum();
    let mut beta = vec![0.0f64; q.k()];
    for (l, &w) in multiplicities.iter().enumerate() {
        for (k, b) in beta.iter_mut().enumerate() {
            *b += w * q.matrix()[(l, k)];
        }
    }
    for b in &mut beta {
        *b /= total;
    }
    Ok(beta)
}

/// One M-step: each posterior column becomes the weight vector of a weighted
/// LSR solve warm-started at the previous component estimate.
///
/// A column with vanishing mass cannot support a solve; that component is
/// reseeded at a small Gaussian perturbation of the heaviest component (the
/// one currently explaining the most data) and skipped this round, with a
/// warning on stderr. The next E-step gives it fresh posteriors.
pub fn m_step<R: Rng + ?Sized>(
    dataset: &RankingDataset,
    q: &PosteriorMatrix,
    prev: &MixtureParams,
    lsr_tol: f64,
    lsr_max_iter: usize,
    rng: &mut R,
) -> Result<Vec<PLParams>> {
    if q.len() != dataset.len() {
        return Err(Error::DimensionMismatch {
            expected: dataset.len(),
            found: q.len(),
        });
    }
    if prev.k() != q.k() {
        return Err(Error::DimensionMismatch {
            expected: q.k(),
            found: prev.k(),
        });
    }
    let mult = dataset.multiplicities();
    let total: f64 = mult.iter().sum();
    let masses: Vec<f64> = (0..q.k())
        .map(|k| (0..q.len()).map(|l| mult[l] * q.matrix()[(l, k)]).sum())
        .collect();
    let heaviest = masses
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let mut out = Vec::with_capacity(q.k());
    for (k, &mass) in masses.iter().enumerate() {
        if mass < DEGENERATE_MASS_FRACTION * total {
            eprintln!(
                "warning: component {k} starved (posterior mass {mass:.3e}); reseeding near component {heaviest}"
            );
            let seed: Vec<f64> = prev
                .component(heaviest)
                .theta()
                .iter()
                .map(|&t| t + 0.1 * rng.sample::<f64, _>(StandardNormal))
                .collect();
            out.push(PLParams::new(seed)?);
            continue;
        }
        let warm = prev.component(k);
        let theta = weighted_lsr(
            dataset,
            &q.column_vec(k),
            Some(&warm),
            lsr_tol,
            lsr_max_iter,
        )
        .map_err(|e| e.in_component(k))?;
        out.push(theta);
    }
    Ok(out)
}

fn assemble(components: Vec<PLParams>, beta: Vec<f64>) -> Result<MixtureParams> {
    let n = components[0].len();
    let k = components.len();
    let thetas = DMatrix::from_fn(n, k, |i, c| components[c].theta()[i]);
    MixtureParams::new(thetas, beta)
}

/// Spectral starting point: pairwise embedding, subspace clustering, then a
/// per-cluster least-squares fit. Mixing weights start at the cluster share
/// of observations. `threshold` overrides the rank-selection gap threshold
/// (the scale-based default otherwise).
pub fn spectral_init<R: Rng + ?Sized>(
    dataset: &RankingDataset,
    k: usize,
    link: Link,
    threshold: Option<f64>,
    rng: &mut R,
) -> Result<MixtureParams> {
    if k == 0 {
        return Err(Error::param("k", "need at least one component"));
    }
    let x = embed_pairwise(dataset)?;
    let rows = x.nrows();
    let t = match threshold {
        Some(t) => {
            if !t.is_finite() || t < 0.0 {
                return Err(Error::param("threshold", "must be finite and nonnegative"));
            }
            t
        }
        None => default_threshold(dataset.n(), rows)?,
    };
    let assignment = spectral_cluster(&x, k, t, rng)?;

    // Embedded rows repeat each ranking `multiplicity` times in order, and
    // identical rows land in the same cluster, so the first copy's label is
    // the ranking's label.
    let mut labels = Vec::with_capacity(dataset.len());
    let mut row = 0usize;
    for &w in dataset.multiplicities() {
        labels.push(assignment.labels[row]);
        row += w.round() as usize;
    }

    let mut components = Vec::with_capacity(k);
    let mut beta = Vec::with_capacity(k);
    let total: f64 = dataset.multiplicities().iter().sum();
    for c in 0..k {
        let members: Vec<usize> = (0..dataset.len()).filter(|&l| labels[l] == c).collect();
        if members.is_empty() {
            return Err(Error::param(
                "k",
                format!("cluster {c} received no rankings"),
            ));
        }
        let weight: f64 = members.iter().map(|&l| dataset.multiplicities()[l]).sum();
        let theta = fit_component(dataset, &members, link, None).map_err(|e| e.in_component(c))?;
        components.push(theta);
        beta.push(weight / total);
    }
    assemble(components, beta)
}

/// Baseline initializer: independent standard-normal utility columns
/// (mean-centered) and uniform mixing weights.
pub fn random_init<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<MixtureParams> {
    if k == 0 {
        return Err(Error::param("k", "need at least one component"));
    }
    let thetas = DMatrix::from_fn(n, k, |_, _| rng.sample::<f64, _>(StandardNormal));
    MixtureParams::new(thetas, vec![1.0 / k as f64; k])
}

/// How `fit_em` obtains its starting mixture.
#[derive(Debug, Clone)]
pub enum InitKind {
    Spectral,
    Random,
    Provided(MixtureParams),
}

/// Which initializer produced a fit, for reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitLabel {
    Spectral,
    Random,
    Provided,
}

impl std::fmt::Display for InitLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            InitLabel::Spectral => write!(f, "spectral"),
            InitLabel::Random => write!(f, "random"),
            InitLabel::Provided => write!(f, "provided"),
        }
    }
}

/// Tuning knobs for `fit_em`.
#[derive(Debug, Clone)]
pub struct EmConfig {
    pub init: InitKind,
    pub link: Link,
    /// Relative log-likelihood improvement below which EM stops.
    pub em_tol: f64,
    pub max_em_iter: usize,
    /// Inner weighted-LSR solve tolerance (sup norm on theta).
    pub lsr_tol: f64,
    pub lsr_max_iter: usize,
    pub seed: u64,
    /// Keep the initial mixing weights for the whole run instead of
    /// re-estimating them each iteration.
    pub fix_beta: bool,
    /// Override for the spectral rank-selection threshold.
    pub threshold: Option<f64>,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig {
            init: InitKind::Spectral,
            link: Link::Logit,
            em_tol: 1e-8,
            max_em_iter: 200,
            lsr_tol: 1e-8,
            lsr_max_iter: 100,
            seed: 0,
            fix_beta: false,
            threshold: None,
        }
    }
}

/// Everything a fit produced: the mixture, the per-iteration marginal
/// log-likelihood trace (entry 0 scores the initializer), and run metadata.
#[derive(Debug, Clone)]
pub struct FitReport {
    pub mix: MixtureParams,
    pub loglik_trace: Vec<f64>,
    /// EM iterations performed, `loglik_trace.len() - 1`.
    pub n_iter: usize,
    pub converged: bool,
    pub init: InitLabel,
    pub seed: u64,
    /// Wall-clock seconds for the whole fit, initialization included.
    pub wall_time: f64,
}

/// Fits a `k`-component mixture by EM with exact weighted-MLE M-steps.
/// Stops when the relative improvement of the marginal log-likelihood falls
/// below `em_tol`, or after `max_em_iter` iterations.
pub fn fit_em(dataset: &RankingDataset, k: usize, config: &EmConfig) -> Result<FitReport> {
    if k == 0 {
        return Err(Error::param("k", "need at least one component"));
    }
    if dataset.len() < k {
        return Err(Error::param(
            "k",
            format!("{k} components but only {} rankings", dataset.len()),
        ));
    }
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (mut mix, label) = match &config.init {
        InitKind::Spectral => (
            spectral_init(dataset, k, config.link, config.threshold, &mut rng)?,
            InitLabel::Spectral,
        ),
        InitKind::Random => (random_init(dataset.n(), k, &mut rng)?, InitLabel::Random),
        InitKind::Provided(m) => {
            if m.n() != dataset.n() {
                return Err(Error::DimensionMismatch {
                    expected: dataset.n(),
                    found: m.n(),
                });
            }
            if m.k() != k {
                return Err(Error::DimensionMismatch {
                    expected: k,
                    found: m.k(),
                });
            }
            (m.clone(), InitLabel::Provided)
        }
    };
    let mut trace = vec![mixture_log_likelihood(dataset, &mix)];
    let mut converged = false;
    for _ in 0..config.max_em_iter {
        let q = e_step(dataset, &mix)?;
        let components = m_step(
            dataset,
            &q,
            &mix,
            config.lsr_tol,
            config.lsr_max_iter,
            &mut rng,
        )?;
        let beta = if config.fix_beta {
            mix.beta().to_vec()
        } else {
            update_mixing(&q, dataset.multiplicities())?
        };
        mix = assemble(components, beta)?;
        let ll = mixture_log_likelihood(dataset, &mix);
        let prev = *trace.last().expect("trace starts non-empty");
        trace.push(ll);
        if ll - prev <= config.em_tol * prev.abs().max(1.0) {
            converged = true;
            break;
        }
    }
    Ok(FitReport {
        mix,
        n_iter: trace.len() - 1,
        loglik_trace: trace,
        converged,
        init: label,
        seed: config.seed,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// Bayesian information criterion from raw ingredients: `k` mean-centered
/// utility columns contribute `n - 1` free parameters each and the mixing
/// weights `k - 1` more.
pub fn bic_score(n: usize, k: usize, m_val: f64, loglik: f64) -> f64 {
    let d = (k * (n - 1) + (k - 1)) as f64;
    d * m_val.ln() - 2.0 * loglik
}

/// BIC of a fitted mixture on held-out data; lower is better.
pub fn bic(fit: &FitReport, validation: &RankingDataset) -> Result<f64> {
    if validation.n() != fit.mix.n() {
        return Err(Error::DimensionMismatch {
            expected: fit.mix.n(),
            found: validation.n(),
        });
    }
    let loglik = mixture_log_likelihood(validation, &fit.mix);
    Ok(bic_score(
        fit.mix.n(),
        fit.mix.k(),
        validation.total_weight(),
        loglik,
    ))
}

/// One row of a [`select_k`] sweep: the component count tried, its fitted
/// report, and the validation BIC.
pub type ScoredCandidate = (usize, FitReport, f64);

/// Fits every candidate component count on `train`, scores each on
/// `validation` by BIC, and returns the winner (ties break toward the
/// smaller count) along with all per-candidate reports.
pub fn select_k(
    train: &RankingDataset,
    validation: &RankingDataset,
    k_candidates: &[usize],
    config: &EmConfig,
) -> Result<(usize, Vec<ScoredCandidate>)> {
    if k_candidates.is_empty() {
        return Err(Error::param("k_candidates", "no candidate counts"));
    }
    let mut reports = Vec::with_capacity(k_candidates.len());
    let mut best: Option<(usize, f64)> = None;
    for &k in k_candidates {
        let fit = fit_em(train, k, config)?;
        let score = bic(&fit, validation)?;
        match best {
            Some((_, s)) if score >= s => {}
            _ => best = Some((k, score)),
        }
        reports.push((k, fit, score));
    }
    Ok((best.expect("nonempty candidates").0, reports))
}
