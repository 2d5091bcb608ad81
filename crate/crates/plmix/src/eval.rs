//! Recovery metrics and the synthetic experiment runner.
//!
//! Mixture components are identifiable only up to relabeling, so parameter
//! error is measured as the Frobenius distance after the best bijective
//! component matching, and clustering error as the complement of the best
//! label agreement.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::assignment::min_cost_assignment;
use crate::cluster::misclustering_rate;
use crate::em::{
    e_step, fit_em, random_init, select_k, spectral_init, EmConfig, InitKind, InitLabel,
};
use crate::error::{Error, Result};
use crate::least_squares::Link;
use crate::model::{generate_top_l, mixture_log_likelihood, sample_mixture, MixtureParams};

/// Relabeling-minimal Frobenius distance between two mixtures' utility
/// matrices (columns mean-centered first). Zero iff the mixtures agree up to
/// component order.
pub fn dist_metric(a: &MixtureParams, b: &MixtureParams) -> Result<f64> {
    if a.n() != b.n() {
        return Err(Error::DimensionMismatch {
            expected: b.n(),
            found: a.n(),
        });
    }
    if a.k() != b.k() {
        return Err(Error::DimensionMismatch {
            expected: b.k(),
            found: a.k(),
        });
    }
    let n = a.n();
    let k = a.k();
    let centered = |m: &MixtureParams, c: usize| -> Vec<f64> {
        let col = m.thetas().column(c);
        let mean = col.sum() / n as f64;
        col.iter().map(|x| x - mean).collect()
    };
    let cost = nalgebra::DMatrix::from_fn(k, k, |i, j| {
        let ci = centered(a, i);
        let cj = centered(b, j);
        ci.iter()
            .zip(&cj)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
    });
    let (_, total) = min_cost_assignment(&cost);
    Ok(total.max(0.0).sqrt())
}

fn default_em_tol() -> f64 {
    1e-8
}
fn default_max_em_iter() -> usize {
    200
}
fn default_lsr_tol() -> f64 {
    1e-8
}
fn default_lsr_max_iter() -> usize {
    100
}
fn default_repetitions() -> usize {
    1
}
fn default_run_em() -> bool {
    true
}
fn default_init() -> InitLabel {
    InitLabel::Spectral
}
fn default_link() -> Link {
    Link::Logit
}
fn default_val_fraction() -> f64 {
    0.2
}

/// Knobs of one synthetic recovery experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n: usize,
    pub k: usize,
    /// Number of informative utility coordinates in the generator.
    pub l: usize,
    /// Training rankings per repetition.
    pub m: usize,
    pub seed: u64,
    #[serde(default = "default_init")]
    pub init: InitLabel,
    #[serde(default = "default_link")]
    pub link: Link,
    #[serde(default = "default_em_tol")]
    pub em_tol: f64,
    #[serde(default = "default_max_em_iter")]
    pub max_em_iter: usize,
    #[serde(default = "default_lsr_tol")]
    pub lsr_tol: f64,
    #[serde(default = "default_lsr_max_iter")]
    pub lsr_max_iter: usize,
    /// Component counts to choose among per repetition; the generator's `k`
    /// is used directly when absent.
    #[serde(default)]
    pub k_candidates: Option<Vec<usize>>,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    /// Run the EM refinement after initialization (initialization alone
    /// otherwise).
    #[serde(default = "default_run_em")]
    pub run_em: bool,
    /// Held-out fraction used for the validation log-likelihood.
    #[serde(default = "default_val_fraction")]
    pub val_fraction: f64,
    /// Spectral rank-selection threshold override.
    #[serde(default)]
    pub threshold: Option<f64>,
}

impl ExperimentConfig {
    fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::param("n", "need at least 2 items"));
        }
        if self.k == 0 || self.m == 0 || self.repetitions == 0 {
            return Err(Error::param("config", "counts must be at least 1"));
        }
        if self.l == 0 || self.l > self.n {
            return Err(Error::param(
                "l",
                format!("l = {} must lie in 1..={}", self.l, self.n),
            ));
        }
        if !(self.val_fraction > 0.0 && self.val_fraction < 1.0) {
            return Err(Error::param("val_fraction", "must lie in (0, 1)"));
        }
        if let Some(cands) = &self.k_candidates {
            if cands.is_empty() || cands.contains(&0) {
                return Err(Error::param("k_candidates", "candidates must be >= 1"));
            }
        }
        Ok(())
    }

    fn em_config(&self, init: InitKind, seed: u64) -> EmConfig {
        EmConfig {
            init,
            link: self.link,
            em_tol: self.em_tol,
            max_em_iter: self.max_em_iter,
            lsr_tol: self.lsr_tol,
            lsr_max_iter: self.lsr_max_iter,
            seed,
            fix_beta: false,
            threshold: self.threshold,
        }
    }
}

/// One repetition's metrics; mirrors one CSV row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalRow {
    pub seed: u64,
    pub n: usize,
    pub k: usize,
    pub l: usize,
    pub m: usize,
    pub init: InitLabel,
    pub dist_init: f64,
    pub dist_final: f64,
    pub miscluster: f64,
    pub loglik_val: f64,
    pub runtime_s: f64,
}

/// Single-fit metrics, the `eval` command's output shape.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub dist: f64,
    pub misclustering: Option<f64>,
    pub loglik_train: Option<f64>,
    pub loglik_val: Option<f64>,
    pub runtime_s: f64,
}

/// Runs `repetitions` independent recovery experiments: draw a ground-truth
/// mixture, sample rankings, initialize (and optionally EM-refine), then
/// score parameter distance, clustering error against the latent labels, and
/// held-out log-likelihood. Repetition `r` uses seed `seed + r`; a failed
/// repetition is reported on stderr and skipped rather than aborting the
/// sweep.
///
/// With `k_candidates` set, each repetition instead selects the component
/// count by validation BIC; parameter metrics are only defined when the
/// chosen count matches the generator and are NaN otherwise, and the
/// initializer's distance is not tracked (NaN).
pub fn run_synthetic(config: &ExperimentConfig) -> Result<Vec<EvalRow>> {
    config.validate()?;
    let mut rows = Vec::with_capacity(config.repetitions);
    for r in 0..config.repetitions {
        let rep_seed = config.seed.wrapping_add(r as u64);
        match run_one(config, rep_seed) {
            Ok(row) => rows.push(row),
            Err(e) => eprintln!("warning: repetition with seed {rep_seed} failed: {e}"),
        }
    }
    Ok(rows)
}

fn run_one(config: &ExperimentConfig, seed: u64) -> Result<EvalRow> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let truth = generate_top_l(config.n, config.l, config.k, &mut rng)?;
    let (train, z_star) = sample_mixture(&truth, config.m, &mut rng)?;
    let m_val = ((config.m as f64) * config.val_fraction).ceil() as usize;
    let (val, _) = sample_mixture(&truth, m_val.max(1), &mut rng)?;

    let start = std::time::Instant::now();
    if let Some(cands) = &config.k_candidates {
        let em = config.em_config(init_kind_of(config.init), seed);
        let (chosen, reports) = select_k(&train, &val, cands, &em)?;
        let (_, report, _) = reports
            .into_iter()
            .find(|(k, _, _)| *k == chosen)
            .expect("winner is among the reports");
        let runtime_s = start.elapsed().as_secs_f64();
        let matches_truth = chosen == config.k;
        let (dist_final, miscluster) = if matches_truth {
            let labels = e_step(&train, &report.mix)?.hard_labels();
            (
                dist_metric(&report.mix, &truth)?,
                misclustering_rate(&labels, &z_star, config.k)?,
            )
        } else {
            (f64::NAN, f64::NAN)
        };
        return Ok(EvalRow {
            seed,
            n: config.n,
            k: chosen,
            l: config.l,
            m: config.m,
            init: config.init,
            dist_init: f64::NAN,
            dist_final,
            miscluster,
            loglik_val: mixture_log_likelihood(&val, &report.mix),
            runtime_s,
        });
    }

    let init_mix = match config.init {
        InitLabel::Spectral => {
            spectral_init(&train, config.k, config.link, config.threshold, &mut rng)?
        }
        InitLabel::Random => random_init(config.n, config.k, &mut rng)?,
        InitLabel::Provided => {
            return Err(Error::param(
                "init",
                "synthetic runs need spectral or random initialization",
            ))
        }
    };
    let dist_init = dist_metric(&init_mix, &truth)?;
    let final_mix = if config.run_em {
        let em = config.em_config(InitKind::Provided(init_mix), seed);
        fit_em(&train, config.k, &em)?.mix
    } else {
        init_mix
    };
    let runtime_s = start.elapsed().as_secs_f64();
    let dist_final = dist_metric(&final_mix, &truth)?;
    let labels = e_step(&train, &final_mix)?.hard_labels();
    let miscluster = misclustering_rate(&labels, &z_star, config.k)?;
    let loglik_val = mixture_log_likelihood(&val, &final_mix);
    Ok(EvalRow {
        seed,
        n: config.n,
        k: config.k,
        l: config.l,
        m: config.m,
        init: config.init,
        dist_init,
        dist_final,
        miscluster,
        loglik_val,
        runtime_s,
    })
}

fn init_kind_of(label: InitLabel) -> InitKind {
    match label {
        InitLabel::Spectral => InitKind::Spectral,
        InitLabel::Random => InitKind::Random,
        InitLabel::Provided => InitKind::Spectral,
    }
}

pub const CSV_HEADER: &str =
    "seed,n,K,L,m,init,dist_init,dist_final,miscluster,loglik_val,runtime_s";

/// Renders sweep rows as CSV. All columns except the wall-clock `runtime_s`
/// are deterministic functions of the seed.
pub fn rows_to_csv(rows: &[EvalRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{:.3}\n",
            row.seed,
            row.n,
            row.k,
            row.l,
            row.m,
            row.init,
            row.dist_init,
            row.dist_final,
            row.miscluster,
            row.loglik_val,
            row.runtime_s,
        ));
    }
    out
}
