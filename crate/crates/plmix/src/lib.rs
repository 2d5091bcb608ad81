//! Mixtures of Plackett-Luce ranking models.
//!
//! A Plackett-Luce model ranks `n` items by repeatedly sampling the next
//! best item with probability proportional to `exp(theta_i)`. This crate
//! fits finite mixtures of such models to observed rankings:
//!
//! * a spectral initializer embeds rankings as pairwise-comparison vectors,
//!   clusters them in a low-rank subspace ([`cluster`]), and fits each
//!   cluster by a closed-form least-squares estimate ([`least_squares`]);
//! * an EM loop refines the mixture, solving every M-step exactly with a
//!   weighted Luce spectral ranking solver, a Markov-chain fixed point
//!   whose stationary distribution is the weighted maximum-likelihood
//!   estimate ([`lsr`], [`em`]);
//! * model selection, synthetic-recovery experiments, and election-file
//!   ingestion round out the toolkit ([`em::select_k`], [`eval`], [`soc`]).
//!
//! The fastest way in is the `examples/` directory; each one runs with
//! `cargo run --example <name>`:
//!
//! * `sample_and_fit`: generate a two-component mixture, sample rankings,
//!   fit with the spectral-EM pipeline, compare against the truth.
//! * `weighted_fit`: the weighted solver on its own, with per-ranking
//!   weights, fixed-point diagnostics, and the log-likelihood it maximizes.
//! * `pairwise_least_squares`: pairwise win probabilities, link
//!   transforms, and the closed-form single-component fit.
//! * `spectral_clustering`: the embedding and subspace clustering stage,
//!   with the gap-based rank selection and misclustering measurement.
//! * `model_selection`: choosing the component count by validation BIC.
//! * `init_comparison`: spectral versus random initialization on the same
//!   data, and what EM does from each.
//! * `election_file`: reading and writing election files, including tied
//!   groups.
//! * `partial_rankings`: top-`s` rankings, what the likelihood sees, and
//!   when the comparison graph disconnects.

pub mod assignment;
pub mod cluster;
pub mod em;
pub mod error;
pub mod eval;
pub mod least_squares;
pub mod lsr;
pub mod model;
pub mod ranking;
pub mod report;
pub mod soc;

pub use cluster::{default_threshold, misclustering_rate, select_rank, spectral_cluster};
pub use em::{
    bic, bic_score, e_step, fit_em, m_step, random_init, select_k, spectral_init, update_mixing,
    EmConfig, FitReport, InitKind, InitLabel, PosteriorMatrix, ScoredCandidate,
};
pub use error::{Error, Result};
pub use eval::{dist_metric, rows_to_csv, run_synthetic, EvalReport, EvalRow, ExperimentConfig};
pub use least_squares::{
    estimate_pairwise, fit_component, least_squares_fit, link_transform, Link,
};
pub use lsr::{
    build_chain, expand_weights, stationary_distribution, weighted_log_likelihood, weighted_lsr,
    WeightedMarkovChain,
};
pub use model::{
    generate_top_l, mixture_log_likelihood, pl_log_likelihood, sample_mixture, sample_pl,
    sample_rum, MixtureParams, NoiseModel, PLParams,
};
pub use ranking::{
    break_ties, choice_breaking, embed_pairwise, ChoiceBreaking, Ranking, RankingDataset,
    RawRankingWithTies,
};
pub use soc::{parse_soc, write_soc};
