//! The release gate, one test per guaranteed property. Each test prints a
//! single summary line with the measured quantity next to its bound, so a
//! full run reads as a checklist.

mod common;

use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use plmix::least_squares::{least_squares_fit, TransformedMatrix};
use plmix::lsr::{build_chain, expand_weights};
use plmix::{
    choice_breaking, default_threshold, dist_metric, embed_pairwise, fit_component, fit_em,
    generate_top_l, misclustering_rate, parse_soc, random_init, sample_mixture, sample_pl,
    select_k, spectral_cluster, spectral_init, weighted_lsr, write_soc, EmConfig, InitKind, Link,
    MixtureParams, PLParams, Ranking, RankingDataset,
};

/// Agreement bound between the spectral solver and the gradient oracle.
const SOLVER_VS_ORACLE_TOL: f64 = 1e-4;
/// Stationarity residual bound at any converged solution.
const STATIONARITY_TOL: f64 = 1e-8;
/// Allowed round-off on EM's monotone likelihood climb.
const EM_BACKSLIDE_TOL: f64 = -1e-6;
/// Exact-input recovery bound for the least-squares step.
const EXACT_RECOVERY_TOL: f64 = 1e-10;
/// Consistency bound for a single-component fit at 20000 samples.
const SINGLE_COMPONENT_L2_TOL: f64 = 0.05;
/// Mean misclustering bound in the well-separated regime.
const MISCLUSTER_MEAN_TOL: f64 = 0.05;
/// Window around the ideal 4x-samples-halves-error ratio of 2.
const SCALING_RATIO_RANGE: (f64, f64) = (1.4, 2.8);
/// Smallest acceptable chi-square p-value for the sampler.
const SAMPLER_P_FLOOR: f64 = 0.001;

/// One random small instance: a handful of rankings with positive weights,
/// resampled until every item both wins and loses somewhere.
fn small_weighted_instance(seed: u64) -> (RankingDataset, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..500 {
        let n = [3, 4, 5][rng.gen_range(0..3)];
        let m = rng.gen_range(5..=20);
        let theta = PLParams::new((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let rankings: Vec<Ranking> = (0..m).map(|_| sample_pl(&theta, &mut rng)).collect();
        let dataset = RankingDataset::new(n, rankings).unwrap();
        let q: Vec<f64> = (0..m).map(|_| 1.0 - rng.gen::<f64>()).collect();
        if common::oracle_connected(&dataset, &q) {
            return (dataset, q);
        }
    }
    unreachable!("rejection sampling should find a connected instance quickly");
}

#[test]
fn weighted_solver_matches_independent_mle_oracle() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for seed in 0..50 {
        let (dataset, q) = small_weighted_instance(1000 + seed);
        let solved = weighted_lsr(&dataset, &q, None, 1e-10, 100).unwrap();
        let oracle = common::oracle_mle(&dataset, &q, 1e-10);
        let gap = solved
            .theta()
            .iter()
            .zip(&oracle)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        worst = worst.max(gap);
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(
        worst <= SOLVER_VS_ORACLE_TOL,
        "worst solver-vs-oracle gap {worst:.3e} exceeds {SOLVER_VS_ORACLE_TOL:.1e}"
    );
    assert!(
        elapsed < 60.0,
        "50 instances took {elapsed:.1}s, budget 60s"
    );
    println!(
        "pass: weighted solver vs gradient oracle, max gap {worst:.2e} <= {SOLVER_VS_ORACLE_TOL:.0e} over 50 instances ({elapsed:.1}s)"
    );
}

/// Residual of `p(theta)` against the chain rebuilt at `theta` itself.
fn stationarity_residual(dataset: &RankingDataset, q: &[f64], theta: &PLParams) -> f64 {
    let q_eff: Vec<f64> = q
        .iter()
        .zip(dataset.multiplicities())
        .map(|(a, b)| a * b)
        .collect();
    let lengths: Vec<usize> = dataset.rankings().iter().map(|r| r.len()).collect();
    let w = expand_weights(&q_eff, &lengths).unwrap();
    let breaking = choice_breaking(dataset);
    let chain = build_chain(&breaking, &w, theta).unwrap();
    let mut p: Vec<f64> = theta.theta().iter().map(|t| t.exp()).collect();
    let total: f64 = p.iter().sum();
    for x in &mut p {
        *x /= total;
    }
    let m = chain.matrix();
    let n = chain.n();
    (0..n)
        .map(|j| {
            let image: f64 = (0..n).map(|i| m[(i, j)] * p[i]).sum();
            (image - p[j]).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn converged_solutions_are_stationary_points_of_their_chain() {
    // The same 50 small instances as the oracle comparison...
    let mut worst = 0.0f64;
    for seed in 0..50 {
        let (dataset, q) = small_weighted_instance(1000 + seed);
        let solved = weighted_lsr(&dataset, &q, None, 1e-10, 100).unwrap();
        worst = worst.max(stationarity_residual(&dataset, &q, &solved));
    }
    // ...plus per-component solves at the end of a full EM run on the
    // separated two-component setup.
    let mut rng = ChaCha8Rng::seed_from_u64(2000);
    let mut thetas = DMatrix::zeros(20, 2);
    for c in 0..2 {
        for i in 0..20 {
            thetas[(i, c)] = rng.sample::<f64, _>(StandardNormal);
        }
    }
    let truth = MixtureParams::new(thetas, vec![0.5, 0.5]).unwrap();
    let (dataset, _) = sample_mixture(&truth, 2000, &mut rng).unwrap();
    let config = EmConfig {
        init: InitKind::Spectral,
        seed: 2000,
        ..EmConfig::default()
    };
    let report = fit_em(&dataset, 2, &config).unwrap();
    let posterior = plmix::e_step(&dataset, &report.mix).unwrap();
    for c in 0..2 {
        let q_col: Vec<f64> = (0..dataset.len())
            .map(|l| posterior.matrix()[(l, c)])
            .collect();
        let warm = report.mix.component(c);
        let solved = weighted_lsr(&dataset, &q_col, Some(&warm), 1e-10, 100).unwrap();
        worst = worst.max(stationarity_residual(&dataset, &q_col, &solved));
    }
    assert!(
        worst <= STATIONARITY_TOL,
        "stationarity residual {worst:.3e} exceeds {STATIONARITY_TOL:.1e}"
    );
    println!(
        "pass: stationarity residual at every converged solution {worst:.2e} <= {STATIONARITY_TOL:.0e}"
    );
}

#[test]
fn em_likelihood_climbs_monotonically() {
    let mut worst_dip = 0.0f64;
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(3000 + seed);
        let truth = generate_top_l(10, 10, 2, &mut rng).unwrap();
        let (dataset, _) = sample_mixture(&truth, 500, &mut rng).unwrap();
        let config = EmConfig {
            init: InitKind::Spectral,
            seed: 3000 + seed,
            ..EmConfig::default()
        };
        let report = fit_em(&dataset, 2, &config).unwrap();
        for pair in report.loglik_trace.windows(2) {
            worst_dip = worst_dip.min(pair[1] - pair[0]);
        }
    }
    assert!(
        worst_dip >= EM_BACKSLIDE_TOL,
        "log-likelihood dipped by {worst_dip:.3e}, below {EM_BACKSLIDE_TOL:.1e}"
    );
    println!(
        "pass: EM trace monotone over 20 fits, worst step {worst_dip:.2e} >= {EM_BACKSLIDE_TOL:.0e}"
    );
}

#[test]
fn least_squares_recovers_exact_margins_and_is_consistent() {
    // Noiseless margins invert exactly.
    let mut worst_exact = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(4000);
    for trial in 0..20 {
        let n = 3 + (trial % 10);
        let truth = PLParams::new((0..n).map(|_| rng.gen_range(-2.0..2.0)).collect()).unwrap();
        let phi = DMatrix::from_fn(n, n, |i, j| truth.theta()[i] - truth.theta()[j]);
        let fitted = least_squares_fit(&TransformedMatrix::from_matrix(phi).unwrap()).unwrap();
        let gap = fitted
            .theta()
            .iter()
            .zip(truth.theta())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        worst_exact = worst_exact.max(gap);
    }
    assert!(
        worst_exact < EXACT_RECOVERY_TOL,
        "exact-margin recovery error {worst_exact:.3e} not below {EXACT_RECOVERY_TOL:.1e}"
    );

    // A single component estimated from samples lands close in Euclidean
    // norm once the sample is large.
    let raw: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mean = raw.iter().sum::<f64>() / 8.0;
    let max_abs = raw.iter().map(|t| (t - mean).abs()).fold(0.0f64, f64::max);
    let truth = PLParams::new(raw.iter().map(|t| (t - mean) * 0.9 / max_abs).collect()).unwrap();
    let m = 20000;
    let rankings: Vec<Ranking> = (0..m).map(|_| sample_pl(&truth, &mut rng)).collect();
    let dataset = RankingDataset::new(8, rankings).unwrap();
    let members: Vec<usize> = (0..m).collect();
    let fitted = fit_component(&dataset, &members, Link::Logit, None).unwrap();
    let l2 = fitted
        .theta()
        .iter()
        .zip(truth.theta())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    assert!(
        l2 <= SINGLE_COMPONENT_L2_TOL,
        "single-component fit error {l2:.4} exceeds {SINGLE_COMPONENT_L2_TOL}"
    );
    println!(
        "pass: least squares exact to {worst_exact:.2e}, consistent to l2 {l2:.3} <= {SINGLE_COMPONENT_L2_TOL} at 20000 samples"
    );
}

/// Standard-normal utilities for both components, uniform mixing.
fn separated_pair(n: usize, seed: u64) -> (MixtureParams, ChaCha8Rng) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut thetas = DMatrix::zeros(n, 2);
    for c in 0..2 {
        for i in 0..n {
            thetas[(i, c)] = rng.sample::<f64, _>(StandardNormal);
        }
    }
    (MixtureParams::new(thetas, vec![0.5, 0.5]).unwrap(), rng)
}

#[test]
fn spectral_clustering_recovers_latent_components() {
    let start = Instant::now();
    let mut total = 0.0;
    for seed in 0..10 {
        let (truth, mut rng) = separated_pair(20, 2000 + seed);
        let (dataset, z) = sample_mixture(&truth, 2000, &mut rng).unwrap();
        let x = embed_pairwise(&dataset).unwrap();
        let threshold = default_threshold(20, x.nrows()).unwrap();
        let clusters = spectral_cluster(&x, 2, threshold, &mut rng).unwrap();
        total += misclustering_rate(&clusters.labels, &z, 2).unwrap();
    }
    let mean = total / 10.0;
    let elapsed = start.elapsed().as_secs_f64();
    assert!(
        mean <= MISCLUSTER_MEAN_TOL,
        "mean misclustering {mean:.4} exceeds {MISCLUSTER_MEAN_TOL}"
    );
    assert!(
        elapsed < 120.0,
        "clustering runs took {elapsed:.1}s, budget 120s"
    );
    println!(
        "pass: mean misclustering {mean:.3} <= {MISCLUSTER_MEAN_TOL} over 10 seeds ({elapsed:.1}s)"
    );
}

#[test]
fn estimation_error_scales_as_inverse_square_root_of_samples() {
    let mut dists = [Vec::new(), Vec::new()];
    for (slot, m) in [(0, 2000), (1, 8000)] {
        for seed in 0..10 {
            let (truth, mut rng) = separated_pair(15, 6000 + seed);
            let (dataset, _) = sample_mixture(&truth, m, &mut rng).unwrap();
            let init = spectral_init(&dataset, 2, Link::Logit, None, &mut rng).unwrap();
            dists[slot].push(dist_metric(&init, &truth).unwrap());
        }
    }
    let median = |xs: &mut Vec<f64>| {
        xs.sort_by(f64::total_cmp);
        0.5 * (xs[4] + xs[5])
    };
    let ratio = median(&mut dists[0]) / median(&mut dists[1]);
    let (lo, hi) = SCALING_RATIO_RANGE;
    assert!(
        ratio >= lo && ratio <= hi,
        "error ratio between 2000 and 8000 samples is {ratio:.2}, outside [{lo}, {hi}]"
    );
    println!(
        "pass: quadrupling samples scales median error by {ratio:.2}, inside [{lo}, {hi}] around the ideal 2"
    );
}

#[test]
fn spectral_initialization_beats_random_and_em_improves_it() {
    let mut spectral_wins = 0;
    let mut em_improves = 0;
    for seed in 0..10 {
        let (truth, mut rng) = separated_pair(20, 2000 + seed);
        let (dataset, _) = sample_mixture(&truth, 2000, &mut rng).unwrap();
        let spec = spectral_init(&dataset, 2, Link::Logit, None, &mut rng).unwrap();
        let rand_start = random_init(20, 2, &mut rng).unwrap();
        let d_spec = dist_metric(&spec, &truth).unwrap();
        let d_rand = dist_metric(&rand_start, &truth).unwrap();
        if d_spec < d_rand {
            spectral_wins += 1;
        }
        let config = EmConfig {
            init: InitKind::Provided(spec),
            seed: 2000 + seed,
            ..EmConfig::default()
        };
        let report = fit_em(&dataset, 2, &config).unwrap();
        if dist_metric(&report.mix, &truth).unwrap() <= d_spec {
            em_improves += 1;
        }
    }
    assert!(
        spectral_wins >= 8,
        "spectral start beat random in only {spectral_wins}/10 seeds"
    );
    assert!(
        em_improves >= 9,
        "EM improved on its start in only {em_improves}/10 seeds"
    );
    println!(
        "pass: spectral start beats random {spectral_wins}/10, EM improves its start {em_improves}/10"
    );
}

#[test]
fn validation_bic_selects_the_true_component_count() {
    let n = 10;
    let spread: Vec<f64> = (0..n)
        .map(|i| 1.2 - (i as f64) * 2.4 / (n - 1) as f64)
        .collect();
    let mut thetas = DMatrix::zeros(n, 2);
    for i in 0..n {
        thetas[(i, 0)] = spread[i];
        thetas[(i, 1)] = -spread[i];
    }
    let truth = MixtureParams::new(thetas, vec![0.5, 0.5]).unwrap();

    let mut correct = 0;
    for seed in 0..10 {
        let mut rng = ChaCha8Rng::seed_from_u64(8000 + seed);
        let (dataset, _) = sample_mixture(&truth, 4000, &mut rng).unwrap();
        let idx: Vec<usize> = (0..4000).collect();
        let train = dataset.subset(&idx[..3200]).unwrap();
        let val = dataset.subset(&idx[3200..]).unwrap();
        let config = EmConfig {
            init: InitKind::Spectral,
            seed: 8000 + seed,
            ..EmConfig::default()
        };
        let (best, _) = select_k(&train, &val, &[1, 2, 4], &config).unwrap();
        if best == 2 {
            correct += 1;
        }
    }
    assert!(
        correct >= 8,
        "selected the true count in only {correct}/10 seeds"
    );
    println!("pass: validation BIC picks the generating count in {correct}/10 seeds");
}

#[test]
fn sampler_matches_exact_ranking_probabilities() {
    let theta = [0.7, 0.0, -0.7];
    let params = PLParams::new(theta.to_vec()).unwrap();
    let rankings = common::all_rankings(3);

    // Exact sequential-choice probability, computed from the definition.
    let exact: Vec<f64> = rankings
        .iter()
        .map(|r| {
            let items = r.items();
            let mut p = 1.0;
            for t in 0..2 {
                let denom: f64 = items[t..].iter().map(|&k| theta[k].exp()).sum();
                p *= theta[items[t]].exp() / denom;
            }
            p
        })
        .collect();

    let draws = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(9000);
    let mut counts = vec![0usize; rankings.len()];
    for _ in 0..draws {
        let s = sample_pl(&params, &mut rng);
        let idx = rankings
            .iter()
            .position(|r| r.items() == s.items())
            .unwrap();
        counts[idx] += 1;
    }

    let stat: f64 = counts
        .iter()
        .zip(&exact)
        .map(|(&o, &e)| {
            let expected = e * draws as f64;
            (o as f64 - expected).powi(2) / expected
        })
        .sum();
    let p_value = 1.0 - ChiSquared::new(5.0).unwrap().cdf(stat);
    assert!(
        p_value > SAMPLER_P_FLOOR,
        "chi-square stat {stat:.2} has p-value {p_value:.5}, below {SAMPLER_P_FLOOR}"
    );
    println!("pass: sampler chi-square p-value {p_value:.3} > {SAMPLER_P_FLOOR} on 100000 draws");
}

#[test]
fn election_format_round_trips_and_expands_ties_exactly() {
    // A 1000-ranking file survives write -> parse -> write byte for byte.
    let mut rng = ChaCha8Rng::seed_from_u64(9500);
    let truth = PLParams::new(vec![0.8, 0.4, 0.0, -0.4, -0.8, -0.0]).unwrap();
    let rankings: Vec<Ranking> = (0..1000).map(|_| sample_pl(&truth, &mut rng)).collect();
    let dataset = RankingDataset::new(6, rankings).unwrap();
    let text = write_soc(&dataset);
    let reparsed = parse_soc(&text, &mut rng).unwrap();
    assert_eq!(text, write_soc(&reparsed), "round trip changed the file");
    assert_eq!(reparsed.n(), dataset.n());
    assert_eq!(reparsed.len(), dataset.len());
    for l in 0..dataset.len() {
        assert_eq!(reparsed.ranking(l).items(), dataset.ranking(l).items());
        assert_eq!(reparsed.multiplicities()[l], dataset.multiplicities()[l]);
    }

    // A three-way tie expands into all six linear extensions at equal
    // weight, a two-way tie into both orders.
    let tied = "# NUMBER ALTERNATIVES: 3\n6: {1,2,3}\n1: 1,{2,3}\n";
    let expanded = parse_soc(tied, &mut rng).unwrap();
    let key =
        |a: &(Vec<usize>, f64), b: &(Vec<usize>, f64)| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1));
    let mut got: Vec<(Vec<usize>, f64)> = (0..expanded.len())
        .map(|l| {
            (
                expanded.ranking(l).items().to_vec(),
                expanded.multiplicities()[l],
            )
        })
        .collect();
    got.sort_by(key);
    let mut want: Vec<(Vec<usize>, f64)> = common::all_rankings(3)
        .iter()
        .map(|r| (r.items().to_vec(), 1.0))
        .chain([(vec![0, 1, 2], 0.5), (vec![0, 2, 1], 0.5)])
        .collect();
    want.sort_by(key);
    let close = got.len() == want.len()
        && got
            .iter()
            .zip(&want)
            .all(|((gi, gw), (wi, ww))| gi == wi && gw == ww);
    assert!(close, "tie expansion mismatch: got {got:?}, want {want:?}");
    println!("pass: 1000-ranking file round trips byte-identically, ties expand exactly");
}
