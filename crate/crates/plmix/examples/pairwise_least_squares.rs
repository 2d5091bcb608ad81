//! The closed-form half of the pipeline: empirical pairwise preference
//! probabilities, pushed through a link into utility differences, then
//! averaged into utilities. No iteration anywhere.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use plmix::{
    estimate_pairwise, least_squares_fit, link_transform, sample_pl, Link, PLParams, RankingDataset,
};

fn main() -> plmix::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let truth = PLParams::new(vec![1.0, 0.4, 0.0, -0.4, -1.0])?;

    let m = 20000;
    let rankings: Vec<_> = (0..m).map(|_| sample_pl(&truth, &mut rng)).collect();
    let dataset = RankingDataset::new(5, rankings)?;
    let all: Vec<usize> = (0..m).collect();

    let pairwise = estimate_pairwise(&dataset, &all)?;
    println!(
        "P(0 beats 4) empirical {:.4}, model {:.4}",
        pairwise.probs()[(0, 4)],
        1.0 / (1.0 + (truth.theta()[4] - truth.theta()[0]).exp()),
    );

    for link in [Link::Logit, Link::Probit] {
        let phi = link_transform(&pairwise, link, 1e-4)?;
        let theta = least_squares_fit(&phi)?;
        let err = theta
            .theta()
            .iter()
            .zip(truth.theta())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        println!("{link} link: theta = {:?}", round4(theta.theta()));
        if link == Link::Logit {
            println!("  max error against the generator: {err:.3}");
        } else {
            // Samples come from the logistic model, so the probit fit is a
            // deliberate misspecification; it still gets the order right.
            println!("  (misspecified on purpose; same ordering, shrunk scale)");
        }
    }
    Ok(())
}

fn round4(xs: &[f64]) -> Vec<f64> {
    xs.iter().map(|x| (x * 1e4).round() / 1e4).collect()
}
