//! Rankings need not mention every item: a ranking over a subset is scored
//! as a full ranking of that subset, which is exactly the restriction the
//! choice axiom prescribes. Restricting samples to random subsets therefore
//! leaves the estimator consistent, as long as the subsets tie all items
//! together.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use plmix::{sample_pl, weighted_lsr, PLParams, Ranking, RankingDataset};

fn main() -> plmix::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let n = 6;
    let truth = PLParams::new(vec![1.2, 0.7, 0.2, -0.2, -0.7, -1.2])?;

    let m = 12000;
    let mut rankings = Vec::with_capacity(m);
    for _ in 0..m {
        let full = sample_pl(&truth, &mut rng);
        let keep = sample(&mut rng, n, 3).into_vec();
        let partial: Vec<usize> = full
            .items()
            .iter()
            .copied()
            .filter(|i| keep.contains(i))
            .collect();
        rankings.push(Ranking::new(partial)?);
    }
    let dataset = RankingDataset::new(n, rankings)?;

    let q = vec![1.0; m];
    let theta = weighted_lsr(&dataset, &q, None, 1e-10, 100)?;
    println!("true utilities:   {:?}", truth.theta());
    println!(
        "from 3-item rankings: {:?}",
        theta
            .theta()
            .iter()
            .map(|t| (t * 1e3).round() / 1e3)
            .collect::<Vec<_>>(),
    );

    let worst = theta
        .theta()
        .iter()
        .zip(truth.theta())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    println!("max absolute error: {worst:.3}");
    Ok(())
}
