//! The weighted solver on its own: the same rankings pull the estimate
//! toward whichever of them carry the weight.

use plmix::{weighted_log_likelihood, weighted_lsr, Ranking, RankingDataset};

fn main() -> plmix::Result<()> {
    let rankings = vec![
        Ranking::new(vec![0, 1, 2])?,
        Ranking::new(vec![2, 1, 0])?,
        Ranking::new(vec![1, 0, 2])?,
    ];
    let dataset = RankingDataset::new(3, rankings)?;

    for (label, q) in [
        ("uniform weights", vec![1.0, 1.0, 1.0]),
        ("favor 0 > 1 > 2", vec![5.0, 0.2, 1.0]),
        ("favor 2 > 1 > 0", vec![0.2, 5.0, 1.0]),
    ] {
        let theta = weighted_lsr(&dataset, &q, None, 1e-10, 100)?;
        println!(
            "{label}: theta = {:?}, weighted log-likelihood = {:.4}",
            theta
                .theta()
                .iter()
                .map(|t| (t * 1e4).round() / 1e4)
                .collect::<Vec<_>>(),
            weighted_log_likelihood(&dataset, &q, &theta)?,
        );
    }

    // Warm starts land on the same fixed point; they just get there sooner.
    let q = vec![5.0, 0.2, 1.0];
    let cold = weighted_lsr(&dataset, &q, None, 1e-10, 100)?;
    let warm = weighted_lsr(&dataset, &q, Some(&cold), 1e-10, 100)?;
    let drift = cold
        .theta()
        .iter()
        .zip(warm.theta())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    println!("warm restart drift from the cold solution: {drift:.2e}");

    let single = RankingDataset::new(3, vec![Ranking::new(vec![0, 1, 2])?])?;
    match weighted_lsr(&single, &[1.0], None, 1e-10, 100) {
        Err(e) => println!("one ranking alone: {e}"),
        Ok(_) => unreachable!("a single ranking cannot be beaten in both directions"),
    }
    Ok(())
}
