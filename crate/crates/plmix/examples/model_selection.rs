//! Choosing the number of components by validation BIC: fit every candidate
//! on a training split, score each on held-out rankings, keep the smallest
//! count within the best score.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use plmix::{generate_top_l, sample_mixture, select_k, EmConfig, InitKind};

fn main() -> plmix::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let truth = generate_top_l(8, 4, 2, &mut rng)?;
    let (train, _) = sample_mixture(&truth, 2400, &mut rng)?;
    let (val, _) = sample_mixture(&truth, 600, &mut rng)?;

    let config = EmConfig {
        init: InitKind::Spectral,
        seed: 19,
        ..EmConfig::default()
    };
    let (best, reports) = select_k(&train, &val, &[1, 2, 3, 4], &config)?;

    println!("true component count: 2");
    for (k, report, score) in &reports {
        println!(
            "k = {k}: validation BIC {score:10.1}  ({} EM iterations)",
            report.n_iter,
        );
    }
    println!("selected k = {best}");
    Ok(())
}
