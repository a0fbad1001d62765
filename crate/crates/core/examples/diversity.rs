//! Per-step MND against k-means references and Div of a periodic designer
//! relative to a random one.

use ssc_lab::diversity_metrics::{div_score, kmeans, per_step_mnd};
use ssc_lab::latent_mdp::rollout_seeded;
use ssc_lab::seed::rng_from_seed;
use ssc_lab::segment_codec::LinearDecoder;
use ssc_lab::{Decoder, Designer, EpisodeConfig, LatentVector, RewardConfig, Trajectory};

fn corpus(designer: &Designer, offset: u64) -> ssc_lab::Result<Vec<Trajectory>> {
    let decoder = Decoder::Linear(LinearDecoder::new(8, 14, 16, 11)?);
    let config = EpisodeConfig::new(2, 25, 0.9, 8, 0)?;
    let reward = RewardConfig::with_window(2);
    (0..40)
        .map(|i| rollout_seeded(designer, &decoder, &reward, &config, 50, offset + i))
        .collect()
}

fn main() -> ssc_lab::Result<()> {
    let random = corpus(&Designer::Random { d: 8 }, 0)?;
    let mut rng = rng_from_seed(1);
    let cycle = (0..4).map(|_| LatentVector::sample_uniform(8, &mut rng)).collect();
    let periodic = corpus(&Designer::periodic(cycle)?, 1000)?;

    let points: Vec<Vec<f64>> = random
        .iter()
        .flat_map(|t| t.latents().map(|z| z.as_slice().to_vec()))
        .collect();
    let fit = kmeans(&points, 10, 100, 7)?;
    println!("k-means objective after {} passes: {:.3}", fit.iterations, fit.objective());

    for (name, trajs) in [("random", &random), ("periodic", &periodic)] {
        let curve = per_step_mnd(trajs, &fit.references)?;
        println!("{name:>8} MND  step 1 {:.3}  step 25 {:.3}  step 50 {:.3}", curve[1], curve[25], curve[50]);
    }

    let levels = |ts: &[Trajectory]| ts.iter().map(Trajectory::level).collect::<Vec<_>>();
    let div = div_score(&levels(&periodic), &levels(&random), 2, 300, 9)?;
    println!("periodic Div {:.3} (baseline mean distance {:.3})", div.div, div.d_m);
    Ok(())
}
