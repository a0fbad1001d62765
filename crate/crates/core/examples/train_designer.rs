//! Train a small designer with REINFORCE and measure how closed its state
//! space is on fresh rollouts.

use ssc_lab::designers::{moving_average, train};
use ssc_lab::latent_mdp::{extract_states, rollout_seeded};
use ssc_lab::seed::rng_from_seed;
use ssc_lab::segment_codec::LinearDecoder;
use ssc_lab::ssc_analysis::{assess_continuous, categorize_states, default_epsilon, CategorizedStates};
use ssc_lab::{Decoder, EpisodeConfig, PolicyNetwork, RewardConfig, TrainConfig};

fn main() -> ssc_lab::Result<()> {
    let (n, h, d) = (2, 25, 8);
    let decoder = Decoder::Linear(LinearDecoder::new(d, 14, 16, 11)?);
    let episode = EpisodeConfig::new(n, h, 0.9, d, 0)?;
    let reward = RewardConfig::with_window(n);
    let cfg = TrainConfig {
        total_steps: 10_000,
        hidden: 32,
        seed: 5,
        ..TrainConfig::default()
    };
    let net = PolicyNetwork::init_random(n * d, cfg.hidden, d, cfg.sigma, &mut rng_from_seed(1));
    let outcome = train(net, &decoder, &reward, &episode, &cfg)?;

    let smooth = moving_average(&outcome.curve, 50);
    for i in (0..smooth.len()).step_by(smooth.len() / 8) {
        println!("episode {i:>4}  mean reward {:.3}", smooth[i]);
    }

    let designer = outcome.eval_designer();
    let mut cats = CategorizedStates::default();
    for seed in 0..50 {
        let t = rollout_seeded(&designer, &decoder, &reward, &episode, 2 * h, seed)?;
        cats.extend(categorize_states(&extract_states(&t), n, h));
    }
    let report = assess_continuous(&cats, n, h, default_epsilon(n, d), 0.01)?;
    print!("{}", report.to_text());
    Ok(())
}
