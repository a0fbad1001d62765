//! Roll out a random designer and print the level it produces.

use ssc_lab::latent_mdp::{extract_states, rollout_seeded};
use ssc_lab::segment_codec::{level_to_text, LinearDecoder};
use ssc_lab::{Decoder, Designer, EpisodeConfig, RewardConfig};

fn main() -> ssc_lab::Result<()> {
    let (n, d) = (2, 8);
    let decoder = Decoder::Linear(LinearDecoder::new(d, 14, 16, 11)?);
    let config = EpisodeConfig::new(n, 25, 0.9, d, 0)?;
    let reward = RewardConfig::with_window(n);
    let designer = Designer::Random { d };

    let traj = rollout_seeded(&designer, &decoder, &reward, &config, 6, 42)?;
    print!("{}", level_to_text(&traj.level()));
    println!();
    for (step, r) in traj.rewards.iter().enumerate() {
        println!("step {:>2}  reward {r:.3}", step + 1);
    }
    println!("{} observed states", extract_states(&traj).len());
    Ok(())
}
