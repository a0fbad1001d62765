//! Endless online level generation as a latent-space MDP.
//!
//! A designer observes the latent vectors of the `n` most recent level
//! segments and emits the next latent vector, which a decoder turns into a
//! tile segment. The crate provides the MDP ([`latent_mdp`]), deterministic
//! decoders and the level text format ([`segment_codec`]), random, scripted
//! and trainable designers ([`designers`]), a novelty-plus-playability reward
//! ([`reward_model`]), state space closure diagnostics ([`ssc_analysis`]),
//! diversity metrics ([`diversity_metrics`]) and a config-driven experiment
//! pipeline ([`experiment_harness`]).

pub mod designers;
pub mod diversity_metrics;
pub mod error;
pub mod experiment_harness;
pub mod latent_mdp;
pub mod reward_model;
pub mod seed;
pub mod segment_codec;
pub mod ssc_analysis;

pub use designers::{Designer, PolicyNetwork, TrainConfig};
pub use error::{Error, Result};
pub use latent_mdp::{DesignerState, EpisodeConfig, LatentVector, Trajectory};
pub use reward_model::{RewardConfig, RewardModel};
pub use segment_codec::{Decoder, Level, Segment, Tile};
