//! Config-driven experiment pipeline.
//!
//! A run lives in a versioned directory `<out>/run-NNN/` (never reused):
//!
//! ```text
//! run-001/
//!   config.toml              resolved configuration
//!   status.json              per-cell, per-stage outcome
//!   summary.csv              reward intervals and Div, one column per cell
//!   cells/gamma=<g>_n=<n>/
//!     designer.ckpt          trained evaluation designer (sigma = 0)
//!     learning_curve.csv     episode,mean_reward,moving_average_100
//!     trajectories.txt       evaluation trajectories
//!     levels.txt             evaluation levels (level text format)
//!     baseline_*.txt         random-designer corpus
//!     closure_report.txt     coverage-based closure report
//!     set_sizes.csv          step,size (distinct sampled states per step)
//!     reward_curve.csv       step,mean,std  (steps 1..=eval_steps)
//!     interval_rewards.csv   lo,hi,mean
//!     mnd.csv                step,mean,std  (steps 0..=eval_steps, over repeats)
//!     mnd_repeats.csv        repeat,step,mnd
//!     div.csv                d_m,mean_pairwise,div,pair_count
//!     scatter.csv            x,y,step,category
//!     reward.svg mnd.svg scatter.svg
//! ```
//!
//! Per-cell seeds are `derive_seed(master, [gamma bits, n])`, so adding or
//! removing cells leaves the others untouched. All parallel work reduces in a
//! fixed order and every CSV is byte-reproducible for a fixed master seed.

mod config;
mod plot;
mod runner;
mod scatter;

pub use config::{Cell, EpisodeBlock, EvaluationBlock, ExperimentConfig, GridBlock};
pub use plot::{plot_curve, plot_scatter, read_curve};
pub use runner::{
    allocate_run_dir, analyze_cell, cell_dir, div_csv, files, generate_cell, latest_run_dir,
    report_cell, run_all, run_stages, summary_table, train_cell, CellContext, CellStatus,
    RunOutcome, RunStatus, Stage,
};
pub use scatter::{emit_scatter, scatter_csv, Projector, ScatterRow};
