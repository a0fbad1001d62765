//! Run every pipeline stage for a config file.
//!
//! `cargo run --release --example run_grid -- configs/tiny.toml /tmp/ssc-runs`

use std::path::PathBuf;

use ssc_lab::experiment_harness::{run_all, ExperimentConfig};

fn main() -> ssc_lab::Result<()> {
    let mut args = std::env::args().skip(1);
    let config = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/tiny.toml"));
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("ssc-runs"));

    let cfg = ExperimentConfig::load(&config)?;
    let outcome = run_all(&cfg, &out, None)?;
    println!("run directory: {}", outcome.run_dir.display());
    for entry in &outcome.status.entries {
        println!("{:<16} {:?} {}", entry.cell, entry.stage, if entry.ok { "ok" } else { "FAILED" });
    }
    let summary = std::fs::read_to_string(outcome.run_dir.join("summary.csv"))?;
    print!("{summary}");
    Ok(())
}
