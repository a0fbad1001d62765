//! Warping distance against plain positional Hamming on shifted levels.

use ssc_lab::diversity_metrics::{dtw_hamming, positional_hamming};
use ssc_lab::{Level, Segment, Tile};

fn level(s: &str) -> Level {
    let tile = |c| match c {
        'A' => Tile::Ground,
        'B' => Tile::Block,
        _ => Tile::Pipe,
    };
    Level::new(s.chars().map(|c| Segment::filled(1, 1, tile(c))).collect()).unwrap()
}

fn main() -> ssc_lab::Result<()> {
    let (a, b) = (level("ABCABC"), level("BCABCA"));
    println!("positional hamming: {}", positional_hamming(&a, &b)?);
    for window in 0..=3 {
        println!("dtw, band {window}: {}", dtw_hamming(&a, &b, window)?);
    }
    Ok(())
}
